// SPDX-License-Identifier: Apache-2.0
#include <radiosim/cli.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    return radiosim::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
