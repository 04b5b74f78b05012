// SPDX-License-Identifier: Apache-2.0
#include <radiosim/util.hpp>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <openssl/evp.h>
#include <openssl/sha.h>

#include <array>
#include <charconv>
#include <chrono>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace radiosim
{

std::string sha256_hex(std::string_view bytes)
{
    auto digest = std::array<unsigned char, SHA256_DIGEST_LENGTH> {};
    auto len = 0u;
    if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    auto out = std::string {};
    for (auto i = 0u; i < len; ++i)
        out += fmt::format("{:02x}", digest[i]);
    return out;
}

std::string base64_encode(std::span<const unsigned char> bytes)
{
    auto out = std::string(4 * ((bytes.size() + 2) / 3) + 1, '\0');
    auto const n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(), static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::string read_file(const std::filesystem::path& path)
{
    auto in = std::ifstream(path, std::ios::binary);
    if (!in)
        throw std::runtime_error(fmt::format("cannot open '{}'", path.string()));
    auto ss = std::ostringstream {};
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content)
{
    auto tmp = path;
    tmp += fmt::format(".tmp-{}", random_id().substr(0, 8));
    {
        auto out = std::ofstream(tmp, std::ios::binary | std::ios::trunc);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out)
            throw std::runtime_error(fmt::format("failed writing '{}'", tmp.string()));
    }
    std::filesystem::rename(tmp, path);
}

std::string random_id()
{
    thread_local auto rng = std::mt19937_64(std::random_device {}() ^ static_cast<std::uint64_t>(
                                                std::chrono::steady_clock::now().time_since_epoch().count()));
    return fmt::format("{:016x}{:016x}", rng(), rng());
}

std::string utc_timestamp()
{
    auto const now = std::chrono::system_clock::now();
    auto const ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    auto const secs = std::chrono::floor<std::chrono::seconds>(now);
    return fmt::format("{:%Y-%m-%dT%H:%M:%S}.{:03d}Z", secs, ms);
}

std::string format_double(double v)
{
    auto buf = std::array<char, 64> {};
    auto const [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc {})
        throw std::runtime_error("format_double failed");
    return { buf.data(), ptr };
}

} // namespace radiosim
