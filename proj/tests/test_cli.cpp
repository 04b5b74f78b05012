// SPDX-License-Identifier: Apache-2.0
#include <radiosim/analysis.hpp>
#include <radiosim/cli.hpp>
#include <radiosim/propagation.hpp>
#include <radiosim/radiomap.hpp>
#include <radiosim/util.hpp>

#include <doctest.h>
#include <stub_chat.hpp>
#include <test_util.hpp>

#include <cstdio>
#include <cstdlib>
#include <sstream>

using namespace radiosim;
using namespace radiosim::testing;

namespace
{

struct CliRun
{
    int code = -1;
    std::string out;
    std::string err;
};

CliRun cli(const TempDir& data, std::vector<std::string> args)
{
    auto full = std::vector<std::string> { "radiosim", "--data-dir", data.path().string(), "--catalog", catalog_path().string() };
    full.insert(full.end(), args.begin(), args.end());
    auto out = std::ostringstream {};
    auto err = std::ostringstream {};
    auto const code = run_cli(full, out, err);
    return { code, out.str(), err.str() };
}

std::string field(const std::string& text, const std::string& key)
{
    auto const pos = text.find(key + ": ");
    REQUIRE(pos != std::string::npos);
    auto const start = pos + key.size() + 2;
    return text.substr(start, text.find('\n', start) - start);
}

} // namespace

TEST_CASE("simulate with the reference flags writes three files")
{
    auto data = TempDir {};
    auto const r = cli(data, { "simulate", "--tx-x", "100", "--tx-y", "100", "--tx-z", "15", "--location", "munich01", "--nx", "50",
                               "--ny", "50", "--los", "--ref", "--gref", "--nlos", "--bel" });
    CHECK(r.code == kExitOk);
    CHECK(field(r.out, "environment") == "munich01 (synthetic01)");
    CHECK(field(r.out, "grid") == "50x50, 2500 of 2500 cells covered");
    for (auto const* key: { "dataset", "heatmap", "metadata" })
        CHECK(std::filesystem::exists(field(r.out, key)));
    auto const runDir = std::filesystem::path(field(r.out, "dataset")).parent_path();
    CHECK(runDir.filename() == field(r.out, "run_id"));

    // Printed numbers equal the library's.
    auto const result = load_result(runDir);
    auto const s = summarize_pathloss_map(result);
    CHECK(field(r.out, "pathloss_db") == "min " + format_double(s.min_db) + " max " + format_double(s.max_db));
}

TEST_CASE("bad environment name exits 1 with the catalog listing")
{
    auto data = TempDir {};
    auto const r = cli(data, { "simulate", "--tx-x", "1", "--tx-y", "1", "--tx-z", "1", "--location", "atlantis" });
    CHECK(r.code == kExitValidation);
    CHECK(r.err.find("unknown environment 'atlantis'") != std::string::npos);
    CHECK(r.err.find("synthetic01") != std::string::npos);
    CHECK(r.err.find("munich01") != std::string::npos);
}

TEST_CASE("validation errors exit 1, unreadable inputs exit 2")
{
    auto data = TempDir {};
    CHECK(cli(data, { "simulate", "--tx-x", "1", "--tx-y", "1", "--tx-z", "1", "--location", "empty", "--nx", "1" }).code
          == kExitValidation);
    CHECK(cli(data, { "simulate", "--tx-x", "-100", "--tx-y", "1", "--tx-z", "1", "--location", "empty" }).code == kExitValidation);
    CHECK(cli(data, { "simulate", "--tx-x", "1", "--tx-y", "1", "--tx-z", "1", "--location", "empty", "--building-class", "igloo" }).code
          == kExitValidation);
    CHECK(cli(data, { "simulate", "--tx-x", "1" }).code == kExitValidation);
    CHECK(cli(data, { "summarize", "--run", (data / "nope").string() }).code == kExitIo);
    CHECK(cli(data, { "purge" }).code == kExitValidation);
    CHECK(cli(data, { "purge", "--yes" }).code == kExitOk);
}

TEST_CASE("--los-only on the empty environment gives free-space loss")
{
    auto data = TempDir {};
    auto const r = cli(data, { "simulate", "--tx-x", "250", "--tx-y", "120", "--tx-z", "20", "--location", "empty", "--los-only",
                               "--nx", "25", "--ny", "20", "--out", (data / "fs").string() });
    REQUIRE(r.code == kExitOk);
    auto const grids = read_dataset(data / "fs" / "dataset.txt", 25, 20);
    auto in = std::istringstream(read_file(data / "fs" / "dataset.txt"));
    auto line = std::string {};
    std::getline(in, line);
    auto rows = 0;
    while (std::getline(in, line))
    {
        auto row = std::istringstream(line);
        double x, y, z, los, phi, d3d, ref, bld, h, pl;
        row >> x >> y >> z >> los >> phi >> d3d >> ref >> bld >> h >> pl;
        auto const d = std::sqrt((x - 250) * (x - 250) + (y - 120) * (y - 120) + (z - 20) * (z - 20));
        CHECK(std::abs(pl - fspl(d, 3.5)) < 1e-9);
        ++rows;
    }
    CHECK(rows == 500);
}

TEST_CASE("mechanism flag combinations")
{
    auto data = TempDir {};
    auto const base = std::vector<std::string> { "simulate", "--tx-x", "100", "--tx-y", "100", "--tx-z", "15", "--location",
                                                 "synthetic01", "--nx", "6", "--ny", "6" };
    auto mech = [&](std::vector<std::string> extra) {
        auto args = base;
        args.insert(args.end(), extra.begin(), extra.end());
        auto const r = cli(data, args);
        REQUIRE(r.code == kExitOk);
        auto const meta = nlohmann::json::parse(read_file(field(r.out, "metadata")));
        auto const& p = meta["params"];
        return std::array<bool, 5> { p["LOS"].get<bool>(), p["REF"].get<bool>(), p["GREF"].get<bool>(), p["NLOS"].get<bool>(),
                                     p["BEL"].get<bool>() };
    };
    CHECK(mech({}) == std::array { true, true, true, true, true });
    CHECK(mech({ "--los", "--nlos" }) == std::array { true, false, false, true, false });
    CHECK(mech({ "--no-bel" }) == std::array { true, true, true, true, false });
    CHECK(mech({ "--los-only" }) == std::array { true, false, false, false, false });
}

TEST_CASE("agent prints the transcript labels")
{
    auto data = TempDir {};
    auto const r = cli(data, { "agent", "--prompt",
                               "Simulate pathloss in the Munich01 scenario with a UAV at (100, 100, 15) over a 50\xC3\x97"
                               "50 receiver grid considering all propagation mechanisms, and provide a concise technical "
                               "summary of the resulting pathloss heatmap." });
    CHECK(r.code == kExitOk);
    for (auto const* label: { "Thought: ", "Action: ", "Action Input: ", "Observation: ", "Final Answer: " })
        CHECK(r.out.find(label) != std::string::npos);
    CHECK(r.out.find("Action Input: tx_x = 100, tx_y = 100, tx_z = 15, location = 'munich01', nx = 50, ny = 50, LOS = True, "
                     "REF = True, GREF = True, NLOS = True, BEL = True")
          != std::string::npos);
    CHECK(std::distance(std::filesystem::directory_iterator(data / "episodes"), {}) == 1);

    auto const empty = cli(data, { "agent", "--prompt", "" });
    CHECK(empty.code == kExitOk);
    CHECK(empty.out.starts_with("Clarification Request: "));
}

TEST_CASE("remote backend without a credential is a configuration error")
{
    auto data = TempDir {};
    ::unsetenv("RADIOSIM_TEST_MISSING_KEY");
    auto const r = cli(data, { "agent", "--prompt", "x", "--backend", "remote", "--base-url", "http://127.0.0.1:9/v1", "--model", "m",
                               "--api-key-env", "RADIOSIM_TEST_MISSING_KEY" });
    CHECK(r.code == kExitValidation);
    CHECK(r.err.find("configuration error") != std::string::npos);
    CHECK(r.err.find("RADIOSIM_TEST_MISSING_KEY") != std::string::npos);

    auto const noUrl = cli(data, { "agent", "--prompt", "x", "--backend", "remote", "--base-url", "", "--model", "m" });
    CHECK(noUrl.code == kExitValidation);
}

TEST_CASE("remote backend against a stub")
{
    auto data = TempDir {};
    auto stub = StubChatServer {};
    stub.push(assistant_text("Nothing to simulate."));
    ::setenv("RADIOSIM_TEST_STUB_KEY", "secret", 1);
    auto const r = cli(data, { "agent", "--prompt", "hello", "--backend", "remote", "--base-url", stub.base_url(), "--model", "m",
                               "--api-key-env", "RADIOSIM_TEST_STUB_KEY" });
    CHECK(r.code == kExitOk);
    CHECK(r.out == "Final Answer: Nothing to simulate.\n");
    CHECK(stub.requests().at(0).authorization == "Bearer secret");
}

TEST_CASE("render with an explicit range")
{
    auto data = TempDir {};
    auto const sim = cli(data, { "simulate", "--tx-x", "100", "--tx-y", "100", "--tx-z", "15", "--location", "synthetic01", "--nx",
                                 "20", "--ny", "20", "--out", (data / "run").string() });
    REQUIRE(sim.code == kExitOk);
    auto const r = cli(data, { "render", "--run", (data / "run").string(), "--range", "110:170", "--out", (data / "r.png").string() });
    CHECK(r.code == kExitOk);
    CHECK(field(r.out, "colorbar") == "110 .. 170 dB");
    auto const text = read_png_text(data / "r.png");
    CHECK(std::stod(text.at("colorbar_min_db")) == 110.0);
    CHECK(std::stod(text.at("colorbar_max_db")) == 170.0);
    CHECK(cli(data, { "render", "--run", (data / "run").string(), "--range", "170:110" }).code == kExitValidation);
    CHECK(cli(data, { "render", "--run", (data / "run").string(), "--range", "abc" }).code == kExitValidation);
}

TEST_CASE("summarize prints the deterministic summary")
{
    auto data = TempDir {};
    // Uniform-map fixture: a run with every pathloss set to 120 dB.
    auto const sim = cli(data, { "simulate", "--tx-x", "100", "--tx-y", "100", "--tx-z", "15", "--location", "empty", "--nx", "6",
                                 "--ny", "6", "--out", (data / "run").string() });
    REQUIRE(sim.code == kExitOk);
    auto result = load_result(data / "run");
    for (auto& v: result.grids.pathloss_db.values)
        v = 120.0;
    write_run_artifacts(result, data / "uniform");
    auto const r = cli(data, { "summarize", "--run", (data / "uniform").string() });
    CHECK(r.code == kExitOk);
    CHECK(r.out == "The pathloss map is uniform at 120.0 dB over 36 covered cells, with no significant spatial gradients.\n");
    auto const j = cli(data, { "summarize", "--run", (data / "run").string(), "--json" });
    CHECK(nlohmann::json::parse(j.out)["strongest_quadrant"].is_string());
}

TEST_CASE("gen-env hash is stable for a seed")
{
    auto data = TempDir {};
    auto const a = cli(data, { "gen-env", "--seed", "5", "--out", (data / "a.json").string() });
    auto const b = cli(data, { "gen-env", "--seed", "5", "--out", (data / "b.json").string() });
    CHECK(a.code == kExitOk);
    CHECK(field(a.out, "sha256") == field(b.out, "sha256"));
    CHECK(field(a.out, "sha256") == sha256_hex(read_file(data / "a.json")));
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("environments listing and help text")
{
    auto data = TempDir {};
    auto const r = cli(data, { "environments" });
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("munich01") != std::string::npos);

    auto const help = cli(data, { "simulate", "--help" });
    CHECK(help.code == kExitOk);
    for (auto const* flag: { "--tx-x", "--tx-y", "--tx-z", "--location", "--nx", "--ny", "--los", "--ref", "--gref", "--nlos", "--bel",
                             "--frequency", "--rx-height", "--wall-permittivity", "--ground-permittivity", "--building-class",
                             "--bel-probability" })
        CHECK_MESSAGE(help.out.find(flag) != std::string::npos, flag);
}

TEST_CASE("installed binary maps exit codes")
{
    auto data = TempDir {};
    auto const cmd = std::string(RADIOSIM_CLI_PATH) + " --data-dir " + data.path().string() + " --catalog " + catalog_path().string()
                     + " simulate --tx-x 1 --tx-y 1 --tx-z 1 --location atlantis >/dev/null 2>&1";
    auto const status = std::system(cmd.c_str());
    CHECK(WEXITSTATUS(status) == kExitValidation);
}
