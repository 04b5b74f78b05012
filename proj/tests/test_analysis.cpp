// SPDX-License-Identifier: Apache-2.0
#include <radiosim/analysis.hpp>
#include <radiosim/catalog.hpp>
#include <radiosim/chat.hpp>

#include <doctest.h>
#include <test_util.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

using namespace radiosim;

namespace
{

struct Maps
{
    Grid<double> pl;
    Grid<std::uint8_t> bld;
    Grid<std::uint8_t> los;
};

Maps uniform(int nx, int ny, double v)
{
    return { Grid<double>(nx, ny, v), Grid<std::uint8_t>(nx, ny, 0), Grid<std::uint8_t>(nx, ny, 1) };
}

/// 100 dB in the lower-left quadrant, 160 dB elsewhere.
Maps two_level()
{
    auto m = uniform(10, 10, 160);
    for (auto j = 0; j < 5; ++j)
        for (auto i = 0; i < 5; ++i)
            m.pl.at(i, j) = 100;
    return m;
}

MapSummary summarize(const Maps& m, SummaryOptions o = {})
{
    return summarize_pathloss_map(m.pl, m.bld, m.los, o);
}

} // namespace

TEST_CASE("quadrant split puts an odd midline on the lower/left side")
{
    CHECK(quadrant_of(0, 0, 10, 10) == Quadrant::LowerLeft);
    CHECK(quadrant_of(4, 4, 10, 10) == Quadrant::LowerLeft);
    CHECK(quadrant_of(5, 4, 10, 10) == Quadrant::LowerRight);
    CHECK(quadrant_of(4, 5, 10, 10) == Quadrant::UpperLeft);
    CHECK(quadrant_of(9, 9, 10, 10) == Quadrant::UpperRight);
    CHECK(quadrant_of(2, 2, 5, 5) == Quadrant::LowerLeft);
    CHECK(quadrant_of(3, 3, 5, 5) == Quadrant::UpperRight);
    CHECK(to_string(Quadrant::UpperRight) == "upper-right");
}

TEST_CASE("uniform map")
{
    auto const s = summarize(uniform(8, 6, 120));
    CHECK(s.min_db == 120);
    CHECK(s.max_db == 120);
    for (auto const& q: s.quadrants)
        CHECK(q.mean_db == 120.0);
    CHECK(s.high_gradient_cells.empty());
    auto const text = render_summary_text(s);
    CHECK(text == "The pathloss map is uniform at 120.0 dB over 48 covered cells, with no significant spatial gradients.");
    CHECK(text.find("no significant spatial gradients") != std::string::npos);
}

TEST_CASE("two-level map: strongest lower-left, gradients on the quadrant boundary")
{
    auto const s = summarize(two_level());
    CHECK(s.strongest == Quadrant::LowerLeft);
    CHECK(s.quadrants[0].mean_db == 100.0);
    CHECK(s.quadrants[3].mean_db == 160.0);
    auto expected = std::vector<CellIndex> {};
    for (auto j = 0; j < 10; ++j)
        for (auto i = 0; i < 10; ++i)
            if (((i == 4 || i == 5) && j <= 4) || ((j == 4 || j == 5) && i <= 4))
                expected.push_back({ i, j });
    CHECK(s.high_gradient_cells == expected);
    CHECK(s.wall_adjacent_fraction == 0.0);
    auto const text = render_summary_text(s);
    CHECK(text.find("strongest signal is in the lower-left quadrant") != std::string::npos);
    CHECK(text.find("mostly away from building walls") != std::string::npos);
    CHECK(render_summary_text(summarize(two_level())) == text);
}

TEST_CASE("wall proximity is reported when most steep cells touch buildings")
{
    auto m = two_level();
    for (auto i = 0; i < 10; ++i)
        m.bld.at(i, 6) = 1;
    for (auto j = 0; j < 10; ++j)
        m.bld.at(6, j) = 1;
    auto const s = summarize(m);
    CHECK(s.wall_adjacent_fraction >= 0.3);
    CHECK(render_summary_text(s).find("border building walls") != std::string::npos);
}

TEST_CASE("180 degree rotation swaps lower-left and upper-right")
{
    auto rng = std::mt19937_64(8);
    auto uni = std::uniform_real_distribution<double>(80, 170);
    auto m = uniform(12, 10, 0);
    for (auto& v: m.pl.values)
        v = uni(rng);
    auto r = m;
    for (auto j = 0; j < 10; ++j)
        for (auto i = 0; i < 12; ++i)
            r.pl.at(i, j) = m.pl.at(11 - i, 9 - j);
    auto const a = summarize(m);
    auto const b = summarize(r);
    CHECK(*a.quadrants[0].mean_db == doctest::Approx(*b.quadrants[3].mean_db).epsilon(1e-12));
    CHECK(*a.quadrants[1].mean_db == doctest::Approx(*b.quadrants[2].mean_db).epsilon(1e-12));
    CHECK(a.min_db == b.min_db);
    CHECK(a.p50 == b.p50);
    CHECK(a.high_gradient_cells.size() == b.high_gradient_cells.size());
}

TEST_CASE("statistics match a brute-force recomputation")
{
    auto rng = std::mt19937_64(21);
    auto uni = std::uniform_real_distribution<double>(60, 190);
    for (auto round = 0; round < 20; ++round)
    {
        auto const nx = 3 + static_cast<int>(rng() % 20);
        auto const ny = 3 + static_cast<int>(rng() % 20);
        auto m = uniform(nx, ny, 0);
        for (auto& v: m.pl.values)
            v = (rng() % 7 == 0) ? kUncovered : uni(rng);
        m.pl.values[0] = 100;
        for (auto& b: m.los.values)
            b = rng() % 2;
        auto const s = summarize(m);

        auto covered = std::vector<double> {};
        double sums[4] = {};
        int counts[4] = {};
        auto losCount = 0;
        for (auto j = 0; j < ny; ++j)
            for (auto i = 0; i < nx; ++i)
            {
                losCount += m.los.at(i, j);
                auto const v = m.pl.at(i, j);
                if (v == kUncovered)
                    continue;
                covered.push_back(v);
                auto const q = (2 * j + 1 <= ny ? 0 : 2) + (2 * i + 1 <= nx ? 0 : 1);
                sums[q] += v;
                ++counts[q];
            }
        std::sort(covered.begin(), covered.end());
        auto pct = [&](double p) {
            auto const pos = p / 100.0 * static_cast<double>(covered.size() - 1);
            auto const lo = static_cast<std::size_t>(std::floor(pos));
            auto const hi = std::min(lo + 1, covered.size() - 1);
            return covered[lo] + (pos - static_cast<double>(lo)) * (covered[hi] - covered[lo]);
        };
        CHECK(s.covered_cells == covered.size());
        CHECK(s.min_db == covered.front());
        CHECK(s.max_db == covered.back());
        CHECK(s.p5 == doctest::Approx(pct(5)).epsilon(1e-12));
        CHECK(s.p50 == doctest::Approx(pct(50)).epsilon(1e-12));
        CHECK(s.p95 == doctest::Approx(pct(95)).epsilon(1e-12));
        CHECK(s.los_fraction == doctest::Approx(static_cast<double>(losCount) / (nx * ny)));
        for (auto q = 0; q < 4; ++q)
        {
            CHECK(s.quadrants[static_cast<std::size_t>(q)].covered_cells == static_cast<std::size_t>(counts[q]));
            if (counts[q])
                CHECK(*s.quadrants[static_cast<std::size_t>(q)].mean_db == doctest::Approx(sums[q] / counts[q]).epsilon(1e-12));
        }
        auto prev = -1.0;
        for (auto t = 50.0; t <= 200.0; t += 5.0)
        {
            auto const f = s.coverage_fraction(t);
            CHECK(f >= prev);
            prev = f;
            auto const n = std::count_if(covered.begin(), covered.end(), [&](double v) { return v <= t; });
            CHECK(f == doctest::Approx(static_cast<double>(n) / static_cast<double>(covered.size())));
        }
    }
}

TEST_CASE("gradient uses one-sided differences at edges and holes")
{
    auto g = Grid<double>(4, 1, 0);
    g.values = { 10, 20, 40, 80 };
    CHECK(gradient_magnitude(g, 0, 0) == 10);
    CHECK(gradient_magnitude(g, 1, 0) == 15);
    CHECK(gradient_magnitude(g, 3, 0) == 40);
    g.values = { 10, kUncovered, 40, 80 };
    CHECK(gradient_magnitude(g, 2, 0) == 40);
    CHECK(gradient_magnitude(g, 0, 0) == 0);
}

TEST_CASE("all-uncovered map is an error")
{
    CHECK_THROWS_AS((void)summarize(uniform(4, 4, kUncovered)), EmptyMapError);
}

TEST_CASE("summary JSON carries the quadrant names")
{
    auto const j = summary_to_json(summarize(two_level()));
    CHECK(j["strongest_quadrant"] == "lower-left");
    CHECK(j["weakest_quadrant"] != "lower-left");
    CHECK(j["quadrants"]["lower-left"]["mean_db"] == 100.0);
    // Columns 4,5 for j <= 4 and rows 4,5 for i <= 4, sharing (4, 4).
    CHECK(j["high_gradient_cells"].size() == 19);
}

TEST_CASE("synthetic city with tx in the lower-left")
{
    auto const catalog = EnvironmentCatalog(testing::catalog_path());
    auto p = SimulationParams {};
    p.location = "synthetic01";
    p.tx = { 100, 100, 15 };
    auto const r = simulate_radio_environment(p, catalog);
    auto const s = summarize_pathloss_map(r);
    CHECK(s.strongest == Quadrant::LowerLeft);
    CHECK(s.weakest == Quadrant::UpperRight);
    CHECK(s.covered_cells == 2500);
}

TEST_CASE("describe falls back to the deterministic summary")
{
    auto const catalog = EnvironmentCatalog(testing::catalog_path());
    auto p = SimulationParams {};
    p.location = "synthetic02";
    p.tx = { 50, 40, 12 };
    p.nx = p.ny = 16;
    auto const r = simulate_radio_environment(p, catalog);
    auto const expected = render_summary_text(summarize_pathloss_map(r));

    auto const d = describe_pathloss_map(r, "missing.png", nullptr);
    CHECK(d.source == "deterministic");
    CHECK(d.text == expected);
    CHECK_FALSE(d.fallback_reason);

    // Nothing listens on port 9 locally; the failure is surfaced as the reason.
    auto client = ChatClient(ChatEndpoint { .base_url = "http://127.0.0.1:9/v1",
                                            .model = "m",
                                            .api_key = "k",
                                            .timeout = std::chrono::milliseconds(500),
                                            .max_retries = 0 });
    testing::TempDir dir;
    write_run_artifacts(r, dir.path());
    auto const f = describe_pathloss_map(r, dir / std::string(kHeatmapFile), &client);
    CHECK(f.source == "deterministic");
    CHECK(f.text == expected);
    REQUIRE(f.fallback_reason);
}
