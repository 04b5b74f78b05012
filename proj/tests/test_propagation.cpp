// SPDX-License-Identifier: Apache-2.0
#include <radiosim/propagation.hpp>

#include <doctest.h>
#include <p2109_oracle.hpp>

#include <cmath>
#include <numbers>
#include <vector>

using namespace radiosim;

// Golden numbers below were evaluated by hand (scipy, double precision) from
// the closed-form expressions, independently of this code.

TEST_CASE("free-space loss")
{
    CHECK(std::abs(fspl(100, 3.5) - 83.32914410888888) < 1e-9);
    CHECK(fspl(100, 3.5) == doctest::Approx(83.32).epsilon(0.01 / 83.32));
    // 4 pi d f / c = 1 gives 0 dB.
    CHECK(std::abs(fspl(1.0, kSpeedOfLight / (4 * std::numbers::pi) / 1e9)) < 1e-9);
    CHECK(std::abs(fspl(10.0, kSpeedOfLight / (40 * std::numbers::pi) / 1e9)) < 1e-9);
    CHECK(fspl(0.5, 3.5) == fspl(1.0, 3.5));
    CHECK(fspl(0.0, 3.5) == fspl(1.0, 3.5));
    // Strictly increasing in distance and frequency.
    for (auto x = 1.0; x < 1000; x *= 1.7)
    {
        CHECK(fspl(x * 1.01, 3.5) > fspl(x, 3.5));
        CHECK(fspl(x, 3.6) > fspl(x, 3.5));
    }
}

TEST_CASE("Fresnel reflection loss")
{
    auto const gamma = (std::sqrt(5.31) - 1) / (std::sqrt(5.31) + 1);
    CHECK(fresnel_gamma_perpendicular(0, 5.31) == doctest::Approx(gamma).epsilon(1e-12));
    CHECK(fresnel_reflection_loss(0, 5.31) == doctest::Approx(8.07386).epsilon(1e-5));
    CHECK(fresnel_reflection_loss(std::numbers::pi / 2 - 1e-9, 5.31) < 1e-6);
    CHECK(fresnel_reflection_loss(0, 1.0) == kMaxReflectionLossDb);
    CHECK(fresnel_reflection_loss(0.3, 1.0 + 1e-15) == kMaxReflectionLossDb);
    for (auto a = 0.0; a < 1.5; a += 0.1)
        CHECK(fresnel_reflection_loss(a, 5.31) >= 0);
}

TEST_CASE("non-coherent combination")
{
    CHECK(combine_contributions(std::vector<double> {}) == std::nullopt);
    CHECK(*combine_contributions(std::vector<double> { 97.5 }) == doctest::Approx(97.5).epsilon(1e-15));
    for (auto l: { 60.0, 100.0, 137.25, 180.0 })
        CHECK(std::abs(*combine_contributions(std::vector<double> { l, l }) - (l - 3.0102999566398121)) < 1e-6);
    CHECK(std::abs(*combine_contributions(std::vector<double> { 100, 120 }) - 99.95678626217357) < 1e-9);
    // Order independent, and never above the smallest term.
    auto const a = *combine_contributions(std::vector<double> { 120, 100, 140 });
    auto const b = *combine_contributions(std::vector<double> { 140, 120, 100 });
    CHECK(a == doctest::Approx(b).epsilon(1e-14));
    CHECK(a < 100);
}

TEST_CASE("3GPP UMi NLOS")
{
    auto const n = nlos_3gpp(100, 3.5, 1.5);
    CHECK(std::abs(n.db - 104.58864934466087) < 1e-9);
    CHECK_FALSE(n.height_clamped);
    // Height correction is -0.3 dB per meter above 1.5 m.
    CHECK(nlos_3gpp(100, 3.5, 11.5).db == doctest::Approx(n.db - 3.0).epsilon(1e-12));
    CHECK(nlos_3gpp(100, 3.5, 30).height_clamped);
    CHECK(nlos_3gpp(100, 3.5, 30).db == nlos_3gpp(100, 3.5, 22.5).db);
    CHECK(nlos_3gpp(100, 3.5, 0.1).height_clamped);

    // Crossover with free space near 4.078 m: below it the bound is active.
    for (auto d = 1.0; d <= 10.0; d += 0.01)
    {
        auto const v = nlos_3gpp(d, 3.5, 1.5).db;
        if (d < 4.07)
            CHECK(v == fspl(d, 3.5));
        else if (d > 4.09)
            CHECK(v > fspl(d, 3.5));
        CHECK(v >= fspl(d, 3.5));
    }
}

TEST_CASE("building entry loss")
{
    CHECK(std::abs(bel_p2109(3.5, 0, 0.5) - 15.72060267285941) < 1e-9);
    CHECK(bel_p2109(1, 0) == doctest::Approx(14.3128).epsilon(1e-5));
    CHECK(bel_p2109(10, 0) == doctest::Approx(17.6735).epsilon(1e-5));
    CHECK(bel_p2109(10, 0) > bel_p2109(1, 0));
    CHECK(bel_p2109(3.5, 30) == doctest::Approx(21.4993).epsilon(1e-5));
    CHECK(bel_p2109(3.5, -30) == bel_p2109(3.5, 30));
    CHECK(bel_p2109(3.5, 0, 0.9) == doctest::Approx(28.738).epsilon(1e-4));
    CHECK(bel_p2109(3.5, 0, 0.9) > bel_p2109(3.5, 0, 0.5));
    CHECK(bel_p2109(3.5, 0, 0.5, BuildingClass::ThermallyEfficient) > bel_p2109(3.5, 0, 0.5));
    CHECK_THROWS_AS((void)bel_p2109(0.01, 0), FrequencyRangeError);
    CHECK_THROWS_AS((void)bel_p2109(200, 0), FrequencyRangeError);
    CHECK_THROWS((void)bel_p2109(3.5, 0, 1.0));
    CHECK_THROWS((void)bel_p2109(3.5, 95));
}

TEST_CASE("median entry loss agrees with Monte-Carlo draws")
{
    for (auto f: { 0.8, 3.5, 28.0 })
        for (auto theta: { 0.0, 45.0 })
            CHECK(std::abs(bel_p2109(f, theta, 0.5) - oracle::bel_monte_carlo_quantile(f, theta)) < 0.2);
    CHECK(std::abs(bel_p2109(3.5, 0, 0.9) - oracle::bel_monte_carlo_quantile(3.5, 0, 0.9)) < 0.3);
}

TEST_CASE("radio config validation")
{
    auto c = RadioConfig {};
    CHECK_NOTHROW(c.validate());
    c.frequency_ghz = -1;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = RadioConfig {};
    c.bel_probability = 1.5;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    CHECK(building_class_from_string("traditional") == BuildingClass::Traditional);
    CHECK(building_class_from_string("thermally_efficient") == BuildingClass::ThermallyEfficient);
    CHECK_FALSE(building_class_from_string("igloo"));
}
