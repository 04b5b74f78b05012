// SPDX-License-Identifier: Apache-2.0
#include <radiosim/propagation.hpp>

#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace radiosim
{

std::string_view to_string(BuildingClass c)
{
    return c == BuildingClass::Traditional ? "traditional" : "thermally_efficient";
}

std::optional<BuildingClass> building_class_from_string(std::string_view s)
{
    if (s == "traditional")
        return BuildingClass::Traditional;
    if (s == "thermally_efficient")
        return BuildingClass::ThermallyEfficient;
    return std::nullopt;
}

void RadioConfig::validate() const
{
    if (!(frequency_ghz > 0.0) || !std::isfinite(frequency_ghz))
        throw std::invalid_argument("frequency_ghz must be positive");
    if (!(wall_permittivity > 1.0) || !std::isfinite(wall_permittivity))
        throw std::invalid_argument("wall_permittivity must be > 1");
    if (!(ground_permittivity > 1.0) || !std::isfinite(ground_permittivity))
        throw std::invalid_argument("ground_permittivity must be > 1");
    if (!(rx_height_default > 0.0) || !std::isfinite(rx_height_default))
        throw std::invalid_argument("rx_height must be positive");
    if (!(bel_probability > 0.0 && bel_probability < 1.0))
        throw std::invalid_argument("bel_probability must be in (0, 1)");
    if (!std::isfinite(tx_power_dbm))
        throw std::invalid_argument("tx_power_dbm must be finite");
}

double fspl(double distance_m, double frequency_ghz)
{
    auto const d = std::max(distance_m, 1.0);
    return 20.0 * std::log10(4.0 * std::numbers::pi * d * frequency_ghz * 1e9 / kSpeedOfLight);
}

double fresnel_gamma_perpendicular(double angle_from_normal, double eps_r)
{
    auto const c = std::cos(angle_from_normal);
    auto const s = std::sin(angle_from_normal);
    auto const root = std::sqrt(std::max(eps_r - s * s, 0.0));
    return std::abs((c - root) / (c + root));
}

double fresnel_reflection_loss(double angle_from_normal, double eps_r)
{
    auto const gamma = fresnel_gamma_perpendicular(angle_from_normal, eps_r);
    if (gamma <= 0.0)
        return kMaxReflectionLossDb;
    return std::clamp(-20.0 * std::log10(gamma), 0.0, kMaxReflectionLossDb);
}

std::optional<double> combine_contributions(std::span<const double> losses_db)
{
    if (losses_db.empty())
        return std::nullopt;
    // Factor out the strongest term so the sum never underflows.
    auto const best = *std::min_element(losses_db.begin(), losses_db.end());
    auto sum = 0.0;
    for (auto const l: losses_db)
        sum += std::pow(10.0, -(l - best) / 10.0);
    return best - 10.0 * std::log10(sum);
}

std::optional<double> combine_contributions(std::span<const PathContribution> contributions)
{
    auto losses = std::vector<double> {};
    losses.reserve(contributions.size());
    for (auto const& c: contributions)
        losses.push_back(c.loss_db);
    return combine_contributions(std::span<const double>(losses));
}

NlosLoss nlos_3gpp(double d3d_m, double frequency_ghz, double h_ut_m)
{
    auto const d = std::max(d3d_m, 1.0);
    auto const h = std::clamp(h_ut_m, 0.5, 22.5);
    auto const empirical = 35.3 * std::log10(d) + 22.4 + 21.3 * std::log10(frequency_ghz) - 0.3 * (h - 1.5);
    return NlosLoss {
        .db = std::max(fspl(d, frequency_ghz), empirical),
        .height_clamped = h != h_ut_m,
    };
}

namespace
{

    struct P2109Coefficients
    {
        double r, s, t, u, v, w, x, y, z;
    };

    constexpr auto kTraditional = P2109Coefficients { 12.64, 3.72, 0.96, 9.6, 2.0, 9.1, -3.0, 4.5, -2.0 };
    constexpr auto kThermallyEfficient = P2109Coefficients { 28.19, -3.0, 8.48, 13.5, 3.8, 27.8, -2.9, 9.4, -2.1 };
    constexpr double kC = -3.0;
    constexpr double kElevationSlope = 0.212;

} // namespace

double bel_p2109(double frequency_ghz, double elevation_deg, double probability, BuildingClass building)
{
    if (!(frequency_ghz >= 0.08 && frequency_ghz <= 100.0))
        throw FrequencyRangeError(
            fmt::format("building entry loss defined for 0.08-100 GHz, got {} GHz", frequency_ghz));
    if (!(probability > 0.0 && probability < 1.0))
        throw std::domain_error("building entry loss probability must be in (0, 1)");
    if (!(elevation_deg >= -90.0 && elevation_deg <= 90.0))
        throw std::domain_error("elevation angle must be within [-90, 90] degrees");

    auto const& k = building == BuildingClass::Traditional ? kTraditional : kThermallyEfficient;
    auto const lf = std::log10(frequency_ghz);
    auto const horizontal = k.r + k.s * lf + k.t * lf * lf;
    auto const elevation = kElevationSlope * std::abs(elevation_deg);
    auto const mu1 = horizontal + elevation;
    auto const mu2 = k.w + k.x * lf;
    auto const sigma1 = k.u + k.v * lf;
    auto const sigma2 = k.y + k.z * lf;

    auto const q = boost::math::quantile(boost::math::normal_distribution<double> {}, probability);
    auto const a = q * sigma1 + mu1;
    auto const b = q * sigma2 + mu2;
    return 10.0 * std::log10(std::pow(10.0, 0.1 * a) + std::pow(10.0, 0.1 * b) + std::pow(10.0, 0.1 * kC));
}

} // namespace radiosim
