// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <radiosim/raytrace.hpp>

#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>

namespace radiosim
{

inline constexpr double kSpeedOfLight = 299'792'458.0;
/// Upper bound reported for reflection losses that would otherwise be infinite.
inline constexpr double kMaxReflectionLossDb = 200.0;

/// Building classes of the building-entry-loss model.
enum class BuildingClass
{
    Traditional,
    ThermallyEfficient,
};

[[nodiscard]] std::string_view to_string(BuildingClass c);
[[nodiscard]] std::optional<BuildingClass> building_class_from_string(std::string_view s);

struct RadioConfig
{
    double frequency_ghz = 3.5;
    double tx_power_dbm = 30.0; ///< recorded only; pathloss is power independent
    double wall_permittivity = 5.31;
    double ground_permittivity = 15.0;
    double rx_height_default = 1.5;
    BuildingClass building_class = BuildingClass::Traditional;
    double bel_probability = 0.5;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
    friend bool operator==(const RadioConfig&, const RadioConfig&) = default;
};

struct PathContribution
{
    const RayPath* path = nullptr;
    double loss_db = 0.0;
};

/// Friis free-space loss in dB; distances below 1 m are treated as 1 m.
[[nodiscard]] double fspl(double distance_m, double frequency_ghz);

/// |Gamma| for perpendicular polarization on a lossless dielectric half-space.
[[nodiscard]] double fresnel_gamma_perpendicular(double angle_from_normal, double eps_r);
/// -20 log10 |Gamma_perp|, capped at kMaxReflectionLossDb.
[[nodiscard]] double fresnel_reflection_loss(double angle_from_normal, double eps_r);

/// Non-coherent power sum. Empty input means "no path" and yields nullopt.
[[nodiscard]] std::optional<double> combine_contributions(std::span<const double> losses_db);
[[nodiscard]] std::optional<double> combine_contributions(std::span<const PathContribution> contributions);

struct NlosLoss
{
    double db = 0.0;
    bool height_clamped = false; ///< h_ut was outside [0.5, 22.5] m
};

/// 3GPP UMi street-canyon NLOS with the free-space lower bound.
[[nodiscard]] NlosLoss nlos_3gpp(double d3d_m, double frequency_ghz, double h_ut_m);

class FrequencyRangeError: public std::out_of_range
{
  public:
    using std::out_of_range::out_of_range;
};

/// ITU-R P.2109 building entry loss (dB) not exceeded with the given probability.
/// frequency in [0.08, 100] GHz, elevation in degrees, probability in (0, 1).
[[nodiscard]] double bel_p2109(double frequency_ghz,
                               double elevation_deg,
                               double probability = 0.5,
                               BuildingClass building = BuildingClass::Traditional);

} // namespace radiosim
