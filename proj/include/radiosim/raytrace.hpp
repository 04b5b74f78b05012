// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <radiosim/geometry.hpp>

#include <optional>
#include <string_view>
#include <vector>

namespace radiosim
{

enum class PathKind
{
    Direct,
    WallReflection,
    GroundReflection,
};

[[nodiscard]] std::string_view to_string(PathKind kind);

/// A geometric propagation path tx -> ... -> rx.
struct RayPath
{
    PathKind kind = PathKind::Direct;
    std::vector<Point3> vertices;
    double total_length = 0.0;
    /// Radians from the reflecting surface normal; absent for the direct path.
    std::optional<double> incidence_angle;
    std::optional<std::size_t> facade_index;
};

[[nodiscard]] RayPath direct_path(const Point3& tx, const Point3& rx);

/// True iff the open segment tx->rx passes through the interior of a building
/// prism. Contact within kGeomTolerance of a wall, corner or roof is clear.
/// Symmetric in its endpoints; equal endpoints are never blocked.
[[nodiscard]] bool los_blocked(const Environment& env, const Point3& tx, const Point3& rx);

/// First-order specular reflections off every facade (image method).
[[nodiscard]] std::vector<RayPath> wall_reflections(const Environment& env, const Point3& tx, const Point3& rx);

/// Two-ray ground bounce; absent when either endpoint is at or below ground, the
/// bounce point lies in a footprint, or either leg is blocked.
[[nodiscard]] std::optional<RayPath> ground_reflection(const Environment& env, const Point3& tx, const Point3& rx);

} // namespace radiosim
