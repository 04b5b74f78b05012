// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace radiosim
{

/// Distance tolerance (meters) for grazing contact and boundary tests.
inline constexpr double kGeomTolerance = 1e-9;

struct Vec2
{
    double x = 0.0;
    double y = 0.0;

    friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return { a.x + b.x, a.y + b.y }; }
    friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return { a.x - b.x, a.y - b.y }; }
    friend constexpr Vec2 operator*(double s, Vec2 a) { return { s * a.x, s * a.y }; }
    friend constexpr bool operator==(Vec2 a, Vec2 b) = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

/// Meters, right-handed, ground plane at z = 0.
struct Point3
{
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    [[nodiscard]] constexpr Vec2 xy() const { return { x, y }; }
    friend constexpr bool operator==(const Point3&, const Point3&) = default;
};

inline double distance(const Point3& a, const Point3& b)
{
    return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) + (a.z - b.z) * (a.z - b.z));
}

struct Bounds
{
    double min_x = 0.0;
    double min_y = 0.0;
    double max_x = 0.0;
    double max_y = 0.0;

    [[nodiscard]] double width() const { return max_x - min_x; }
    [[nodiscard]] double height() const { return max_y - min_y; }
    [[nodiscard]] bool contains(Vec2 p) const
    {
        return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
    }
    [[nodiscard]] bool intersects(const Bounds& o) const
    {
        return o.min_x <= max_x && o.max_x >= min_x && o.min_y <= max_y && o.max_y >= min_y;
    }
    friend bool operator==(const Bounds&, const Bounds&) = default;
};

struct BuildingFootprint
{
    std::int64_t id = 0;
    std::vector<Vec2> vertices; ///< counter-clockwise after load
    double height = 0.0;

    friend bool operator==(const BuildingFootprint&, const BuildingFootprint&) = default;
};

/// One vertical wall of a building prism.
struct Facade
{
    std::size_t index = 0; ///< position in Environment::facades()
    std::int64_t building_id = 0;
    std::size_t building_index = 0;
    Vec2 a;
    Vec2 b;
    double height = 0.0;
    Vec2 outward_normal;

    [[nodiscard]] double length() const { return norm(b - a); }
    /// Signed distance of p from the facade line, positive on the outward side.
    [[nodiscard]] double signed_distance(Vec2 p) const { return dot(p - a, outward_normal); }
};

class EnvironmentError: public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed environment document.
class EnvironmentParseError: public EnvironmentError
{
  public:
    using EnvironmentError::EnvironmentError;
};

/// Well-formed document describing invalid geometry.
class EnvironmentValidationError: public EnvironmentError
{
  public:
    using EnvironmentError::EnvironmentError;
};

/// Immutable 2.5D scene: flat-roofed prisms from z = 0 to their height, plus a
/// uniform-grid index over facades and footprints. Safe for concurrent reads.
class Environment
{
  public:
    static constexpr double kDefaultCellSize = 25.0;

    /// Validates footprints, normalizes them to CCW order and builds the index.
    static Environment build(std::string name,
                             Bounds bounds,
                             std::vector<BuildingFootprint> buildings,
                             double cell_size = kDefaultCellSize);

    [[nodiscard]] const std::string& name() const { return _name; }
    [[nodiscard]] const Bounds& bounds() const { return _bounds; }
    [[nodiscard]] const std::vector<BuildingFootprint>& buildings() const { return _buildings; }
    [[nodiscard]] const std::vector<Facade>& facades() const { return _facades; }
    [[nodiscard]] double cell_size() const { return _cellSize; }
    [[nodiscard]] std::optional<std::size_t> building_index(std::int64_t id) const;

    /// Id of the first building whose closed footprint contains p.
    [[nodiscard]] std::optional<std::int64_t> point_in_building(Vec2 p) const;
    /// Like point_in_building but returns the building's position in buildings().
    [[nodiscard]] std::optional<std::size_t> building_at(Vec2 p) const;

    /// Superset of the facades whose segment touches the query segment.
    [[nodiscard]] std::vector<const Facade*> facades_near(Vec2 from, Vec2 to) const;
    /// Superset of the facades touching the query rectangle.
    [[nodiscard]] std::vector<const Facade*> facades_near(const Bounds& region) const;
    /// Indices of buildings whose bounding box may touch the query segment.
    [[nodiscard]] std::vector<std::size_t> buildings_near(Vec2 from, Vec2 to) const;

    friend bool operator==(const Environment& a, const Environment& b)
    {
        return a._name == b._name && a._bounds == b._bounds && a._buildings == b._buildings;
    }

  private:
    [[nodiscard]] int col_of(double x) const;
    [[nodiscard]] int row_of(double y) const;
    template <typename Visit>
    void visit_segment_cells(Vec2 from, Vec2 to, Visit&& visit) const;
    template <typename Visit>
    void visit_box_cells(const Bounds& box, Visit&& visit) const;

    std::string _name;
    Bounds _bounds;
    std::vector<BuildingFootprint> _buildings;
    std::vector<Bounds> _buildingBoxes;
    std::vector<Facade> _facades;
    double _cellSize = kDefaultCellSize;
    std::size_t _cols = 1;
    std::size_t _rows = 1;
    std::vector<std::vector<std::uint32_t>> _facadeCells;
    std::vector<std::vector<std::uint32_t>> _buildingCells;
};

/// Closed-polygon containment (boundary counts as inside).
[[nodiscard]] bool polygon_contains(const std::vector<Vec2>& polygon, Vec2 p, double tolerance = kGeomTolerance);
/// Distance from p to the nearest polygon edge.
[[nodiscard]] double distance_to_boundary(const std::vector<Vec2>& polygon, Vec2 p);
/// Twice the signed area; positive for counter-clockwise.
[[nodiscard]] double signed_area2(const std::vector<Vec2>& polygon);
/// True if no two non-adjacent edges touch and no adjacent edges overlap.
[[nodiscard]] bool polygon_is_simple(const std::vector<Vec2>& polygon);

[[nodiscard]] Environment environment_from_json(const nlohmann::json& doc,
                                                double cell_size = Environment::kDefaultCellSize);
[[nodiscard]] nlohmann::json environment_to_json(const Environment& env);

/// Reads and validates an environment file. Throws EnvironmentParseError or
/// EnvironmentValidationError.
[[nodiscard]] Environment load_environment(const std::filesystem::path& path,
                                           double cell_size = Environment::kDefaultCellSize);
void save_environment(const Environment& env, const std::filesystem::path& path);

/// Manhattan-style block grid.
struct GridSpec
{
    std::string name = "synthetic";
    int rows = 5;
    int cols = 5;
    double block_size = 60.0;
    double street_width = 20.0;
    double min_height = 10.0;
    double max_height = 40.0;
    std::uint64_t seed = 1;
};

/// Deterministic for a given spec; throws EnvironmentValidationError on bad dimensions.
[[nodiscard]] Environment gen_environment(const GridSpec& spec);
/// Generates and writes the environment; identical specs give identical bytes.
Environment gen_environment(const GridSpec& spec, const std::filesystem::path& path);

} // namespace radiosim
