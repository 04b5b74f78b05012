// SPDX-License-Identifier: Apache-2.0
#include <radiosim/geometry.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

namespace radiosim
{

namespace
{

    int orientation(Vec2 a, Vec2 b, Vec2 c)
    {
        auto const v = cross(b - a, c - a);
        return (v > 0.0) - (v < 0.0);
    }

    bool on_segment(Vec2 a, Vec2 b, Vec2 p)
    {
        return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y
               && p.y <= std::max(a.y, b.y);
    }

    // Closed segments, exact orientation predicates.
    bool segments_touch(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2)
    {
        auto const o1 = orientation(p1, p2, q1);
        auto const o2 = orientation(p1, p2, q2);
        auto const o3 = orientation(q1, q2, p1);
        auto const o4 = orientation(q1, q2, p2);
        if (o1 != o2 && o3 != o4)
            return true;
        return (o1 == 0 && on_segment(p1, p2, q1)) || (o2 == 0 && on_segment(p1, p2, q2))
               || (o3 == 0 && on_segment(q1, q2, p1)) || (o4 == 0 && on_segment(q1, q2, p2));
    }

    double point_segment_distance(Vec2 p, Vec2 a, Vec2 b)
    {
        auto const ab = b - a;
        auto const len2 = dot(ab, ab);
        auto t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        return norm(p - (a + t * ab));
    }

    Bounds box_of(const std::vector<Vec2>& pts)
    {
        auto box = Bounds { std::numeric_limits<double>::infinity(),
                            std::numeric_limits<double>::infinity(),
                            -std::numeric_limits<double>::infinity(),
                            -std::numeric_limits<double>::infinity() };
        for (auto const& p: pts)
        {
            box.min_x = std::min(box.min_x, p.x);
            box.min_y = std::min(box.min_y, p.y);
            box.max_x = std::max(box.max_x, p.x);
            box.max_y = std::max(box.max_y, p.y);
        }
        return box;
    }

    Bounds inflate(Bounds b, double by)
    {
        return { b.min_x - by, b.min_y - by, b.max_x + by, b.max_y + by };
    }

    void sort_unique(std::vector<std::uint32_t>& ids)
    {
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    }

} // namespace

double signed_area2(const std::vector<Vec2>& polygon)
{
    auto sum = 0.0;
    for (std::size_t i = 0; i < polygon.size(); ++i)
        sum += cross(polygon[i], polygon[(i + 1) % polygon.size()]);
    return sum;
}

bool polygon_is_simple(const std::vector<Vec2>& polygon)
{
    auto const n = polygon.size();
    if (n < 3)
        return false;
    for (std::size_t i = 0; i < n; ++i)
    {
        auto const a1 = polygon[i];
        auto const a2 = polygon[(i + 1) % n];
        if (a1 == a2)
            return false;
        for (std::size_t j = i + 1; j < n; ++j)
        {
            auto const b1 = polygon[j];
            auto const b2 = polygon[(j + 1) % n];
            auto const adjacent = (j == i + 1) || (i == 0 && j == n - 1);
            if (!adjacent)
            {
                if (segments_touch(a1, a2, b1, b2))
                    return false;
                continue;
            }
            // Adjacent edges share one vertex; they must not fold back onto each other.
            auto const shared = (j == i + 1) ? a2 : a1;
            auto const p = (j == i + 1) ? a1 : a2;
            auto const q = (j == i + 1) ? b2 : b1;
            if (orientation(p, shared, q) == 0 && dot(p - shared, q - shared) > 0.0)
                return false;
        }
    }
    return signed_area2(polygon) != 0.0;
}

double distance_to_boundary(const std::vector<Vec2>& polygon, Vec2 p)
{
    auto best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < polygon.size(); ++i)
        best = std::min(best, point_segment_distance(p, polygon[i], polygon[(i + 1) % polygon.size()]));
    return best;
}

bool polygon_contains(const std::vector<Vec2>& polygon, Vec2 p, double tolerance)
{
    if (polygon.size() < 3)
        return false;
    if (distance_to_boundary(polygon, p) <= tolerance)
        return true;
    auto inside = false;
    for (std::size_t i = 0, j = polygon.size() - 1; i < polygon.size(); j = i++)
    {
        auto const& a = polygon[i];
        auto const& b = polygon[j];
        if ((a.y > p.y) != (b.y > p.y))
        {
            auto const x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < x)
                inside = !inside;
        }
    }
    return inside;
}

// ---------------------------------------------------------------------------
// Environment

Environment Environment::build(std::string name,
                               Bounds bounds,
                               std::vector<BuildingFootprint> buildings,
                               double cell_size)
{
    if (!(cell_size > 0.0) || !std::isfinite(cell_size))
        throw EnvironmentValidationError(fmt::format("spatial index cell size must be positive, got {}", cell_size));
    if (!std::isfinite(bounds.min_x) || !std::isfinite(bounds.min_y) || !std::isfinite(bounds.max_x)
        || !std::isfinite(bounds.max_y) || bounds.min_x > bounds.max_x || bounds.min_y > bounds.max_y)
        throw EnvironmentValidationError("bounds must be finite with min <= max");

    auto env = Environment {};
    env._name = std::move(name);
    env._bounds = bounds;
    env._cellSize = cell_size;

    auto seen = std::set<std::int64_t> {};
    for (auto& b: buildings)
    {
        if (!seen.insert(b.id).second)
            throw EnvironmentValidationError(fmt::format("duplicate building id {}", b.id));
        if (!(b.height > 0.0) || !std::isfinite(b.height))
            throw EnvironmentValidationError(fmt::format("building {}: height must be positive", b.id));
        if (b.vertices.size() >= 2 && b.vertices.front() == b.vertices.back())
            b.vertices.pop_back();
        if (b.vertices.size() < 3)
            throw EnvironmentValidationError(fmt::format("building {}: needs at least 3 vertices", b.id));
        for (auto const& v: b.vertices)
        {
            if (!std::isfinite(v.x) || !std::isfinite(v.y))
                throw EnvironmentValidationError(fmt::format("building {}: non-finite vertex", b.id));
            if (!inflate(bounds, kGeomTolerance).contains(v))
                throw EnvironmentValidationError(
                    fmt::format("building {}: vertex ({}, {}) outside bounds", b.id, v.x, v.y));
        }
        if (!polygon_is_simple(b.vertices))
            throw EnvironmentValidationError(fmt::format("building {}: footprint is not a simple polygon", b.id));
        if (signed_area2(b.vertices) < 0.0)
            std::reverse(b.vertices.begin(), b.vertices.end());
    }
    env._buildings = std::move(buildings);

    for (std::size_t bi = 0; bi < env._buildings.size(); ++bi)
    {
        auto const& b = env._buildings[bi];
        env._buildingBoxes.push_back(box_of(b.vertices));
        for (std::size_t k = 0; k < b.vertices.size(); ++k)
        {
            auto const a = b.vertices[k];
            auto const c = b.vertices[(k + 1) % b.vertices.size()];
            auto const d = c - a;
            auto const len = norm(d);
            env._facades.push_back(Facade {
                .index = env._facades.size(),
                .building_id = b.id,
                .building_index = bi,
                .a = a,
                .b = c,
                .height = b.height,
                .outward_normal = { d.y / len, -d.x / len },
            });
        }
    }

    env._cols = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(bounds.width() / cell_size)));
    env._rows = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(bounds.height() / cell_size)));
    env._facadeCells.assign(env._cols * env._rows, {});
    env._buildingCells.assign(env._cols * env._rows, {});

    for (auto const& f: env._facades)
        env.visit_segment_cells(f.a, f.b, [&](std::size_t cell) {
            env._facadeCells[cell].push_back(static_cast<std::uint32_t>(f.index));
        });
    for (std::size_t bi = 0; bi < env._buildingBoxes.size(); ++bi)
        env.visit_box_cells(env._buildingBoxes[bi], [&](std::size_t cell) {
            env._buildingCells[cell].push_back(static_cast<std::uint32_t>(bi));
        });
    for (auto& ids: env._facadeCells)
        sort_unique(ids);
    for (auto& ids: env._buildingCells)
        sort_unique(ids);
    return env;
}

std::optional<std::size_t> Environment::building_index(std::int64_t id) const
{
    for (std::size_t i = 0; i < _buildings.size(); ++i)
        if (_buildings[i].id == id)
            return i;
    return std::nullopt;
}

int Environment::col_of(double x) const
{
    auto const c = std::floor((x - _bounds.min_x) / _cellSize);
    return static_cast<int>(std::clamp(c, 0.0, static_cast<double>(_cols - 1)));
}

int Environment::row_of(double y) const
{
    auto const r = std::floor((y - _bounds.min_y) / _cellSize);
    return static_cast<int>(std::clamp(r, 0.0, static_cast<double>(_rows - 1)));
}

template <typename Visit>
void Environment::visit_box_cells(const Bounds& box, Visit&& visit) const
{
    auto const b = inflate(box, kGeomTolerance);
    if (!b.intersects(_bounds))
        return;
    for (auto r = row_of(b.min_y); r <= row_of(b.max_y); ++r)
        for (auto c = col_of(b.min_x); c <= col_of(b.max_x); ++c)
            visit(static_cast<std::size_t>(r) * _cols + static_cast<std::size_t>(c));
}

// Conservative traversal: for every column the segment spans, visit the rows
// covered by the segment's y-extent inside that column (inflated by the tolerance).
template <typename Visit>
void Environment::visit_segment_cells(Vec2 from, Vec2 to, Visit&& visit) const
{
    auto const segBox = inflate(Bounds { std::min(from.x, to.x),
                                         std::min(from.y, to.y),
                                         std::max(from.x, to.x),
                                         std::max(from.y, to.y) },
                                kGeomTolerance);
    if (!segBox.intersects(_bounds))
        return;

    auto const dx = to.x - from.x;
    auto const dy = to.y - from.y;
    for (auto c = col_of(segBox.min_x); c <= col_of(segBox.max_x); ++c)
    {
        auto lo = segBox.min_y;
        auto hi = segBox.max_y;
        if (std::abs(dx) > 0.0)
        {
            auto const cellX0 = _bounds.min_x + c * _cellSize;
            auto const cellX1 = cellX0 + _cellSize;
            // Edge columns absorb everything beyond the bounds after clamping.
            auto const x0 = std::max(segBox.min_x, c == 0 ? segBox.min_x : cellX0 - kGeomTolerance);
            auto const x1 = std::min(segBox.max_x,
                                     static_cast<std::size_t>(c) == _cols - 1 ? segBox.max_x : cellX1 + kGeomTolerance);
            if (x0 > x1)
                continue;
            auto const y0 = from.y + (std::clamp(x0, std::min(from.x, to.x), std::max(from.x, to.x)) - from.x) * dy / dx;
            auto const y1 = from.y + (std::clamp(x1, std::min(from.x, to.x), std::max(from.x, to.x)) - from.x) * dy / dx;
            lo = std::min(y0, y1) - kGeomTolerance;
            hi = std::max(y0, y1) + kGeomTolerance;
        }
        for (auto r = row_of(lo); r <= row_of(hi); ++r)
            visit(static_cast<std::size_t>(r) * _cols + static_cast<std::size_t>(c));
    }
}

std::optional<std::size_t> Environment::building_at(Vec2 p) const
{
    auto candidates = std::vector<std::uint32_t> {};
    visit_box_cells(Bounds { p.x, p.y, p.x, p.y }, [&](std::size_t cell) {
        candidates.insert(candidates.end(), _buildingCells[cell].begin(), _buildingCells[cell].end());
    });
    sort_unique(candidates);
    for (auto const bi: candidates)
    {
        if (!inflate(_buildingBoxes[bi], kGeomTolerance).contains(p))
            continue;
        if (polygon_contains(_buildings[bi].vertices, p))
            return bi;
    }
    return std::nullopt;
}

std::optional<std::int64_t> Environment::point_in_building(Vec2 p) const
{
    if (auto const bi = building_at(p))
        return _buildings[*bi].id;
    return std::nullopt;
}

std::vector<const Facade*> Environment::facades_near(Vec2 from, Vec2 to) const
{
    auto ids = std::vector<std::uint32_t> {};
    visit_segment_cells(from, to, [&](std::size_t cell) {
        ids.insert(ids.end(), _facadeCells[cell].begin(), _facadeCells[cell].end());
    });
    sort_unique(ids);
    auto out = std::vector<const Facade*> {};
    out.reserve(ids.size());
    for (auto const id: ids)
        out.push_back(&_facades[id]);
    return out;
}

std::vector<const Facade*> Environment::facades_near(const Bounds& region) const
{
    auto ids = std::vector<std::uint32_t> {};
    visit_box_cells(region, [&](std::size_t cell) {
        ids.insert(ids.end(), _facadeCells[cell].begin(), _facadeCells[cell].end());
    });
    sort_unique(ids);
    auto const query = inflate(region, kGeomTolerance);
    auto out = std::vector<const Facade*> {};
    for (auto const id: ids)
    {
        auto const& f = _facades[id];
        if (query.intersects(box_of({ f.a, f.b })))
            out.push_back(&f);
    }
    return out;
}

std::vector<std::size_t> Environment::buildings_near(Vec2 from, Vec2 to) const
{
    auto ids = std::vector<std::uint32_t> {};
    visit_segment_cells(from, to, [&](std::size_t cell) {
        ids.insert(ids.end(), _buildingCells[cell].begin(), _buildingCells[cell].end());
    });
    sort_unique(ids);
    return { ids.begin(), ids.end() };
}

// ---------------------------------------------------------------------------
// Serialization

namespace
{

    template <typename T>
    T field(const nlohmann::json& obj, const char* key, std::string_view context)
    {
        if (!obj.is_object() || !obj.contains(key))
            throw EnvironmentParseError(fmt::format("{}: missing field '{}'", context, key));
        try
        {
            return obj.at(key).get<T>();
        }
        catch (const nlohmann::json::exception&)
        {
            throw EnvironmentParseError(fmt::format("{}: field '{}' has the wrong type", context, key));
        }
    }

} // namespace

Environment environment_from_json(const nlohmann::json& doc, double cell_size)
{
    if (!doc.is_object())
        throw EnvironmentParseError("environment document must be a JSON object");
    auto name = field<std::string>(doc, "name", "environment");
    auto const& jb = doc.contains("bounds") ? doc.at("bounds") : nlohmann::json {};
    auto const bounds = Bounds {
        field<double>(jb, "min_x", "bounds"),
        field<double>(jb, "min_y", "bounds"),
        field<double>(jb, "max_x", "bounds"),
        field<double>(jb, "max_y", "bounds"),
    };
    if (!doc.contains("buildings") || !doc.at("buildings").is_array())
        throw EnvironmentParseError("environment: 'buildings' must be an array");

    auto buildings = std::vector<BuildingFootprint> {};
    for (auto const& jbld: doc.at("buildings"))
    {
        auto b = BuildingFootprint {};
        b.id = field<std::int64_t>(jbld, "id", "building");
        b.height = field<double>(jbld, "height", fmt::format("building {}", b.id));
        auto const verts = field<std::vector<std::vector<double>>>(jbld, "vertices", fmt::format("building {}", b.id));
        for (auto const& v: verts)
        {
            if (v.size() != 2)
                throw EnvironmentParseError(fmt::format("building {}: vertices must be [x, y] pairs", b.id));
            b.vertices.push_back({ v[0], v[1] });
        }
        buildings.push_back(std::move(b));
    }
    return Environment::build(std::move(name), bounds, std::move(buildings), cell_size);
}

nlohmann::json environment_to_json(const Environment& env)
{
    auto buildings = nlohmann::json::array();
    for (auto const& b: env.buildings())
    {
        auto verts = nlohmann::json::array();
        for (auto const& v: b.vertices)
            verts.push_back({ v.x, v.y });
        buildings.push_back({ { "id", b.id }, { "height", b.height }, { "vertices", std::move(verts) } });
    }
    auto const& bb = env.bounds();
    return {
        { "name", env.name() },
        { "bounds", { { "min_x", bb.min_x }, { "min_y", bb.min_y }, { "max_x", bb.max_x }, { "max_y", bb.max_y } } },
        { "buildings", std::move(buildings) },
    };
}

Environment load_environment(const std::filesystem::path& path, double cell_size)
{
    auto in = std::ifstream(path);
    if (!in)
        throw EnvironmentParseError(fmt::format("cannot open environment file '{}'", path.string()));
    auto doc = nlohmann::json {};
    try
    {
        doc = nlohmann::json::parse(in);
    }
    catch (const nlohmann::json::parse_error& e)
    {
        throw EnvironmentParseError(fmt::format("{}: {}", path.string(), e.what()));
    }
    return environment_from_json(doc, cell_size);
}

void save_environment(const Environment& env, const std::filesystem::path& path)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    auto out = std::ofstream(path, std::ios::binary | std::ios::trunc);
    out << environment_to_json(env).dump(2) << '\n';
    if (!out)
        throw EnvironmentError(fmt::format("failed writing '{}'", path.string()));
}

// ---------------------------------------------------------------------------
// Generator

Environment gen_environment(const GridSpec& spec)
{
    if (spec.rows < 1 || spec.cols < 1)
        throw EnvironmentValidationError("grid spec: rows and cols must be >= 1");
    if (!(spec.block_size > 0.0) || !(spec.street_width > 0.0))
        throw EnvironmentValidationError("grid spec: block size and street width must be positive");
    if (!(spec.min_height > 0.0) || spec.max_height < spec.min_height)
        throw EnvironmentValidationError("grid spec: need 0 < min_height <= max_height");

    // mt19937_64 output is fully specified by the standard; distributions are not.
    auto rng = std::mt19937_64(spec.seed);
    auto draw_height = [&] {
        auto const u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        auto const h = std::round((spec.min_height + u * (spec.max_height - spec.min_height)) * 10.0) / 10.0;
        return std::clamp(h, spec.min_height, spec.max_height);
    };

    auto const pitch = spec.block_size + spec.street_width;
    auto const bounds = Bounds { 0.0, 0.0, spec.cols * pitch + spec.street_width, spec.rows * pitch + spec.street_width };
    auto buildings = std::vector<BuildingFootprint> {};
    for (auto r = 0; r < spec.rows; ++r)
        for (auto c = 0; c < spec.cols; ++c)
        {
            auto const x0 = spec.street_width + c * pitch;
            auto const y0 = spec.street_width + r * pitch;
            auto const x1 = x0 + spec.block_size;
            auto const y1 = y0 + spec.block_size;
            buildings.push_back(BuildingFootprint {
                .id = static_cast<std::int64_t>(buildings.size() + 1),
                .vertices = { { x0, y0 }, { x1, y0 }, { x1, y1 }, { x0, y1 } },
                .height = draw_height(),
            });
        }
    return Environment::build(spec.name, bounds, std::move(buildings));
}

Environment gen_environment(const GridSpec& spec, const std::filesystem::path& path)
{
    auto env = gen_environment(spec);
    save_environment(env, path);
    return env;
}

} // namespace radiosim
