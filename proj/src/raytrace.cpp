// SPDX-License-Identifier: Apache-2.0
#include <radiosim/raytrace.hpp>

#include <algorithm>
#include <cmath>
#include <tuple>

namespace radiosim
{

std::string_view to_string(PathKind kind)
{
    switch (kind)
    {
        case PathKind::Direct: return "direct";
        case PathKind::WallReflection: return "wall_reflection";
        case PathKind::GroundReflection: return "ground_reflection";
    }
    return "unknown";
}

RayPath direct_path(const Point3& tx, const Point3& rx)
{
    return RayPath {
        .kind = PathKind::Direct,
        .vertices = { tx, rx },
        .total_length = distance(tx, rx),
        .incidence_angle = std::nullopt,
        .facade_index = std::nullopt,
    };
}

namespace
{

    // Relative slack on edge parameters when collecting crossings. Spurious split
    // points are harmless; missed ones are not.
    constexpr double kParamSlack = 1e-9;

    bool strictly_inside(const std::vector<Vec2>& poly, Vec2 p)
    {
        return distance_to_boundary(poly, p) > kGeomTolerance && polygon_contains(poly, p, 0.0);
    }

    // Splits the 2D projection of a->b at every crossing with the footprint
    // boundary; inside each piece the segment is entirely in or out of the
    // footprint, so testing the piece's midpoint decides it.
    bool segment_enters_prism(const BuildingFootprint& building, const Point3& a, const Point3& b)
    {
        auto const& poly = building.vertices;
        auto const roof = building.height - kGeomTolerance;
        if (std::min(a.z, b.z) >= roof)
            return false;

        auto const A = a.xy();
        auto const D = b.xy() - A;
        auto const len2 = dot(D, D);

        if (len2 == 0.0)
            return strictly_inside(poly, A);

        auto ts = std::vector<double> { 0.0, 1.0 };
        auto const len = std::sqrt(len2);
        for (std::size_t k = 0; k < poly.size(); ++k)
        {
            auto const p = poly[k];
            auto const q = poly[(k + 1) % poly.size()];
            auto const e = q - p;
            auto const denom = cross(D, e);
            auto const elen = norm(e);
            if (std::abs(denom) > 1e-15 * len * elen)
            {
                auto const t = cross(p - A, e) / denom;
                auto const u = cross(p - A, D) / denom;
                if (t >= -kParamSlack && t <= 1.0 + kParamSlack && u >= -kParamSlack && u <= 1.0 + kParamSlack)
                    ts.push_back(std::clamp(t, 0.0, 1.0));
            }
            else if (std::abs(cross(p - A, D)) / len <= kGeomTolerance)
            {
                for (auto const v: { p, q })
                {
                    auto const t = dot(v - A, D) / len2;
                    if (t > 0.0 && t < 1.0)
                        ts.push_back(t);
                }
            }
        }
        std::sort(ts.begin(), ts.end());

        for (std::size_t k = 0; k + 1 < ts.size(); ++k)
        {
            auto const t0 = ts[k];
            auto const t1 = ts[k + 1];
            if (t1 <= t0)
                continue;
            auto const mid = A + (0.5 * (t0 + t1)) * D;
            if (!strictly_inside(poly, mid))
                continue;
            auto const z0 = a.z + t0 * (b.z - a.z);
            auto const z1 = a.z + t1 * (b.z - a.z);
            if (std::min(z0, z1) < roof)
                return true;
        }
        return false;
    }

    // Angle between v and the unit normal n (3D, n horizontal), robust near 0.
    double angle_from_normal(Vec2 n, const Point3& v)
    {
        auto const along = std::abs(n.x * v.x + n.y * v.y);
        auto const tangential = std::hypot(-n.y * v.x + n.x * v.y, v.z);
        return std::atan2(tangential, along);
    }

} // namespace

bool los_blocked(const Environment& env, const Point3& tx, const Point3& rx)
{
    if (tx == rx)
        return false;
    // Canonical endpoint order makes the floating-point path identical both ways.
    auto const swap = std::tie(rx.x, rx.y, rx.z) < std::tie(tx.x, tx.y, tx.z);
    auto const& a = swap ? rx : tx;
    auto const& b = swap ? tx : rx;

    auto const lo = Vec2 { std::min(a.x, b.x) - kGeomTolerance, std::min(a.y, b.y) - kGeomTolerance };
    auto const hi = Vec2 { std::max(a.x, b.x) + kGeomTolerance, std::max(a.y, b.y) + kGeomTolerance };
    for (auto const bi: env.buildings_near(a.xy(), b.xy()))
    {
        auto const& building = env.buildings()[bi];
        auto const& v = building.vertices;
        auto const [minx, maxx] = std::minmax_element(v.begin(), v.end(), [](Vec2 p, Vec2 q) { return p.x < q.x; });
        auto const [miny, maxy] = std::minmax_element(v.begin(), v.end(), [](Vec2 p, Vec2 q) { return p.y < q.y; });
        if (maxx->x < lo.x || minx->x > hi.x || maxy->y < lo.y || miny->y > hi.y)
            continue;
        if (segment_enters_prism(building, a, b))
            return true;
    }
    return false;
}

std::vector<RayPath> wall_reflections(const Environment& env, const Point3& tx, const Point3& rx)
{
    auto paths = std::vector<RayPath> {};
    if (tx == rx)
        return paths;

    for (auto const& f: env.facades())
    {
        auto const dt = f.signed_distance(tx.xy());
        auto const dr = f.signed_distance(rx.xy());
        if (dt <= kGeomTolerance || dr <= kGeomTolerance)
            continue;

        auto const image = tx.xy() - (2.0 * dt) * f.outward_normal;
        auto const s = dt / (dt + dr);
        auto const pxy = image + s * (rx.xy() - image);
        auto const pz = tx.z + s * (rx.z - tx.z);

        auto const flen = f.length();
        auto const along = dot(pxy - f.a, f.b - f.a) / flen;
        if (along < -kGeomTolerance || along > flen + kGeomTolerance)
            continue;
        if (pz < -kGeomTolerance || pz > f.height + kGeomTolerance)
            continue;

        auto const p = Point3 { pxy.x, pxy.y, pz };
        if (los_blocked(env, tx, p) || los_blocked(env, p, rx))
            continue;

        paths.push_back(RayPath {
            .kind = PathKind::WallReflection,
            .vertices = { tx, p, rx },
            .total_length = distance(tx, p) + distance(p, rx),
            .incidence_angle = angle_from_normal(f.outward_normal, Point3 { p.x - tx.x, p.y - tx.y, p.z - tx.z }),
            .facade_index = f.index,
        });
    }
    return paths;
}

std::optional<RayPath> ground_reflection(const Environment& env, const Point3& tx, const Point3& rx)
{
    if (!(tx.z > 0.0) || !(rx.z > 0.0))
        return std::nullopt;

    auto const d = norm(rx.xy() - tx.xy());
    auto const frac = tx.z / (tx.z + rx.z);
    auto const gxy = tx.xy() + frac * (rx.xy() - tx.xy());
    auto const g = Point3 { gxy.x, gxy.y, 0.0 };

    if (env.point_in_building(gxy))
        return std::nullopt;
    if (los_blocked(env, tx, g) || los_blocked(env, g, rx))
        return std::nullopt;

    return RayPath {
        .kind = PathKind::GroundReflection,
        .vertices = { tx, g, rx },
        .total_length = distance(tx, g) + distance(g, rx),
        .incidence_angle = std::atan2(d, tx.z + rx.z),
        .facade_index = std::nullopt,
    };
}

} // namespace radiosim
