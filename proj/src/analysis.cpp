// SPDX-License-Identifier: Apache-2.0
#include <radiosim/analysis.hpp>
#include <radiosim/chat.hpp>
#include <radiosim/util.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace radiosim
{

std::string_view to_string(Quadrant q)
{
    switch (q)
    {
        case Quadrant::LowerLeft: return "lower-left";
        case Quadrant::LowerRight: return "lower-right";
        case Quadrant::UpperLeft: return "upper-left";
        case Quadrant::UpperRight: return "upper-right";
    }
    return "?";
}

Quadrant quadrant_of(int i, int j, int nx, int ny)
{
    auto const left = 2 * i + 1 <= nx;
    auto const lower = 2 * j + 1 <= ny;
    if (lower)
        return left ? Quadrant::LowerLeft : Quadrant::LowerRight;
    return left ? Quadrant::UpperLeft : Quadrant::UpperRight;
}

double MapSummary::coverage_fraction(double threshold_db) const
{
    if (sorted_values.empty())
        return 0.0;
    auto const n = std::upper_bound(sorted_values.begin(), sorted_values.end(), threshold_db) - sorted_values.begin();
    return static_cast<double>(n) / static_cast<double>(sorted_values.size());
}

double gradient_magnitude(const Grid<double>& pl, int i, int j)
{
    auto covered = [&](int a, int b) { return a >= 0 && b >= 0 && a < pl.nx && b < pl.ny && is_covered(pl.at(a, b)); };
    auto axis = [&](int di, int dj) {
        auto const prev = covered(i - di, j - dj);
        auto const next = covered(i + di, j + dj);
        if (prev && next)
            return (pl.at(i + di, j + dj) - pl.at(i - di, j - dj)) / 2.0;
        if (next)
            return pl.at(i + di, j + dj) - pl.at(i, j);
        if (prev)
            return pl.at(i, j) - pl.at(i - di, j - dj);
        return 0.0;
    };
    return std::hypot(axis(1, 0), axis(0, 1));
}

MapSummary summarize_pathloss_map(const Grid<double>& pathloss,
                                  const Grid<std::uint8_t>& building_mask,
                                  const Grid<std::uint8_t>& los_mask,
                                  const SummaryOptions& options)
{
    auto s = MapSummary {};
    s.nx = pathloss.nx;
    s.ny = pathloss.ny;
    s.total_cells = pathloss.values.size();
    s.gradient_threshold_db = options.gradient_threshold_db;

    auto perQuadrant = std::array<std::vector<double>, 4> {};
    auto losCells = std::size_t { 0 };
    for (auto j = 0; j < s.ny; ++j)
        for (auto i = 0; i < s.nx; ++i)
        {
            if (los_mask.at(i, j))
                ++losCells;
            auto const v = pathloss.at(i, j);
            if (!is_covered(v))
                continue;
            s.sorted_values.push_back(v);
            perQuadrant[static_cast<std::size_t>(quadrant_of(i, j, s.nx, s.ny))].push_back(v);
        }
    if (s.sorted_values.empty())
        throw EmptyMapError("pathloss map has no covered cells");

    std::sort(s.sorted_values.begin(), s.sorted_values.end());
    s.covered_cells = s.sorted_values.size();
    s.min_db = s.sorted_values.front();
    s.max_db = s.sorted_values.back();
    s.p5 = percentile(s.sorted_values, 5);
    s.p25 = percentile(s.sorted_values, 25);
    s.p50 = percentile(s.sorted_values, 50);
    s.p75 = percentile(s.sorted_values, 75);
    s.p95 = percentile(s.sorted_values, 95);
    s.los_fraction = s.total_cells ? static_cast<double>(losCells) / static_cast<double>(s.total_cells) : 0.0;

    std::optional<std::size_t> best, worst;
    for (std::size_t q = 0; q < 4; ++q)
    {
        auto& st = s.quadrants[q];
        st.quadrant = static_cast<Quadrant>(q);
        auto const& vals = perQuadrant[q];
        st.covered_cells = vals.size();
        if (vals.empty())
            continue;
        auto sum = 0.0;
        for (auto v: vals)
            sum += v;
        st.mean_db = sum / static_cast<double>(vals.size());
        st.median_db = percentile(vals, 50);
        if (!best || *st.mean_db < *s.quadrants[*best].mean_db)
            best = q;
        if (!worst || *st.mean_db > *s.quadrants[*worst].mean_db)
            worst = q;
    }
    s.strongest = static_cast<Quadrant>(*best);
    s.weakest = static_cast<Quadrant>(*worst);

    auto wallAdjacent = std::size_t { 0 };
    for (auto j = 0; j < s.ny; ++j)
        for (auto i = 0; i < s.nx; ++i)
        {
            if (!is_covered(pathloss.at(i, j)) || gradient_magnitude(pathloss, i, j) <= options.gradient_threshold_db)
                continue;
            s.high_gradient_cells.push_back({ i, j });
            auto nearWall = false;
            for (auto b = std::max(0, j - 1); b <= std::min(s.ny - 1, j + 1); ++b)
                for (auto a = std::max(0, i - 1); a <= std::min(s.nx - 1, i + 1); ++a)
                    nearWall = nearWall || building_mask.at(a, b) != 0;
            if (nearWall)
                ++wallAdjacent;
        }
    if (!s.high_gradient_cells.empty())
        s.wall_adjacent_fraction =
            static_cast<double>(wallAdjacent) / static_cast<double>(s.high_gradient_cells.size());
    return s;
}

MapSummary summarize_pathloss_map(const RadioMapResult& result, const SummaryOptions& options)
{
    return summarize_pathloss_map(result.grids.pathloss_db, result.grids.building_mask, result.grids.los_mask, options);
}

std::string render_summary_text(const MapSummary& s)
{
    auto out = std::string {};
    if (s.min_db == s.max_db)
    {
        out = fmt::format("The pathloss map is uniform at {:.1f} dB over {} covered cells, with no significant spatial "
                          "gradients.",
                          s.min_db,
                          s.covered_cells);
    }
    else
    {
        auto const& strong = s.quadrants[static_cast<std::size_t>(s.strongest)];
        auto const& weak = s.quadrants[static_cast<std::size_t>(s.weakest)];
        out = fmt::format("Pathloss spans {:.1f} dB to {:.1f} dB over {} covered cells (median {:.1f} dB, 5th to 95th "
                          "percentile {:.1f} to {:.1f} dB).",
                          s.min_db,
                          s.max_db,
                          s.covered_cells,
                          s.p50,
                          s.p5,
                          s.p95);
        out += fmt::format(" The strongest signal is in the {} quadrant (mean {:.1f} dB) and the weakest in the {} "
                           "quadrant (mean {:.1f} dB).",
                           to_string(s.strongest),
                           *strong.mean_db,
                           to_string(s.weakest),
                           *weak.mean_db);
        if (s.high_gradient_cells.empty())
            out += fmt::format(" There are no significant spatial gradients above {:g} dB per cell.",
                               s.gradient_threshold_db);
        else if (s.wall_adjacent_fraction >= 0.3)
            out += fmt::format(" {} cells change by more than {:g} dB per cell; {:.0f}% of them border building walls, "
                               "where attenuation rises sharply.",
                               s.high_gradient_cells.size(),
                               s.gradient_threshold_db,
                               100.0 * s.wall_adjacent_fraction);
        else
            out += fmt::format(" {} cells change by more than {:g} dB per cell, mostly away from building walls.",
                               s.high_gradient_cells.size(),
                               s.gradient_threshold_db);
    }
    if (auto const uncovered = s.total_cells - s.covered_cells; uncovered > 0)
        out += fmt::format(" {} of {} cells are not covered by the enabled mechanisms.", uncovered, s.total_cells);
    return out;
}

nlohmann::json summary_to_json(const MapSummary& s)
{
    auto quadrants = nlohmann::json::object();
    for (auto const& q: s.quadrants)
        quadrants[std::string(to_string(q.quadrant))] = {
            { "covered_cells", q.covered_cells },
            { "mean_db", q.mean_db ? nlohmann::json(*q.mean_db) : nlohmann::json(nullptr) },
            { "median_db", q.median_db ? nlohmann::json(*q.median_db) : nlohmann::json(nullptr) },
        };
    auto cells = nlohmann::json::array();
    for (auto const& c: s.high_gradient_cells)
        cells.push_back({ c.i, c.j });
    return {
        { "nx", s.nx },
        { "ny", s.ny },
        { "total_cells", s.total_cells },
        { "covered_cells", s.covered_cells },
        { "value_range", { s.min_db, s.max_db } },
        { "percentiles", { { "p5", s.p5 }, { "p25", s.p25 }, { "p50", s.p50 }, { "p75", s.p75 }, { "p95", s.p95 } } },
        { "quadrants", quadrants },
        { "strongest_quadrant", to_string(s.strongest) },
        { "weakest_quadrant", to_string(s.weakest) },
        { "gradient_threshold_db", s.gradient_threshold_db },
        { "high_gradient_cells", cells },
        { "wall_adjacent_fraction", s.wall_adjacent_fraction },
        { "los_fraction", s.los_fraction },
    };
}

std::string summarize_image_via_vision_model(const std::filesystem::path& image_path,
                                             ChatClient& client,
                                             std::string_view instruction)
{
    auto bytes = std::string {};
    try
    {
        bytes = read_file(image_path);
    }
    catch (const std::runtime_error& e)
    {
        throw ChatError(e.what());
    }
    auto const data = base64_encode(
        std::span(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size()));
    auto messages = nlohmann::json::array({ {
        { "role", "user" },
        { "content",
          nlohmann::json::array({
              { { "type", "text" }, { "text", instruction } },
              { { "type", "image_url" }, { "image_url", { { "url", "data:image/png;base64," + data } } } },
          }) },
    } });
    auto response = client.complete(messages);
    if (!response.content || response.content->empty())
        throw ChatMalformedResponseError("vision model returned no text");
    return *response.content;
}

MapDescription describe_pathloss_map(const RadioMapResult& result,
                                     const std::filesystem::path& image_path,
                                     ChatClient* client,
                                     const SummaryOptions& options)
{
    auto fallbackReason = std::optional<std::string> {};
    if (client)
    {
        try
        {
            return { summarize_image_via_vision_model(image_path, *client), "vision-model", std::nullopt };
        }
        catch (const ChatError& e)
        {
            fallbackReason = e.what();
        }
    }
    return { render_summary_text(summarize_pathloss_map(result, options)), "deterministic", fallbackReason };
}

} // namespace radiosim
