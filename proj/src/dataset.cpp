// SPDX-License-Identifier: Apache-2.0
#include <radiosim/radiomap.hpp>
#include <radiosim/util.hpp>

#include <fmt/format.h>

#include <charconv>
#include <fstream>

namespace radiosim
{

std::string dataset_text(const RadioMapResult& result)
{
    auto const& g = result.grids;
    auto out = std::string(kDatasetHeader);
    out += '\n';
    out.reserve(out.size() + static_cast<std::size_t>(result.nx() * result.ny()) * 160);
    for (auto j = 0; j < result.ny(); ++j)
        for (auto i = 0; i < result.nx(); ++i)
        {
            auto const rx = result.receiver(i, j);
            out += format_double(rx.x);
            out += ' ';
            out += format_double(rx.y);
            out += ' ';
            out += format_double(rx.z);
            out += ' ';
            out += static_cast<char>('0' + g.los_mask.at(i, j));
            out += ' ';
            out += format_double(g.phi.at(i, j));
            out += ' ';
            out += format_double(g.d3d.at(i, j));
            out += ' ';
            out += static_cast<char>('0' + g.ref_mask.at(i, j));
            out += ' ';
            out += static_cast<char>('0' + g.building_mask.at(i, j));
            out += ' ';
            out += format_double(g.height_map.at(i, j));
            out += ' ';
            out += format_double(g.pathloss_db.at(i, j));
            out += '\n';
        }
    return out;
}

void export_dataset(const RadioMapResult& result, const std::filesystem::path& path)
{
    try
    {
        write_file_atomic(path, dataset_text(result));
    }
    catch (const std::exception& e)
    {
        throw DatasetError(e.what());
    }
}

namespace
{

    double parse_number(std::string_view token, std::size_t line)
    {
        auto value = 0.0;
        auto const [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
        if (ec != std::errc {} || ptr != token.data() + token.size())
            throw DatasetError(fmt::format("dataset line {}: bad number '{}'", line, token));
        return value;
    }

    std::uint8_t parse_flag(std::string_view token, std::size_t line)
    {
        if (token == "0")
            return 0;
        if (token == "1")
            return 1;
        throw DatasetError(fmt::format("dataset line {}: expected 0 or 1, got '{}'", line, token));
    }

} // namespace

RadioMapGrids parse_dataset(std::string_view text, int nx, int ny)
{
    auto grids = RadioMapGrids(nx, ny);
    auto pos = std::size_t { 0 };
    auto lineNo = std::size_t { 0 };
    auto next_line = [&]() -> std::optional<std::string_view> {
        if (pos >= text.size())
            return std::nullopt;
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos)
            end = text.size();
        auto line = text.substr(pos, end - pos);
        pos = end + 1;
        ++lineNo;
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        return line;
    };

    auto header = next_line();
    if (!header || *header != kDatasetHeader)
        throw DatasetError("dataset header does not match the expected columns");

    auto const total = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
    for (std::size_t k = 0; k < total; ++k)
    {
        auto line = next_line();
        if (!line)
            throw DatasetError(fmt::format("dataset has {} rows, expected {}", k, total));
        auto tokens = std::vector<std::string_view> {};
        auto start = std::size_t { 0 };
        while (start <= line->size())
        {
            auto const sp = line->find(' ', start);
            auto const end = sp == std::string_view::npos ? line->size() : sp;
            tokens.push_back(line->substr(start, end - start));
            start = end + 1;
        }
        if (tokens.size() != 10)
            throw DatasetError(fmt::format("dataset line {}: expected 10 columns, got {}", lineNo, tokens.size()));
        auto const i = static_cast<int>(k % static_cast<std::size_t>(nx));
        auto const j = static_cast<int>(k / static_cast<std::size_t>(nx));
        grids.los_mask.at(i, j) = parse_flag(tokens[3], lineNo);
        grids.phi.at(i, j) = parse_number(tokens[4], lineNo);
        grids.d3d.at(i, j) = parse_number(tokens[5], lineNo);
        grids.ref_mask.at(i, j) = parse_flag(tokens[6], lineNo);
        grids.building_mask.at(i, j) = parse_flag(tokens[7], lineNo);
        grids.height_map.at(i, j) = parse_number(tokens[8], lineNo);
        grids.pathloss_db.at(i, j) = parse_number(tokens[9], lineNo);
    }
    while (auto line = next_line())
        if (!line->empty())
            throw DatasetError(fmt::format("dataset has more than {} rows", total));
    return grids;
}

RadioMapGrids read_dataset(const std::filesystem::path& path, int nx, int ny)
{
    auto text = std::string {};
    try
    {
        text = read_file(path);
    }
    catch (const std::runtime_error& e)
    {
        throw DatasetError(e.what());
    }
    return parse_dataset(text, nx, ny);
}

nlohmann::json metadata_json(const RadioMapResult& result)
{
    auto const& b = result.bounds;
    return {
        { "run_id", result.run_id },
        { "created_at", result.created_at },
        { "code_version", fmt::format("radiosim {}", kVersion) },
        { "environment", { { "name", result.environment_name }, { "content_hash", result.environment_hash } } },
        { "params", params_to_json(result.params) },
        { "grid",
          {
              { "nx", result.nx() },
              { "ny", result.ny() },
              { "bounds", { { "min_x", b.min_x }, { "min_y", b.min_y }, { "max_x", b.max_x }, { "max_y", b.max_y } } },
              { "rx_height", result.params.receiver_height() },
              { "uncovered_value", kUncovered },
              { "row_order", "row-major, lowest y first" },
          } },
        { "dataset_columns", nlohmann::json::array({ "rx_x", "rx_y", "rx_z", "los", "phi", "d3d", "ref", "bld", "height",
                                                     "pathloss_db" }) },
        { "files", { { "dataset", kDatasetFile }, { "heatmap", kHeatmapFile }, { "metadata", kMetadataFile } } },
        { "warnings", result.warnings },
    };
}

void write_metadata(const RadioMapResult& result, const std::filesystem::path& path)
{
    try
    {
        write_file_atomic(path, metadata_json(result).dump(2) + "\n");
    }
    catch (const std::exception& e)
    {
        throw DatasetError(e.what());
    }
}

RadioMapResult load_result(const std::filesystem::path& run_dir)
{
    auto meta = nlohmann::json {};
    try
    {
        meta = nlohmann::json::parse(read_file(run_dir / kMetadataFile));
    }
    catch (const std::exception& e)
    {
        throw DatasetError(fmt::format("cannot read run metadata in '{}': {}", run_dir.string(), e.what()));
    }
    try
    {
        auto result = RadioMapResult {};
        result.params = params_from_json(meta.at("params"));
        result.run_id = meta.at("run_id").get<std::string>();
        result.created_at = meta.at("created_at").get<std::string>();
        result.environment_name = meta.at("environment").at("name").get<std::string>();
        result.environment_hash = meta.at("environment").at("content_hash").get<std::string>();
        auto const& b = meta.at("grid").at("bounds");
        result.bounds = { b.at("min_x").get<double>(), b.at("min_y").get<double>(), b.at("max_x").get<double>(),
                          b.at("max_y").get<double>() };
        result.warnings = meta.value("warnings", std::vector<std::string> {});
        result.grids = read_dataset(run_dir / kDatasetFile, result.nx(), result.ny());
        return result;
    }
    catch (const nlohmann::json::exception& e)
    {
        throw DatasetError(fmt::format("malformed run metadata in '{}': {}", run_dir.string(), e.what()));
    }
}

void write_run_artifacts(const RadioMapResult& result, const std::filesystem::path& dir, const HeatmapOptions& heatmap)
{
    std::filesystem::create_directories(dir);
    export_dataset(result, dir / kDatasetFile);
    render_heatmap(result, dir / kHeatmapFile, heatmap);
    write_metadata(result, dir / kMetadataFile);
}

} // namespace radiosim
