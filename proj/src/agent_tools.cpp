// SPDX-License-Identifier: Apache-2.0
#include <radiosim/agent.hpp>
#include <radiosim/analysis.hpp>
#include <radiosim/catalog.hpp>
#include <radiosim/runstore.hpp>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace radiosim
{

ToolSpec make_simulate_tool(ToolContext context)
{
    auto num = [](std::string name, std::string desc, bool required = true) {
        return ParamSpec { std::move(name), ParamType::Number, std::move(desc), required, std::nullopt };
    };
    auto flag = [](std::string name, std::string desc) {
        return ParamSpec { std::move(name), ParamType::Boolean, std::move(desc), false, nlohmann::json(true) };
    };
    auto spec = ToolSpec {
        .name = std::string(kSimulateTool),
        .description = "Ray-trace a pathloss radio map for one transmitter over a receiver grid spanning the "
                       "environment. Writes a dataset, a heatmap PNG and metadata, and returns their paths.",
        .params =
            {
                num("tx_x", "Transmitter x in meters."),
                num("tx_y", "Transmitter y in meters."),
                num("tx_z", "Transmitter height above ground in meters."),
                ParamSpec { "location", ParamType::String, "Environment name from the catalog.", true, std::nullopt },
                ParamSpec { "nx", ParamType::Integer, "Receiver grid cells along x.", false, nlohmann::json(50) },
                ParamSpec { "ny", ParamType::Integer, "Receiver grid cells along y.", false, nlohmann::json(50) },
                flag("LOS", "Direct line-of-sight ray."),
                flag("REF", "First-order wall reflections."),
                flag("GREF", "Ground reflection."),
                flag("NLOS", "Empirical fallback where no ray exists."),
                flag("BEL", "Building entry loss for indoor receivers."),
                num("frequency_ghz", "Carrier frequency in GHz (default 3.5).", false),
                num("rx_height", "Receiver height in meters (default 1.5).", false),
            },
        .handler = {},
    };
    spec.handler = [ctx = std::move(context)](const nlohmann::json& args) -> ToolResult {
        auto params = SimulationParams {};
        try
        {
            params = params_from_json(args);
        }
        catch (const ParamsError& e)
        {
            throw ToolError(e.what());
        }
        auto record = RunRecord {};
        try
        {
            record = ctx.store->run(params, *ctx.catalog);
        }
        catch (const UnknownEnvironmentError& e)
        {
            throw ToolError(fmt::format("{}; known environments: {}", e.what(), fmt::join(ctx.catalog->names(), ", ")));
        }
        catch (const ParamsError& e)
        {
            throw ToolError(e.what());
        }

        auto text = fmt::format("Simulation completed. Run {} ({}x{} grid, environment '{}'). Pathloss map saved at {}.",
                                record.run_id,
                                params.nx,
                                params.ny,
                                params.location,
                                record.heatmap_path().generic_string());
        if (auto entry = ctx.catalog->find(params.location); entry && entry->substitute)
            text += fmt::format(" '{}' is served by the substitute environment '{}'.",
                                params.location,
                                record.environment_name);
        for (auto const& w: record.warnings)
            text += fmt::format(" Warning: {}.", w);
        return ToolResult {
            .summary = std::move(text),
            .data =
                {
                    { "run_id", record.run_id },
                    { "image_path", record.heatmap_path().generic_string() },
                    { "dataset_path", record.dataset_path().generic_string() },
                    { "metadata_path", record.metadata_path().generic_string() },
                },
            .artifacts = { record.run_id },
        };
    };
    return spec;
}

ToolSpec make_summarize_tool(ToolContext context)
{
    auto spec = ToolSpec {
        .name = std::string(kSummarizeTool),
        .description = "Summarize a pathloss heatmap produced by simulate_radio_environment: value range, strongest "
                       "and weakest quadrants, and sharp gradients.",
        .params = { ParamSpec { "image_path",
                                ParamType::String,
                                "Path of the heatmap PNG returned by the simulation.",
                                true,
                                std::nullopt } },
        .handler = {},
    };
    spec.handler = [ctx = std::move(context)](const nlohmann::json& args) -> ToolResult {
        auto const image = std::filesystem::path(args.at("image_path").get<std::string>());
        auto const dir = image.parent_path();
        if (!std::filesystem::exists(image) || !std::filesystem::exists(dir / kMetadataFile))
            throw ToolError(fmt::format("no simulation run found for '{}'", image.generic_string()));
        auto result = RadioMapResult {};
        try
        {
            result = load_result(dir);
        }
        catch (const DatasetError& e)
        {
            throw ToolError(e.what());
        }
        auto summary = MapSummary {};
        try
        {
            summary = summarize_pathloss_map(result);
        }
        catch (const EmptyMapError& e)
        {
            throw ToolError(e.what());
        }
        auto description = describe_pathloss_map(result, image, ctx.vision.get());
        auto text = description.source == "vision-model" ? "[model-generated] " + description.text : description.text;
        auto data = nlohmann::json {
            { "run_id", result.run_id },
            { "source", description.source },
            { "min_db", summary.min_db },
            { "max_db", summary.max_db },
            { "strongest_quadrant", to_string(summary.strongest) },
            { "weakest_quadrant", to_string(summary.weakest) },
            { "high_gradient_cells", summary.high_gradient_cells.size() },
        };
        if (description.fallback_reason)
            data["fallback_reason"] = *description.fallback_reason;
        return ToolResult { .summary = std::move(text), .data = std::move(data), .artifacts = {} };
    };
    return spec;
}

ToolRegistry default_registry(const ToolContext& context)
{
    auto registry = ToolRegistry {};
    registry.register_tool(make_simulate_tool(context));
    registry.register_tool(make_summarize_tool(context));
    return registry;
}

} // namespace radiosim
