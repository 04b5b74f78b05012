// SPDX-License-Identifier: Apache-2.0
#include <radiosim/runstore.hpp>
#include <radiosim/util.hpp>

#include <fmt/format.h>

#include <algorithm>

namespace radiosim
{

namespace fs = std::filesystem;

std::string_view to_string(RunStatus s)
{
    switch (s)
    {
        case RunStatus::Running: return "running";
        case RunStatus::Done: return "done";
        case RunStatus::Failed: return "failed";
    }
    return "?";
}

bool is_run_id(std::string_view id)
{
    return id.size() == 32
           && std::all_of(id.begin(), id.end(), [](char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'); });
}

nlohmann::json run_record_to_json(const RunRecord& r)
{
    auto j = nlohmann::json {
        { "run_id", r.run_id },
        { "status", to_string(r.status) },
        { "params", params_to_json(r.params) },
        { "environment", { { "name", r.environment_name }, { "content_hash", r.environment_hash } } },
        { "created_at", r.created_at },
        { "warnings", r.warnings },
    };
    if (r.status == RunStatus::Done)
        j["files"] = {
            { "dataset", r.dataset_path().generic_string() },
            { "heatmap", r.heatmap_path().generic_string() },
            { "metadata", r.metadata_path().generic_string() },
        };
    if (r.error)
        j["error"] = *r.error;
    return j;
}

RunStore::RunStore(fs::path root, SimulationOptions options): _root(std::move(root)), _options(options)
{
    fs::create_directories(_root);
}

RunStore::~RunStore()
{
    wait_idle();
}

std::shared_ptr<const Environment> RunStore::prepare(const SimulationParams& params,
                                                     const EnvironmentCatalog& catalog) const
{
    params.validate();
    auto env = catalog.environment(params.location);
    if (!env->bounds().contains(params.tx.xy()))
    {
        auto const& b = env->bounds();
        throw ParamsError(fmt::format("transmitter ({}, {}) is outside the bounds of '{}' [{}, {}] x [{}, {}]",
                                      params.tx.x,
                                      params.tx.y,
                                      params.location,
                                      b.min_x,
                                      b.max_x,
                                      b.min_y,
                                      b.max_y));
    }
    return env;
}

RunRecord RunStore::execute(const std::string& run_id,
                            const SimulationParams& params,
                            const std::shared_ptr<const Environment>& env,
                            const HeatmapOptions& heatmap)
{
    auto result = simulate_radio_environment(params, *env, _options);
    result.run_id = run_id;
    return persist(result, heatmap);
}

RunRecord RunStore::persist(const RadioMapResult& result, const HeatmapOptions& heatmap)
{
    if (!is_run_id(result.run_id))
        throw DatasetError(fmt::format("'{}' is not a valid run id", result.run_id));
    auto const staging = _root / ".staging" / result.run_id;
    auto const final = run_dir(result.run_id);
    try
    {
        fs::remove_all(staging);
        write_run_artifacts(result, staging, heatmap);
        fs::rename(staging, final);
    }
    catch (...)
    {
        auto ec = std::error_code {};
        fs::remove_all(staging, ec);
        throw;
    }

    return RunRecord {
        .run_id = result.run_id,
        .status = RunStatus::Done,
        .params = result.params,
        .environment_name = result.environment_name,
        .environment_hash = result.environment_hash,
        .created_at = result.created_at,
        .directory = final,
        .warnings = result.warnings,
        .error = std::nullopt,
    };
}

RunRecord RunStore::run(const SimulationParams& params, const EnvironmentCatalog& catalog, const HeatmapOptions& heatmap)
{
    auto env = prepare(params, catalog);
    return execute(random_id(), params, env, heatmap);
}

RunRecord RunStore::start(const SimulationParams& params,
                          const EnvironmentCatalog& catalog,
                          const HeatmapOptions& heatmap)
{
    auto env = prepare(params, catalog);
    auto record = RunRecord {
        .run_id = random_id(),
        .status = RunStatus::Running,
        .params = params,
        .environment_name = env->name(),
        .environment_hash = environment_hash(*env),
        .created_at = utc_timestamp(),
        .directory = {},
        .warnings = {},
        .error = std::nullopt,
    };
    record.directory = run_dir(record.run_id);

    auto lock = std::lock_guard(_mutex);
    _active[record.run_id] = record;
    _workers.emplace_back([this, id = record.run_id, params, env, heatmap] {
        try
        {
            execute(id, params, env, heatmap);
        }
        catch (const std::exception& e)
        {
            auto lock = std::lock_guard(_mutex);
            auto& failed = _active[id];
            failed.status = RunStatus::Failed;
            failed.error = e.what();
            return;
        }
        auto lock = std::lock_guard(_mutex);
        _active.erase(id);
    });
    return record;
}

std::optional<RunRecord> RunStore::get(std::string_view run_id) const
{
    if (!is_run_id(run_id))
        return std::nullopt;
    {
        auto lock = std::lock_guard(_mutex);
        if (auto it = _active.find(std::string(run_id)); it != _active.end())
            return it->second;
    }
    auto const dir = run_dir(run_id);
    auto meta = nlohmann::json {};
    try
    {
        meta = nlohmann::json::parse(read_file(dir / kMetadataFile));
    }
    catch (const std::exception&)
    {
        return std::nullopt;
    }
    try
    {
        return RunRecord {
            .run_id = meta.at("run_id").get<std::string>(),
            .status = RunStatus::Done,
            .params = params_from_json(meta.at("params")),
            .environment_name = meta.at("environment").at("name").get<std::string>(),
            .environment_hash = meta.at("environment").at("content_hash").get<std::string>(),
            .created_at = meta.at("created_at").get<std::string>(),
            .directory = dir,
            .warnings = meta.value("warnings", std::vector<std::string> {}),
            .error = std::nullopt,
        };
    }
    catch (const std::exception& e)
    {
        throw DatasetError(fmt::format("run {}: malformed metadata: {}", run_id, e.what()));
    }
}

std::vector<std::string> RunStore::list() const
{
    auto out = std::vector<std::string> {};
    for (auto const& entry: fs::directory_iterator(_root))
    {
        auto const name = entry.path().filename().string();
        if (entry.is_directory() && is_run_id(name))
            out.push_back(name);
    }
    std::sort(out.begin(), out.end());
    return out;
}

void RunStore::wait_idle()
{
    auto workers = std::vector<std::jthread> {};
    {
        auto lock = std::lock_guard(_mutex);
        workers.swap(_workers);
    }
    for (auto& w: workers)
        w.join();
}

std::size_t RunStore::purge()
{
    wait_idle();
    auto removed = std::size_t { 0 };
    for (auto const& id: list())
    {
        fs::remove_all(run_dir(id));
        ++removed;
    }
    fs::remove_all(_root / ".staging");
    auto lock = std::lock_guard(_mutex);
    _active.clear();
    return removed;
}

} // namespace radiosim
