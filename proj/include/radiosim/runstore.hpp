// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <radiosim/catalog.hpp>
#include <radiosim/radiomap.hpp>

#include <json.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace radiosim
{

enum class RunStatus
{
    Running,
    Done,
    Failed,
};

[[nodiscard]] std::string_view to_string(RunStatus s);

struct RunRecord
{
    std::string run_id;
    RunStatus status = RunStatus::Running;
    SimulationParams params;
    std::string environment_name;
    std::string environment_hash;
    std::string created_at;
    std::filesystem::path directory;
    std::vector<std::string> warnings;
    std::optional<std::string> error;

    [[nodiscard]] std::filesystem::path dataset_path() const { return directory / kDatasetFile; }
    [[nodiscard]] std::filesystem::path heatmap_path() const { return directory / kHeatmapFile; }
    [[nodiscard]] std::filesystem::path metadata_path() const { return directory / kMetadataFile; }
};

[[nodiscard]] nlohmann::json run_record_to_json(const RunRecord& record);

/// True for ids this store can have issued (32 lower-case hex chars).
[[nodiscard]] bool is_run_id(std::string_view id);

/// Filesystem run store. Each run is written into <root>/.staging/<id>/ and
/// renamed to <root>/<id>/ once every artifact is on disk, so a visible run
/// directory is always complete.
class RunStore
{
  public:
    explicit RunStore(std::filesystem::path root, SimulationOptions options = {});
    ~RunStore();

    RunStore(const RunStore&) = delete;
    RunStore& operator=(const RunStore&) = delete;

    [[nodiscard]] const std::filesystem::path& root() const noexcept { return _root; }
    [[nodiscard]] std::filesystem::path run_dir(std::string_view run_id) const { return _root / run_id; }

    /// Validates params, resolves the environment and checks the transmitter
    /// position. Throws ParamsError or UnknownEnvironmentError.
    [[nodiscard]] std::shared_ptr<const Environment> prepare(const SimulationParams& params,
                                                             const EnvironmentCatalog& catalog) const;

    /// Simulates and persists synchronously.
    RunRecord run(const SimulationParams& params, const EnvironmentCatalog& catalog, const HeatmapOptions& heatmap = {});

    /// Writes an already computed result as run result.run_id.
    RunRecord persist(const RadioMapResult& result, const HeatmapOptions& heatmap = {});

    /// Validates synchronously, then simulates on a background thread. The
    /// returned record has status Running.
    RunRecord start(const SimulationParams& params,
                    const EnvironmentCatalog& catalog,
                    const HeatmapOptions& heatmap = {});

    /// In-flight and failed runs from memory, finished runs from disk.
    [[nodiscard]] std::optional<RunRecord> get(std::string_view run_id) const;
    [[nodiscard]] std::vector<std::string> list() const;

    /// Blocks until every background run has finished.
    void wait_idle();

    /// Removes all finished runs and staging leftovers. Returns the number of
    /// run directories removed.
    std::size_t purge();

  private:
    RunRecord execute(const std::string& run_id,
                      const SimulationParams& params,
                      const std::shared_ptr<const Environment>& env,
                      const HeatmapOptions& heatmap);

    std::filesystem::path _root;
    SimulationOptions _options;
    mutable std::mutex _mutex;
    std::map<std::string, RunRecord> _active;
    std::vector<std::jthread> _workers;
};

} // namespace radiosim
