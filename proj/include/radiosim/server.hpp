// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <radiosim/agent.hpp>
#include <radiosim/catalog.hpp>
#include <radiosim/chat.hpp>
#include <radiosim/runstore.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

namespace httplib
{
class Server;
}

namespace radiosim
{

struct ServerConfig
{
    std::string host = "127.0.0.1";
    int port = 8080; ///< 0 picks a free port
    std::filesystem::path data_dir = "data";
    std::optional<std::filesystem::path> catalog_path; ///< default <data_dir>/catalog.json
    std::optional<std::filesystem::path> static_dir;   ///< UI bundle mounted at /
    std::optional<ChatEndpoint> chat;                  ///< enables backend "remote" and vision summaries
    bool vision_summaries = false;
    long sync_cell_limit = 200L * 200L; ///< larger grids run asynchronously
    EpisodeLimits episode_limits;
    SimulationOptions simulation;
};

/// HTTP API over the catalog, run store and agent loop.
///
///   POST /api/simulate                 SimulationParams JSON -> run record
///   GET  /api/environments             catalog listing
///   GET  /api/environments/{name}      environment JSON
///   GET  /api/runs/{id}                run record
///   GET  /api/runs/{id}/heatmap.png
///   GET  /api/runs/{id}/dataset
///   GET  /api/runs/{id}/metadata
///   GET  /api/runs/{id}/summary
///   POST /api/agent/chat               {prompt, backend} -> text/event-stream of turns
///   GET  /api/agent/episodes/{id}      transcript
class RadioSimServer
{
  public:
    explicit RadioSimServer(ServerConfig config);
    ~RadioSimServer();

    RadioSimServer(const RadioSimServer&) = delete;
    RadioSimServer& operator=(const RadioSimServer&) = delete;

    /// Binds (port 0 picks one) and serves on a background thread. Returns the port.
    int start();
    /// Binds and serves on the calling thread until stop().
    void listen();
    void stop();
    [[nodiscard]] int port() const noexcept { return _port; }

    [[nodiscard]] EnvironmentCatalog& catalog() { return *_catalog; }
    [[nodiscard]] RunStore& store() { return *_store; }
    [[nodiscard]] const std::filesystem::path& episodes_dir() const noexcept { return _episodesDir; }

    /// Blocks until detached agent episodes have finished (tests, shutdown).
    void wait_for_episodes();

  private:
    void routes();
    int bind();

    ServerConfig _config;
    std::shared_ptr<EnvironmentCatalog> _catalog;
    std::shared_ptr<RunStore> _store;
    std::shared_ptr<ChatClient> _vision;
    std::filesystem::path _episodesDir;
    std::unique_ptr<httplib::Server> _http;
    std::jthread _thread;
    int _port = 0;

    struct EpisodeState;
    struct EpisodeTracker;
    std::shared_ptr<EpisodeTracker> _tracker;
    std::shared_ptr<std::mutex> _episodesMutex;
    std::shared_ptr<std::map<std::string, std::shared_ptr<EpisodeState>>> _episodes;
};

} // namespace radiosim
