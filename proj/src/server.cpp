// SPDX-License-Identifier: Apache-2.0
#include <radiosim/analysis.hpp>
#include <radiosim/server.hpp>
#include <radiosim/util.hpp>

#include <fmt/format.h>
#include <httplib.h>

#include <condition_variable>

namespace radiosim
{

namespace fs = std::filesystem;

struct RadioSimServer::EpisodeState
{
    std::mutex mutex;
    std::condition_variable cv;
    std::string episode_id;
    std::string prompt;
    std::string backend;
    std::vector<AgentTurn> turns;
    std::optional<Transcript> transcript; ///< set when finished
};

/// Counts detached episode threads.
struct RadioSimServer::EpisodeTracker
{
    std::mutex mutex;
    std::condition_variable cv;
    int active = 0;
};

namespace
{

    void send_json(httplib::Response& res, int status, const nlohmann::json& body)
    {
        res.status = status;
        res.set_content(body.dump(2) + "\n", "application/json");
    }

    void send_error(httplib::Response& res, int status, std::string_view message)
    {
        send_json(res, status, { { "error", message } });
    }

    nlohmann::json record_response(const RunRecord& record)
    {
        auto j = run_record_to_json(record);
        auto const base = fmt::format("/api/runs/{}", record.run_id);
        j["urls"] = {
            { "record", base },
            { "heatmap", base + "/heatmap.png" },
            { "dataset", base + "/dataset" },
            { "metadata", base + "/metadata" },
            { "summary", base + "/summary" },
        };
        return j;
    }

} // namespace

RadioSimServer::RadioSimServer(ServerConfig config):
    _config(std::move(config)),
    _tracker(std::make_shared<EpisodeTracker>()),
    _episodesMutex(std::make_shared<std::mutex>()),
    _episodes(std::make_shared<std::map<std::string, std::shared_ptr<EpisodeState>>>())
{
    auto const catalogPath = _config.catalog_path.value_or(_config.data_dir / "catalog.json");
    _catalog = std::make_shared<EnvironmentCatalog>(catalogPath);
    _store = std::make_shared<RunStore>(_config.data_dir / "runs", _config.simulation);
    _episodesDir = _config.data_dir / "episodes";
    fs::create_directories(_episodesDir);
    if (_config.chat && _config.vision_summaries)
        _vision = std::make_shared<ChatClient>(*_config.chat);
    _http = std::make_unique<httplib::Server>();
    routes();
}

RadioSimServer::~RadioSimServer()
{
    stop();
    wait_for_episodes();
}

void RadioSimServer::routes()
{
    auto& http = *_http;

    http.Get("/api/environments", [this](const httplib::Request&, httplib::Response& res) {
        auto list = nlohmann::json::array();
        for (auto const& entry: _catalog->entries())
        {
            auto item = nlohmann::json {
                { "name", entry.name },
                { "description", entry.description },
                { "substitute", entry.substitute },
            };
            try
            {
                auto env = _catalog->environment(entry.name);
                auto const& b = env->bounds();
                item["environment_name"] = env->name();
                item["bounds"] = { { "min_x", b.min_x }, { "min_y", b.min_y }, { "max_x", b.max_x }, { "max_y", b.max_y } };
                item["building_count"] = env->buildings().size();
                item["facade_count"] = env->facades().size();
                item["content_hash"] = environment_hash(*env);
            }
            catch (const std::exception& e)
            {
                item["error"] = e.what();
            }
            list.push_back(std::move(item));
        }
        send_json(res, 200, { { "environments", list } });
    });

    http.Get(R"(/api/environments/([A-Za-z0-9_.\-]+))", [this](const httplib::Request& req, httplib::Response& res) {
        try
        {
            send_json(res, 200, environment_to_json(*_catalog->environment(req.matches[1].str())));
        }
        catch (const UnknownEnvironmentError& e)
        {
            send_error(res, 404, e.what());
        }
        catch (const std::exception& e)
        {
            send_error(res, 500, e.what());
        }
    });

    http.Post("/api/simulate", [this](const httplib::Request& req, httplib::Response& res) {
        auto params = SimulationParams {};
        try
        {
            params = params_from_json(nlohmann::json::parse(req.body));
        }
        catch (const nlohmann::json::parse_error& e)
        {
            return send_error(res, 400, fmt::format("request body is not JSON: {}", e.what()));
        }
        catch (const ParamsError& e)
        {
            return send_error(res, 400, e.what());
        }
        try
        {
            auto const cells = static_cast<long>(params.nx) * static_cast<long>(params.ny);
            if (cells > _config.sync_cell_limit)
                send_json(res, 202, record_response(_store->start(params, *_catalog)));
            else
                send_json(res, 200, record_response(_store->run(params, *_catalog)));
        }
        catch (const UnknownEnvironmentError& e)
        {
            send_error(res, 404, e.what());
        }
        catch (const ParamsError& e)
        {
            send_error(res, 400, e.what());
        }
        catch (const std::exception& e)
        {
            send_error(res, 500, e.what());
        }
    });

    // Resolves a run for artifact routes: 404 unknown, 409 not finished.
    auto finished_run = [this](const std::string& id, httplib::Response& res) -> std::optional<RunRecord> {
        auto record = std::optional<RunRecord> {};
        try
        {
            record = _store->get(id);
        }
        catch (const std::exception& e)
        {
            send_error(res, 500, e.what());
            return std::nullopt;
        }
        if (!record)
        {
            send_error(res, 404, fmt::format("unknown run '{}'", id));
            return std::nullopt;
        }
        if (record->status != RunStatus::Done)
        {
            send_json(res, 409, { { "error", fmt::format("run '{}' is {}", id, to_string(record->status)) }, { "status", to_string(record->status) } });
            return std::nullopt;
        }
        return record;
    };

    http.Get(R"(/api/runs/([0-9a-f]+))", [this](const httplib::Request& req, httplib::Response& res) {
        try
        {
            if (auto record = _store->get(req.matches[1].str()))
                return send_json(res, 200, record_response(*record));
            send_error(res, 404, fmt::format("unknown run '{}'", req.matches[1].str()));
        }
        catch (const std::exception& e)
        {
            send_error(res, 500, e.what());
        }
    });

    auto serve_file = [finished_run](std::string_view which, std::string content_type) {
        return [finished_run, which, content_type](const httplib::Request& req, httplib::Response& res) {
            auto record = finished_run(req.matches[1].str(), res);
            if (!record)
                return;
            auto const path = which == "heatmap"  ? record->heatmap_path()
                              : which == "dataset" ? record->dataset_path()
                                                   : record->metadata_path();
            try
            {
                res.status = 200;
                res.set_content(read_file(path), content_type);
            }
            catch (const std::exception& e)
            {
                send_error(res, 500, e.what());
            }
        };
    };
    http.Get(R"(/api/runs/([0-9a-f]+)/heatmap\.png)", serve_file("heatmap", "image/png"));
    http.Get(R"(/api/runs/([0-9a-f]+)/dataset)", serve_file("dataset", "text/plain; charset=utf-8"));
    http.Get(R"(/api/runs/([0-9a-f]+)/metadata)", serve_file("metadata", "application/json"));

    http.Get(R"(/api/runs/([0-9a-f]+)/summary)", [finished_run](const httplib::Request& req, httplib::Response& res) {
        auto record = finished_run(req.matches[1].str(), res);
        if (!record)
            return;
        try
        {
            auto const summary = summarize_pathloss_map(load_result(record->directory));
            send_json(res, 200, { { "run_id", record->run_id }, { "summary", summary_to_json(summary) }, { "text", render_summary_text(summary) } });
        }
        catch (const EmptyMapError& e)
        {
            send_json(res, 200, { { "run_id", record->run_id }, { "summary", nullptr }, { "text", e.what() } });
        }
        catch (const std::exception& e)
        {
            send_error(res, 500, e.what());
        }
    });

    http.Post("/api/agent/chat", [this](const httplib::Request& req, httplib::Response& res) {
        auto body = nlohmann::json {};
        try
        {
            body = nlohmann::json::parse(req.body);
        }
        catch (const nlohmann::json::parse_error& e)
        {
            return send_error(res, 400, fmt::format("request body is not JSON: {}", e.what()));
        }
        if (!body.is_object() || !body.contains("prompt") || !body["prompt"].is_string())
            return send_error(res, 400, "body needs a string 'prompt'");
        auto const backend = body.value("backend", std::string("scripted"));

        auto planner = std::shared_ptr<Planner> {};
        if (backend == "scripted")
            planner = std::make_shared<ScriptedPlanner>(_catalog->names());
        else if (backend == "remote")
        {
            if (!_config.chat)
                return send_error(res, 400, "remote backend is not configured on this server");
            try
            {
                planner = std::make_shared<ChatPlanner>(std::make_shared<ChatClient>(*_config.chat), _catalog->names());
            }
            catch (const ChatConfigError& e)
            {
                return send_error(res, 400, e.what());
            }
        }
        else
            return send_error(res, 400, fmt::format("unknown backend '{}' (scripted or remote)", backend));

        auto state = std::make_shared<EpisodeState>();
        state->episode_id = random_id();
        state->prompt = body["prompt"].get<std::string>();
        state->backend = backend;
        {
            auto lock = std::lock_guard(*_episodesMutex);
            (*_episodes)[state->episode_id] = state;
        }

        auto registry = std::make_shared<ToolRegistry>(default_registry({ _catalog, _store, _vision }));
        auto tracker = _tracker;
        {
            auto lock = std::lock_guard(tracker->mutex);
            ++tracker->active;
        }
        auto const file = _episodesDir / (state->episode_id + ".json");
        auto const limits = _config.episode_limits;
        std::thread([state, planner, registry, tracker, file, limits] {
            auto on_turn = [&](const AgentTurn& turn) {
                auto lock = std::lock_guard(state->mutex);
                state->turns.push_back(turn);
                state->cv.notify_all();
            };
            auto transcript = run_episode(*registry, *planner, state->prompt, limits, on_turn, state->episode_id);
            try
            {
                write_file_atomic(file, transcript_to_json(transcript).dump(2) + "\n");
            }
            catch (const std::exception&)
            {
                // The in-memory transcript stays retrievable.
            }
            {
                auto lock = std::lock_guard(state->mutex);
                state->transcript = std::move(transcript);
                state->cv.notify_all();
            }
            auto lock = std::lock_guard(tracker->mutex);
            --tracker->active;
            tracker->cv.notify_all();
        }).detach();

        res.set_header("Cache-Control", "no-cache");
        res.set_header("X-Episode-Id", state->episode_id);
        auto sent = std::make_shared<std::size_t>(0);
        auto started = std::make_shared<bool>(false);
        res.set_chunked_content_provider("text/event-stream", [state, sent, started](std::size_t, httplib::DataSink& sink) {
            auto write = [&](std::string_view event, const nlohmann::json& data) {
                auto const frame = fmt::format("event: {}\ndata: {}\n\n", event, data.dump());
                return sink.write(frame.data(), frame.size());
            };
            if (!*started)
            {
                *started = true;
                return write("episode", { { "episode_id", state->episode_id } });
            }
            auto lock = std::unique_lock(state->mutex);
            state->cv.wait_for(lock, std::chrono::milliseconds(250), [&] {
                return state->turns.size() > *sent || state->transcript.has_value();
            });
            auto pending = std::vector<AgentTurn>(state->turns.begin() + static_cast<std::ptrdiff_t>(*sent), state->turns.end());
            auto const finished = state->transcript.has_value() && *sent + pending.size() == state->turns.size();
            auto summary = nlohmann::json {};
            if (finished)
                summary = {
                    { "episode_id", state->episode_id },
                    { "truncated", state->transcript->truncated },
                    { "artifacts", state->transcript->artifacts },
                };
            lock.unlock();

            for (auto const& turn: pending)
            {
                auto j = turn_to_json(turn);
                j["index"] = *sent;
                if (!write("turn", j))
                    return false;
                ++*sent;
            }
            if (finished)
            {
                if (!write("done", summary))
                    return false;
                sink.done();
            }
            return true;
        });
    });

    http.Get(R"(/api/agent/episodes/([0-9a-f]+))", [this](const httplib::Request& req, httplib::Response& res) {
        auto const id = req.matches[1].str();
        auto state = std::shared_ptr<EpisodeState> {};
        {
            auto lock = std::lock_guard(*_episodesMutex);
            if (auto it = _episodes->find(id); it != _episodes->end())
                state = it->second;
        }
        if (state)
        {
            auto lock = std::lock_guard(state->mutex);
            if (state->transcript)
            {
                auto j = transcript_to_json(*state->transcript);
                j["status"] = "done";
                return send_json(res, 200, j);
            }
            auto partial = Transcript { state->episode_id, state->prompt, state->backend, {}, state->turns, {}, false, std::nullopt };
            auto j = transcript_to_json(partial);
            j["status"] = "running";
            return send_json(res, 200, j);
        }
        if (!is_run_id(id))
            return send_error(res, 404, fmt::format("unknown episode '{}'", id));
        try
        {
            auto j = nlohmann::json::parse(read_file(_episodesDir / (id + ".json")));
            j["status"] = "done";
            send_json(res, 200, j);
        }
        catch (const std::exception&)
        {
            send_error(res, 404, fmt::format("unknown episode '{}'", id));
        }
    });

    if (_config.static_dir && fs::is_directory(*_config.static_dir))
        http.set_mount_point("/", _config.static_dir->string());
}

int RadioSimServer::bind()
{
    if (_config.port == 0)
        _port = _http->bind_to_any_port(_config.host);
    else if (_http->bind_to_port(_config.host, _config.port))
        _port = _config.port;
    else
        _port = -1;
    if (_port <= 0)
        throw std::runtime_error(fmt::format("cannot listen on {}:{}", _config.host, _config.port));
    return _port;
}

int RadioSimServer::start()
{
    bind();
    _thread = std::jthread([this] { _http->listen_after_bind(); });
    _http->wait_until_ready();
    return _port;
}

void RadioSimServer::listen()
{
    bind();
    _http->listen_after_bind();
}

void RadioSimServer::stop()
{
    if (_http)
        _http->stop();
    if (_thread.joinable())
        _thread.join();
}

void RadioSimServer::wait_for_episodes()
{
    auto lock = std::unique_lock(_tracker->mutex);
    _tracker->cv.wait(lock, [&] { return _tracker->active == 0; });
}

} // namespace radiosim
