// SPDX-License-Identifier: Apache-2.0
#include <radiosim/agent.hpp>
#include <radiosim/analysis.hpp>
#include <radiosim/cli.hpp>
#include <radiosim/runstore.hpp>
#include <radiosim/server.hpp>
#include <radiosim/util.hpp>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <cstdlib>
#include <ostream>

namespace radiosim
{

namespace
{

    namespace fs = std::filesystem;

    std::pair<double, double> parse_range(const std::string& text)
    {
        auto const colon = text.find(':');
        if (colon == std::string::npos)
            throw ParamsError(fmt::format("--range expects LO:HI, got '{}'", text));
        auto lo = 0.0, hi = 0.0;
        try
        {
            lo = std::stod(text.substr(0, colon));
            hi = std::stod(text.substr(colon + 1));
        }
        catch (const std::exception&)
        {
            throw ParamsError(fmt::format("--range expects two numbers, got '{}'", text));
        }
        if (!(lo < hi))
            throw ParamsError(fmt::format("--range needs LO < HI, got '{}'", text));
        return { lo, hi };
    }

    std::string env_or(const char* name, std::string fallback)
    {
        if (auto const* v = std::getenv(name); v && *v)
            return v;
        return fallback;
    }

    struct Globals
    {
        std::string data_dir = "data";
        std::string catalog;
        unsigned threads = 0;

        [[nodiscard]] fs::path catalog_path() const
        {
            return catalog.empty() ? fs::path(data_dir) / "catalog.json" : fs::path(catalog);
        }
    };

    struct ChatFlags
    {
        std::string base_url = env_or("RADIOSIM_CHAT_BASE_URL", "");
        std::string model = env_or("RADIOSIM_CHAT_MODEL", "");
        std::string api_key_env = std::string(kDefaultApiKeyEnv);

        void add_to(CLI::App* cmd)
        {
            cmd->add_option("--base-url", base_url, "Chat-completions base URL (env RADIOSIM_CHAT_BASE_URL)");
            cmd->add_option("--model", model, "Chat model name (env RADIOSIM_CHAT_MODEL)");
            cmd->add_option("--api-key-env", api_key_env, "Environment variable holding the API key")
                ->capture_default_str();
        }

        [[nodiscard]] ChatEndpoint endpoint() const
        {
            auto e = ChatEndpoint {};
            e.base_url = base_url;
            e.model = model;
            e.api_key_env = api_key_env;
            return e;
        }
    };

    struct SimulateFlags
    {
        double tx_x = 0, tx_y = 0, tx_z = 0;
        std::string location;
        int nx = 50, ny = 50;
        bool los = false, ref = false, gref = false, nlos = false, bel = false, los_only = false;
        bool no_los = false, no_ref = false, no_gref = false, no_nlos = false, no_bel = false;
        double frequency = RadioConfig {}.frequency_ghz;
        double rx_height = RadioConfig {}.rx_height_default;
        double wall_permittivity = RadioConfig {}.wall_permittivity;
        double ground_permittivity = RadioConfig {}.ground_permittivity;
        std::string building_class = "traditional";
        double bel_probability = RadioConfig {}.bel_probability;
        std::string out;
        std::string range;
        int scale = HeatmapOptions {}.scale;

        [[nodiscard]] SimulationParams params() const
        {
            auto p = SimulationParams {};
            p.tx = { tx_x, tx_y, tx_z };
            p.location = location;
            p.nx = nx;
            p.ny = ny;
            auto const selected = los || ref || gref || nlos || bel || los_only;
            auto& m = p.mechanisms;
            if (los_only)
                m = { true, false, false, false, false };
            else if (selected)
                m = { los, ref, gref, nlos, bel };
            m.los = m.los && !no_los;
            m.ref = m.ref && !no_ref;
            m.gref = m.gref && !no_gref;
            m.nlos = m.nlos && !no_nlos;
            m.bel = m.bel && !no_bel;
            p.radio.frequency_ghz = frequency;
            p.radio.wall_permittivity = wall_permittivity;
            p.radio.ground_permittivity = ground_permittivity;
            auto cls = building_class_from_string(building_class);
            if (!cls)
                throw ParamsError(fmt::format("unknown building class '{}'", building_class));
            p.radio.building_class = *cls;
            p.radio.bel_probability = bel_probability;
            p.rx_height = rx_height;
            return p;
        }
    };

    HeatmapOptions heatmap_options(const std::string& range, int scale)
    {
        auto h = HeatmapOptions {};
        h.scale = scale;
        if (!range.empty())
            h.color_range = parse_range(range);
        return h;
    }

    void print_catalog(std::ostream& os, const EnvironmentCatalog& catalog)
    {
        fmt::print(os, "available environments:\n");
        for (auto const& e: catalog.entries())
            fmt::print(os, "  {:<12} {}{}\n", e.name, e.description, e.substitute ? " (substitute)" : "");
    }

    int cmd_simulate(const Globals& g, const SimulateFlags& f, std::ostream& out, std::ostream& err)
    {
        auto catalog = EnvironmentCatalog(g.catalog_path());
        auto params = f.params();
        auto const heatmap = heatmap_options(f.range, f.scale);
        auto store = RunStore(fs::path(g.data_dir) / "runs", SimulationOptions { g.threads });
        auto env = std::shared_ptr<const Environment> {};
        try
        {
            env = store.prepare(params, catalog);
        }
        catch (const UnknownEnvironmentError& e)
        {
            fmt::print(err, "error: {}\n", e.what());
            print_catalog(err, catalog);
            return kExitValidation;
        }
        auto result = simulate_radio_environment(params, *env, SimulationOptions { g.threads });

        auto dir = fs::path {};
        if (f.out.empty())
            dir = store.persist(result, heatmap).directory;
        else
        {
            dir = f.out;
            write_run_artifacts(result, dir, heatmap);
        }

        auto covered = std::vector<double> {};
        for (auto v: result.grids.pathloss_db.values)
            if (is_covered(v))
                covered.push_back(v);
        fmt::print(out, "run_id: {}\n", result.run_id);
        fmt::print(out, "environment: {} ({})\n", params.location, result.environment_name);
        fmt::print(out, "grid: {}x{}, {} of {} cells covered\n", params.nx, params.ny, covered.size(),
                   result.grids.pathloss_db.values.size());
        if (!covered.empty())
            fmt::print(out,
                       "pathloss_db: min {} max {}\n",
                       format_double(*std::min_element(covered.begin(), covered.end())),
                       format_double(*std::max_element(covered.begin(), covered.end())));
        for (auto const& w: result.warnings)
            fmt::print(out, "warning: {}\n", w);
        fmt::print(out, "dataset: {}\n", (dir / kDatasetFile).generic_string());
        fmt::print(out, "heatmap: {}\n", (dir / kHeatmapFile).generic_string());
        fmt::print(out, "metadata: {}\n", (dir / kMetadataFile).generic_string());
        return kExitOk;
    }

    int cmd_agent(const Globals& g,
                  const std::string& prompt,
                  const std::string& backend,
                  const ChatFlags& chat,
                  int max_iterations,
                  bool json,
                  std::ostream& out,
                  std::ostream& err)
    {
        auto catalog = std::make_shared<EnvironmentCatalog>(g.catalog_path());
        auto store = std::make_shared<RunStore>(fs::path(g.data_dir) / "runs", SimulationOptions { g.threads });
        auto planner = std::unique_ptr<Planner> {};
        if (backend == "scripted")
            planner = std::make_unique<ScriptedPlanner>(catalog->names());
        else
            planner = std::make_unique<ChatPlanner>(std::make_shared<ChatClient>(chat.endpoint()), catalog->names());

        auto registry = default_registry({ catalog, store, nullptr });
        auto limits = EpisodeLimits {};
        limits.max_iterations = max_iterations;
        auto transcript = run_episode(registry, *planner, prompt, limits);

        auto const episodes = fs::path(g.data_dir) / "episodes";
        try
        {
            fs::create_directories(episodes);
            write_file_atomic(episodes / (transcript.episode_id + ".json"), transcript_to_json(transcript).dump(2) + "\n");
        }
        catch (const std::exception& e)
        {
            fmt::print(err, "warning: transcript not saved: {}\n", e.what());
        }

        if (json)
            fmt::print(out, "{}\n", transcript_to_json(transcript).dump(2));
        else
            fmt::print(out, "{}", transcript_text(transcript));
        return transcript.error ? kExitValidation : kExitOk;
    }

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    auto app = CLI::App { "Urban radio propagation simulator with a tool-calling agent.", "radiosim" };
    app.set_version_flag("--version", fmt::format("radiosim {}", kVersion));
    app.require_subcommand(1);

    auto g = Globals {};
    app.add_option("--data-dir", g.data_dir, "Data directory (catalog, runs, episodes)")->capture_default_str();
    app.add_option("--catalog", g.catalog, "Catalog file (default <data-dir>/catalog.json)");
    app.add_option("--threads", g.threads, "Worker threads for grid simulation (0 = all cores)")->capture_default_str();

    // simulate
    auto sf = SimulateFlags {};
    auto* simulate = app.add_subcommand("simulate", "Simulate a radio map and write dataset, heatmap and metadata");
    simulate->add_option("--tx-x", sf.tx_x, "Transmitter x (m)")->required();
    simulate->add_option("--tx-y", sf.tx_y, "Transmitter y (m)")->required();
    simulate->add_option("--tx-z", sf.tx_z, "Transmitter height (m)")->required();
    simulate->add_option("--location", sf.location, "Environment name from the catalog")->required();
    simulate->add_option("--nx", sf.nx, "Receiver grid cells along x")->capture_default_str();
    simulate->add_option("--ny", sf.ny, "Receiver grid cells along y")->capture_default_str();
    simulate->add_flag("--los", sf.los, "Enable LOS (giving any mechanism flag selects exactly those given)");
    simulate->add_flag("--ref", sf.ref, "Enable wall reflections");
    simulate->add_flag("--gref", sf.gref, "Enable ground reflection");
    simulate->add_flag("--nlos", sf.nlos, "Enable the empirical NLOS fallback");
    simulate->add_flag("--bel", sf.bel, "Enable building entry loss");
    simulate->add_flag("--los-only", sf.los_only, "Only the direct ray");
    simulate->add_flag("--no-los", sf.no_los, "Disable LOS");
    simulate->add_flag("--no-ref", sf.no_ref, "Disable wall reflections");
    simulate->add_flag("--no-gref", sf.no_gref, "Disable ground reflection");
    simulate->add_flag("--no-nlos", sf.no_nlos, "Disable the NLOS fallback");
    simulate->add_flag("--no-bel", sf.no_bel, "Disable building entry loss");
    simulate->add_option("--frequency", sf.frequency, "Carrier frequency (GHz)")->capture_default_str();
    simulate->add_option("--rx-height", sf.rx_height, "Receiver height (m)")->capture_default_str();
    simulate->add_option("--wall-permittivity", sf.wall_permittivity, "Wall relative permittivity")
        ->capture_default_str();
    simulate->add_option("--ground-permittivity", sf.ground_permittivity, "Ground relative permittivity")
        ->capture_default_str();
    simulate->add_option("--building-class", sf.building_class, "traditional or thermally_efficient")
        ->capture_default_str();
    simulate->add_option("--bel-probability", sf.bel_probability, "Building entry loss probability")
        ->capture_default_str();
    simulate->add_option("--out", sf.out, "Output directory (default <data-dir>/runs/<run_id>)");
    simulate->add_option("--range", sf.range, "Heatmap colour range LO:HI in dB (default p1:p99)");
    simulate->add_option("--scale", sf.scale, "Heatmap pixels per cell")->capture_default_str();

    // agent
    auto prompt = std::string {};
    auto backend = std::string("scripted");
    auto chat = ChatFlags {};
    auto maxIterations = EpisodeLimits {}.max_iterations;
    auto agentJson = false;
    auto* agent = app.add_subcommand("agent", "Run one agent episode and print the transcript");
    agent->add_option("--prompt", prompt, "Natural-language request")->required();
    agent->add_option("--backend", backend, "Planner backend")
        ->check(CLI::IsMember({ "scripted", "remote" }))
        ->capture_default_str();
    chat.add_to(agent);
    agent->add_option("--max-iterations", maxIterations, "Planner step limit")->capture_default_str();
    agent->add_flag("--json", agentJson, "Print the transcript as JSON");

    // render
    auto runDir = std::string {};
    auto renderOut = std::string {};
    auto renderRange = std::string {};
    auto renderScale = HeatmapOptions {}.scale;
    auto noMarker = false;
    auto* render = app.add_subcommand("render", "Render the heatmap of a run directory");
    render->add_option("--run", runDir, "Run directory")->required();
    render->add_option("--out", renderOut, "PNG path (default <run>/pathloss.png)");
    render->add_option("--range", renderRange, "Colour range LO:HI in dB");
    render->add_option("--scale", renderScale, "Pixels per cell")->capture_default_str();
    render->add_flag("--no-marker", noMarker, "Omit the transmitter marker");

    // summarize
    auto summaryJson = false;
    auto gradientThreshold = SummaryOptions {}.gradient_threshold_db;
    auto* summarize = app.add_subcommand("summarize", "Summarize the pathloss map of a run directory");
    summarize->add_option("--run", runDir, "Run directory")->required();
    summarize->add_option("--gradient-threshold", gradientThreshold, "High-gradient threshold (dB per cell)")
        ->capture_default_str();
    summarize->add_flag("--json", summaryJson, "Print the summary statistics as JSON");

    // gen-env
    auto spec = GridSpec {};
    auto envOut = std::string {};
    auto* genEnv = app.add_subcommand("gen-env", "Generate a Manhattan-grid environment file");
    genEnv->add_option("--name", spec.name, "Environment name")->capture_default_str();
    genEnv->add_option("--rows", spec.rows, "Block rows")->capture_default_str();
    genEnv->add_option("--cols", spec.cols, "Block columns")->capture_default_str();
    genEnv->add_option("--block-size", spec.block_size, "Block edge (m)")->capture_default_str();
    genEnv->add_option("--street-width", spec.street_width, "Street width (m)")->capture_default_str();
    genEnv->add_option("--min-height", spec.min_height, "Minimum building height (m)")->capture_default_str();
    genEnv->add_option("--max-height", spec.max_height, "Maximum building height (m)")->capture_default_str();
    genEnv->add_option("--seed", spec.seed, "Random seed")->capture_default_str();
    genEnv->add_option("--out", envOut, "Output file")->required();

    // environments
    auto* environments = app.add_subcommand("environments", "List catalog environments");

    // serve
    auto cfg = ServerConfig {};
    auto staticDir = std::string {};
    auto vision = false;
    auto* serve = app.add_subcommand("serve", "Run the HTTP API server");
    serve->add_option("--host", cfg.host, "Listen address")->capture_default_str();
    serve->add_option("--port", cfg.port, "Listen port")->capture_default_str();
    serve->add_option("--static-dir", staticDir, "UI bundle directory served at /");
    chat.add_to(serve);
    serve->add_flag("--vision", vision, "Summarize heatmaps with the chat endpoint's vision model");

    // purge
    auto yes = false;
    auto* purge = app.add_subcommand("purge", "Delete all stored runs");
    purge->add_flag("--yes", yes, "Confirm deletion");

    auto reversed = std::vector<std::string>(args.rbegin(), args.rend());
    if (!reversed.empty())
        reversed.pop_back(); // program name
    try
    {
        app.parse(std::move(reversed));
    }
    catch (const CLI::ParseError& e)
    {
        auto const code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try
    {
        if (simulate->parsed())
            return cmd_simulate(g, sf, out, err);

        if (agent->parsed())
            return cmd_agent(g, prompt, backend, chat, maxIterations, agentJson, out, err);

        if (render->parsed())
        {
            auto result = load_result(runDir);
            auto opts = heatmap_options(renderRange, renderScale);
            opts.tx_marker = !noMarker;
            auto const path = renderOut.empty() ? fs::path(runDir) / kHeatmapFile : fs::path(renderOut);
            auto const info = render_heatmap(result, path, opts);
            fmt::print(out, "heatmap: {}\n", path.generic_string());
            fmt::print(out, "size: {}x{} px\n", info.width, info.height);
            fmt::print(out, "colorbar: {} .. {} dB\n", format_double(info.range_lo), format_double(info.range_hi));
            fmt::print(out, "labels: {}\n", fmt::join(info.colorbar_labels, " | "));
            return kExitOk;
        }

        if (summarize->parsed())
        {
            auto result = load_result(runDir);
            auto const summary = summarize_pathloss_map(result, SummaryOptions { gradientThreshold });
            if (summaryJson)
                fmt::print(out, "{}\n", summary_to_json(summary).dump(2));
            else
                fmt::print(out, "{}\n", render_summary_text(summary));
            return kExitOk;
        }

        if (genEnv->parsed())
        {
            auto env = gen_environment(spec, envOut);
            fmt::print(out, "wrote {} ({} buildings)\n", envOut, env.buildings().size());
            fmt::print(out, "sha256: {}\n", sha256_hex(read_file(envOut)));
            return kExitOk;
        }

        if (environments->parsed())
        {
            auto catalog = EnvironmentCatalog(g.catalog_path());
            print_catalog(out, catalog);
            return kExitOk;
        }

        if (serve->parsed())
        {
            cfg.data_dir = g.data_dir;
            cfg.catalog_path = g.catalog_path();
            cfg.simulation.threads = g.threads;
            if (!staticDir.empty())
                cfg.static_dir = staticDir;
            if (!chat.base_url.empty() || !chat.model.empty())
            {
                cfg.chat = chat.endpoint();
                // Fail early on a missing credential.
                auto probe = ChatClient(*cfg.chat);
            }
            cfg.vision_summaries = vision;
            auto server = RadioSimServer(cfg);
            fmt::print(out, "listening on http://{}:{}\n", cfg.host, cfg.port);
            out.flush();
            server.listen();
            return kExitOk;
        }

        if (purge->parsed())
        {
            if (!yes)
            {
                fmt::print(err, "error: purge deletes every stored run; pass --yes to confirm\n");
                return kExitValidation;
            }
            auto store = RunStore(fs::path(g.data_dir) / "runs");
            fmt::print(out, "removed {} runs\n", store.purge());
            return kExitOk;
        }
    }
    catch (const ParamsError& e)
    {
        fmt::print(err, "error: {}\n", e.what());
        return kExitValidation;
    }
    catch (const std::invalid_argument& e)
    {
        fmt::print(err, "error: {}\n", e.what());
        return kExitValidation;
    }
    catch (const ChatConfigError& e)
    {
        fmt::print(err, "configuration error: {}\n", e.what());
        return kExitValidation;
    }
    catch (const EnvironmentValidationError& e)
    {
        fmt::print(err, "error: {}\n", e.what());
        return kExitValidation;
    }
    catch (const std::exception& e)
    {
        fmt::print(err, "error: {}\n", e.what());
        return kExitIo;
    }
    return kExitValidation;
}

} // namespace radiosim
