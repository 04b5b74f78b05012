// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one PASS/FAIL line per criterion. Runs offline (scripted
// planner, local stub chat server).
#include <radiosim/agent.hpp>
#include <radiosim/analysis.hpp>
#include <radiosim/catalog.hpp>
#include <radiosim/chat.hpp>
#include <radiosim/propagation.hpp>
#include <radiosim/radiomap.hpp>
#include <radiosim/runstore.hpp>
#include <radiosim/util.hpp>

#include <fmt/format.h>
#include <oracles.hpp>
#include <p2109_oracle.hpp>
#include <reflection_law.hpp>
#include <stub_chat.hpp>
#include <test_util.hpp>

#include <chrono>
#include <functional>
#include <set>

using namespace radiosim;
using namespace radiosim::testing;
using nlohmann::json;

namespace
{

using Clock = std::chrono::steady_clock;

struct Outcome
{
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

constexpr auto kPaperPrompt =
    "Simulate pathloss in the Munich01 scenario with a UAV at (100, 100, 15) over a 50\xC3\x97"
    "50 receiver grid considering all propagation mechanisms, and provide a concise technical summary of the "
    "resulting pathloss heatmap.";

Outcome transcript_fidelity()
{
    auto const t0 = Clock::now();
    auto dir = TempDir {};
    auto const catalog = std::make_shared<EnvironmentCatalog>(catalog_path());
    auto const reg = default_registry({ catalog, std::make_shared<RunStore>(dir / "runs"), nullptr });
    auto planner = ScriptedPlanner(catalog->names());
    auto const t = run_episode(reg, planner, kPaperPrompt);
    auto const elapsed = seconds_since(t0);

    auto inputs = std::vector<const AgentTurn*> {};
    auto actions = std::vector<std::string> {};
    for (auto const& turn: t.turns)
    {
        if (turn.kind == TurnKind::ActionInput)
            inputs.push_back(&turn);
        if (turn.kind == TurnKind::Action)
            actions.push_back((*turn.payload)["tool"].get<std::string>());
    }
    if (inputs.empty())
        return { false, "no tool call in the transcript" };
    auto const expected = json { { "tx_x", 100.0 }, { "tx_y", 100.0 }, { "tx_z", 15.0 }, { "location", "munich01" },
                                 { "nx", 50 },      { "ny", 50 },      { "LOS", true },  { "REF", true },
                                 { "GREF", true },  { "NLOS", true },  { "BEL", true } };
    auto const& args = (*inputs[0]->payload)["arguments"];
    auto const ok = args == expected && inputs[0]->content.starts_with("tx_x = 100, tx_y = 100, tx_z = 15")
                    && actions == std::vector<std::string> { std::string(kSimulateTool), std::string(kSummarizeTool) }
                    && t.turns.back().kind == TurnKind::FinalAnswer && transcript_well_formed(t.turns) && elapsed < 10.0;
    return { ok, fmt::format("action input \"{}\"; tools {}; {:.2f} s", inputs[0]->content.substr(0, 34), fmt::join(actions, " -> "), elapsed) };
}

Outcome synthetic_value_range()
{
    auto const catalog = EnvironmentCatalog(catalog_path());
    auto p = SimulationParams {};
    p.location = "synthetic01";
    p.tx = { 100, 100, 15 };
    auto const r = simulate_radio_environment(p, catalog);
    auto const s = summarize_pathloss_map(r);
    auto minD = std::numeric_limits<double>::infinity();
    for (auto d: r.grids.d3d.values)
        minD = std::min(minD, d);
    auto const lo = fspl(minD, p.radio.frequency_ghz);
    auto outside = 0;
    for (auto v: r.grids.pathloss_db.values)
        if (is_covered(v) && (v < lo || v > 200.0))
            ++outside;
    // Diagnostic only: the lowest loss any single mechanism produces. Each
    // contribution is bounded by fspl of its cell distance, but the power sum
    // of two comparable paths can drop up to 3 dB below either.
    auto singleMin = std::numeric_limits<double>::infinity();
    for (auto m: { Mechanisms { true, false, false, false, false },
                   Mechanisms { false, true, false, false, false },
                   Mechanisms { false, false, true, false, false },
                   Mechanisms { false, false, false, true, false } })
    {
        auto q = p;
        q.mechanisms = m;
        for (auto v: simulate_radio_environment(q, catalog).grids.pathloss_db.values)
            if (is_covered(v))
                singleMin = std::min(singleMin, v);
    }
    auto const ok = s.strongest == Quadrant::LowerLeft && s.weakest == Quadrant::UpperRight && outside == 0;
    return { ok,
             fmt::format("strongest {}, weakest {}; values {:.2f}..{:.2f} dB vs band [{:.2f}, 200] dB, {} cells outside; "
                         "lowest single-mechanism value {:.2f} dB",
                         to_string(s.strongest),
                         to_string(s.weakest),
                         s.min_db,
                         s.max_db,
                         lo,
                         outside,
                         singleMin) };
}

Outcome free_space()
{
    auto const env = Environment::build("empty", { 0, 0, 500, 500 }, {});
    auto p = SimulationParams {};
    p.location = "empty";
    p.tx = { 100, 100, 15 };
    p.mechanisms = { true, false, false, false, false };
    auto const t0 = Clock::now();
    auto const r = simulate_radio_environment(p, env);
    auto const elapsed = seconds_since(t0);
    auto worst = 0.0;
    for (auto j = 0; j < 50; ++j)
        for (auto i = 0; i < 50; ++i)
        {
            auto const c = r.receiver(i, j);
            auto const d = std::sqrt((c.x - 100) * (c.x - 100) + (c.y - 100) * (c.y - 100) + (c.z - 15) * (c.z - 15));
            worst = std::max(worst, std::abs(r.grids.pathloss_db.at(i, j) - fspl(d, 3.5)));
        }
    return { worst <= 1e-9 && elapsed < 1.0, fmt::format("max deviation {:.3g} dB over 2500 cells; {:.3f} s", worst, elapsed) };
}

Outcome occlusion_oracle()
{
    auto rng = std::mt19937_64(20240611);
    auto pairs = 0, disagreements = 0, ambiguous = 0, blocked = 0;
    while (pairs < 12000)
    {
        auto const env = oracle::random_scene(rng);
        for (auto k = 0; k < 60; ++k, ++pairs)
        {
            auto const p = oracle::random_outdoor_point(rng, env);
            auto const q = oracle::random_outdoor_point(rng, env);
            auto const got = los_blocked(env, p, q);
            auto const v = oracle::occlusion(env, p, q);
            if (v == oracle::Verdict::Ambiguous)
                ++ambiguous;
            else if (got != (v == oracle::Verdict::Blocked))
                ++disagreements;
            blocked += got;
        }
    }
    return { disagreements == 0,
             fmt::format("{} pairs, {} blocked, {} disagreements, {} within the grazing band", pairs, blocked, disagreements, ambiguous) };
}

Outcome reflection_oracle()
{
    auto rng = std::mt19937_64(777);
    auto cases = 0, mismatches = 0, paths = 0, ambiguous = 0;
    auto worstLength = 0.0, worstAngle = 0.0;
    for (auto scene = 0; scene < 100; ++scene)
    {
        auto const env = oracle::random_scene(rng);
        for (auto k = 0; k < 20; ++k, ++cases)
        {
            auto const tx = oracle::random_outdoor_point(rng, env, 1, 40);
            auto const rx = oracle::random_outdoor_point(rng, env, 1, 40);
            auto const got = wall_reflections(env, tx, rx);
            auto const ref = oracle::reflections(env, tx, rx);
            auto const skip = std::set<std::size_t>(ref.ambiguous_facades.begin(), ref.ambiguous_facades.end());
            ambiguous += static_cast<int>(skip.size());
            auto gotIds = std::set<std::size_t> {}, refIds = std::set<std::size_t> {};
            for (auto const& p: got)
                if (!skip.contains(*p.facade_index))
                    gotIds.insert(*p.facade_index);
            for (auto const& r: ref.paths)
                refIds.insert(r.facade_index);
            mismatches += gotIds != refIds;
            paths += static_cast<int>(refIds.size());
            for (auto const& p: got)
            {
                auto const& f = env.facades()[*p.facade_index];
                worstAngle = std::max(worstAngle, reflection_residual(tx, p.vertices[1], rx, f.outward_normal.x, f.outward_normal.y, 0));
                for (auto const& r: ref.paths)
                    if (r.facade_index == *p.facade_index)
                        worstLength = std::max(worstLength, std::abs(r.length - p.total_length));
            }
        }
    }
    auto const ok = mismatches == 0 && worstLength <= 1e-9 && worstAngle < 1e-9;
    return { ok,
             fmt::format("{} tx/rx pairs, {} oracle paths, {} set mismatches, {} grazing facades skipped; max length error {:.3g} m, "
                         "max angle residual {:.3g} rad",
                         cases,
                         paths,
                         mismatches,
                         ambiguous,
                         worstLength,
                         worstAngle) };
}

Outcome golden_formulas()
{
    auto const f = fspl(100, 3.5);
    auto const n = nlos_3gpp(100, 3.5, 1.5).db;
    auto worstCombine = 0.0;
    for (auto l: { 50.0, 83.32, 100.0, 150.0, 199.0 })
        worstCombine = std::max(worstCombine, std::abs(*combine_contributions(std::vector<double> { l, l }) - (l - 3.0103)));
    // 10 log10(2) = 3.0102999566, so the 3.0103 reference itself sits 4.3e-8 dB away.
    auto const ok = std::abs(f - 83.32) <= 0.01 && std::abs(n - 104.59) <= 0.01 && worstCombine <= 1e-6;
    return { ok, fmt::format("fspl {:.4f} dB, nlos {:.4f} dB, combine deviation {:.2g} dB", f, n, worstCombine) };
}

Outcome monotonicity()
{
    auto rng = std::mt19937_64(4242);
    auto uni = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
    auto violations = 0, compared = 0, uncoveredOutdoor = 0;
    for (auto scene = 0; scene < 20; ++scene)
    {
        auto spec = GridSpec {};
        spec.name = "sweep";
        spec.rows = 2 + static_cast<int>(rng() % 4);
        spec.cols = 2 + static_cast<int>(rng() % 4);
        spec.block_size = uni(20, 60);
        spec.street_width = uni(10, 30);
        spec.min_height = uni(5, 15);
        spec.max_height = spec.min_height + uni(0, 30);
        spec.seed = rng();
        auto const env = gen_environment(spec);
        auto p = SimulationParams {};
        p.location = "sweep";
        p.nx = p.ny = 24;
        auto const& b = env.bounds();
        do
            p.tx = { uni(b.min_x, b.max_x), uni(b.min_y, b.max_y), uni(2, 40) };
        while (env.point_in_building(p.tx.xy()));

        auto run = [&](Mechanisms m) {
            auto q = p;
            q.mechanisms = m;
            return simulate_radio_environment(q, env).grids;
        };
        auto const base = run({ true, false, false, false, false });
        auto const ref = run({ true, true, false, false, false });
        auto const gref = run({ true, false, true, false, false });
        auto const full = run({});
        for (std::size_t k = 0; k < base.pathloss_db.values.size(); ++k)
        {
            auto const l = base.pathloss_db.values[k];
            if (is_covered(l))
            {
                compared += 2;
                violations += ref.pathloss_db.values[k] > l;
                violations += gref.pathloss_db.values[k] > l;
            }
            if (!full.building_mask.values[k] && !is_covered(full.pathloss_db.values[k]))
                ++uncoveredOutdoor;
        }
    }
    return { violations == 0 && uncoveredOutdoor == 0,
             fmt::format("20 scenes, {} cell comparisons, {} increases; {} uncovered outdoor cells with NLOS on", compared, violations,
                         uncoveredOutdoor) };
}

Outcome bel_consistency()
{
    auto const model = bel_p2109(3.5, 0, 0.5);
    auto const mc = oracle::bel_monte_carlo_quantile(3.5, 0, 0.5, 100'000);
    return { std::abs(model - mc) <= 0.2, fmt::format("median {:.4f} dB vs Monte-Carlo {:.4f} dB (100000 draws)", model, mc) };
}

Outcome dataset_roundtrip()
{
    auto const catalog = EnvironmentCatalog(catalog_path());
    auto p = SimulationParams {};
    p.location = "synthetic01";
    p.tx = { 100, 100, 15 };
    auto const r = simulate_radio_environment(p, catalog);
    auto dir = TempDir {};
    export_dataset(r, dir / "dataset.txt");
    auto const text = read_file(dir / "dataset.txt");
    auto const rows = std::count(text.begin(), text.end(), '\n') - 1;
    auto const back = read_dataset(dir / "dataset.txt", 50, 50);
    auto const& a = r.grids;
    auto const same = std::array { back.pathloss_db == a.pathloss_db, back.los_mask == a.los_mask, back.phi == a.phi,
                                   back.d3d == a.d3d,                 back.ref_mask == a.ref_mask, back.building_mask == a.building_mask,
                                   back.height_map == a.height_map };
    auto const exact = std::count(same.begin(), same.end(), true);
    return { exact == 7 && rows == 2500, fmt::format("{} data rows, {}/7 grids bit-identical", rows, exact) };
}

Outcome chat_contract()
{
    auto dir = TempDir {};
    auto const catalog = std::make_shared<EnvironmentCatalog>(catalog_path());
    auto const reg = default_registry({ catalog, std::make_shared<RunStore>(dir / "runs"), nullptr });
    auto stub = StubChatServer {};

    // Golden request: first request of an episode, compared with the recorded fixture.
    stub.push(assistant_text("nothing to do"));
    {
        auto planner = ChatPlanner(std::make_shared<ChatClient>(ChatEndpoint { .base_url = stub.base_url(), .model = "stub-model", .api_key = "test-key" }),
                                   catalog->names());
        (void)run_episode(default_registry({}), planner, "Simulate pathloss in the Munich01 scenario with a UAV at (100, 100, 15).");
    }
    auto const golden = json::parse(read_file(source_dir() / "tests" / "fixtures" / "chat_request_golden.json"));
    auto const goldenOk = stub.requests().at(0).json() == golden;
    auto shapeOk = true;
    for (auto const& tool: golden["tools"])
        shapeOk = shapeOk && tool["type"] == "function" && tool["function"]["parameters"]["type"] == "object"
                  && tool["function"]["parameters"]["properties"].is_object();

    // Canned two-tool episode.
    stub.push(assistant_tool_call("call_1", std::string(kSimulateTool),
                                  R"({"tx_x": 100, "tx_y": 100, "tx_z": 15, "location": "munich01", "nx": 50, "ny": 50})"));
    auto planner = ChatPlanner(std::make_shared<ChatClient>(ChatEndpoint { .base_url = stub.base_url(), .model = "stub-model", .api_key = "test-key" }),
                               catalog->names());
    auto queued = false;
    auto const t = run_episode(reg, planner, kPaperPrompt, {}, [&](const AgentTurn& turn) {
        if (turn.kind == TurnKind::Observation && !queued)
        {
            queued = true;
            auto const image = turn.payload->value("data", json::object()).value("image_path", std::string {});
            stub.push(assistant_tool_call("call_2", std::string(kSummarizeTool), json { { "image_path", image } }.dump()));
            stub.push(assistant_text("Strong signal in the lower-left quadrant, weaker towards the upper-right."));
        }
    });
    auto okCalls = 0;
    for (auto const& turn: t.turns)
        if (turn.kind == TurnKind::Observation && (*turn.payload)["ok"] == true)
            ++okCalls;
    auto const episodeOk = okCalls == 2 && t.turns.back().kind == TurnKind::FinalAnswer && transcript_well_formed(t.turns);
    return { goldenOk && shapeOk && episodeOk,
             fmt::format("golden request {}, declaration shape {}, episode {} successful tool calls, {} requests",
                         goldenOk ? "matches" : "differs",
                         shapeOk ? "ok" : "bad",
                         okCalls,
                         stub.requests().size()) };
}

} // namespace

int main()
{
    auto const criteria = std::vector<std::pair<std::string, std::function<Outcome()>>> {
        { "transcript fidelity", transcript_fidelity },
        { "synthetic quadrant pattern and value band", synthetic_value_range },
        { "free-space oracle", free_space },
        { "occlusion oracle equivalence", occlusion_oracle },
        { "reflection oracle equivalence", reflection_oracle },
        { "formula golden values", golden_formulas },
        { "mechanism monotonicity and NLOS coverage", monotonicity },
        { "building entry loss consistency", bel_consistency },
        { "dataset roundtrip", dataset_roundtrip },
        { "chat endpoint contract", chat_contract },
    };
    auto failures = 0;
    auto n = 0;
    for (auto const& [name, check]: criteria)
    {
        auto outcome = Outcome {};
        auto const t0 = Clock::now();
        try
        {
            outcome = check();
        }
        catch (const std::exception& e)
        {
            outcome = { false, fmt::format("exception: {}", e.what()) };
        }
        failures += !outcome.pass;
        fmt::print("{} [{:>2}] {}: {} ({:.2f} s)\n", outcome.pass ? "PASS" : "FAIL", ++n, name, outcome.detail, seconds_since(t0));
        std::fflush(stdout);
    }
    fmt::print("{} of {} criteria passed\n", n - failures, n);
    return failures == 0 ? 0 : 1;
}
