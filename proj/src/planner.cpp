// SPDX-License-Identifier: Apache-2.0
#include <radiosim/agent.hpp>
#include <radiosim/catalog.hpp>
#include <radiosim/util.hpp>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <array>
#include <regex>
#include <set>

namespace radiosim
{

namespace
{

    constexpr std::array<std::string_view, 5> kMechanisms { "LOS", "REF", "GREF", "NLOS", "BEL" };

    std::string regex_escape(std::string_view s)
    {
        static auto const special = std::string_view(R"(\^$.|?*+()[]{})");
        auto out = std::string {};
        for (auto c: s)
        {
            if (special.find(c) != std::string_view::npos)
                out += '\\';
            out += c;
        }
        return out;
    }

    std::set<std::string> mentioned_mechanisms(std::string text)
    {
        auto const icase = std::regex::ECMAScript | std::regex::icase;
        auto found = std::set<std::string> {};
        // Long forms first, then blank them so "non-line-of-sight" does not also read as LOS.
        static auto const longForms = std::array<std::pair<std::regex, std::string>, 5> {
            std::pair { std::regex(R"(non[- ]line[- ]of[- ]sight)", icase), std::string("NLOS") },
            std::pair { std::regex(R"(line[- ]of[- ]sight)", icase), std::string("LOS") },
            std::pair { std::regex(R"(ground[- ]reflections?)", icase), std::string("GREF") },
            std::pair { std::regex(R"(wall[- ]reflections?)", icase), std::string("REF") },
            std::pair { std::regex(R"(building[- ]entry[- ]loss)", icase), std::string("BEL") },
        };
        for (auto const& [re, name]: longForms)
            if (std::regex_search(text, re))
            {
                found.insert(name);
                text = std::regex_replace(text, re, " ");
            }
        for (auto m: kMechanisms)
            if (std::regex_search(text, std::regex("\\b" + std::string(m) + "\\b", icase)))
                found.insert(std::string(m));
        return found;
    }

    std::optional<double> number_after(const std::string& text, const std::regex& re)
    {
        auto m = std::smatch {};
        if (!std::regex_search(text, m, re))
            return std::nullopt;
        return std::stod(m[1].str());
    }

} // namespace

ScriptedPlan scripted_plan(std::string_view promptView, const std::vector<std::string>& known_locations)
{
    auto const prompt = std::string(promptView);
    auto const icase = std::regex::ECMAScript | std::regex::icase;
    auto plan = ScriptedPlan {};

    // Transmitter: "(x, y, z)" or "tx_x = .., tx_y = .., tx_z = ..".
    static auto const triple = std::regex(R"(\(\s*(-?\d+(?:\.\d+)?)\s*,\s*(-?\d+(?:\.\d+)?)\s*,\s*(-?\d+(?:\.\d+)?)\s*\))");
    auto tx = std::optional<std::array<double, 3>> {};
    if (auto m = std::smatch {}; std::regex_search(prompt, m, triple))
        tx = std::array { std::stod(m[1].str()), std::stod(m[2].str()), std::stod(m[3].str()) };
    else
    {
        auto const x = number_after(prompt, std::regex(R"(\btx_x\s*=\s*(-?\d+(?:\.\d+)?))", icase));
        auto const y = number_after(prompt, std::regex(R"(\btx_y\s*=\s*(-?\d+(?:\.\d+)?))", icase));
        auto const z = number_after(prompt, std::regex(R"(\btx_z\s*=\s*(-?\d+(?:\.\d+)?))", icase));
        if (x && y && z)
            tx = std::array { *x, *y, *z };
    }

    // Environment: explicit "location = 'name'" wins, then the longest catalog name mentioned.
    auto location = std::optional<std::string> {};
    if (auto m = std::smatch {}; std::regex_search(prompt, m, std::regex(R"(\blocation\s*=\s*'?([A-Za-z0-9_\-]+))", icase)))
        location = to_lower(m[1].str());
    else
    {
        auto names = known_locations;
        std::sort(names.begin(), names.end(), [](auto& a, auto& b) { return a.size() > b.size(); });
        for (auto const& name: names)
            if (std::regex_search(prompt, std::regex("\\b" + regex_escape(name) + "\\b", icase)))
            {
                location = to_lower(name);
                break;
            }
    }

    if (!tx || !location)
    {
        auto sortedNames = known_locations;
        std::sort(sortedNames.begin(), sortedNames.end());
        auto const envQuestion = fmt::format("Which environment should I use? Known environments: {}.",
                                             fmt::join(sortedNames, ", "));
        auto const txQuestion =
            std::string("Where is the transmitter? Please give its position as (x, y, z) in meters.");
        if (!tx && !location)
            plan.clarification = fmt::format("{} {}", txQuestion, envQuestion);
        else if (!tx)
            plan.clarification = txQuestion;
        else
            plan.clarification = envQuestion;
        return plan;
    }

    auto nx = 50, ny = 50;
    static auto const grid = std::regex(R"(\b(\d+)\s*(?:x|X|\xC3\x97|by)\s*(\d+)\b)");
    if (auto m = std::smatch {}; std::regex_search(prompt, m, grid))
    {
        nx = std::stoi(m[1].str());
        ny = std::stoi(m[2].str());
    }
    else
    {
        if (auto v = number_after(prompt, std::regex(R"(\bnx\s*=\s*(\d+))", icase)))
            nx = static_cast<int>(*v);
        if (auto v = number_after(prompt, std::regex(R"(\bny\s*=\s*(\d+))", icase)))
            ny = static_cast<int>(*v);
    }

    // Mechanisms.
    auto negated = std::set<std::string> {};
    static auto const negation = std::regex(R"(\b(?:without|no|excluding|exclude|disable)\s+(gref|nlos|los|ref|bel)\b)",
                                            std::regex::ECMAScript | std::regex::icase);
    for (auto it = std::sregex_iterator(prompt.begin(), prompt.end(), negation); it != std::sregex_iterator(); ++it)
    {
        auto name = (*it)[1].str();
        std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::toupper(c); });
        negated.insert(name);
    }
    auto mentioned = mentioned_mechanisms(prompt);
    for (auto const& n: negated)
        mentioned.erase(n);
    auto const allPhrase = std::regex_search(prompt, std::regex(R"(\ball\b[\w\s-]{0,30}\bmechanisms?\b)", icase));
    auto const onlyWord = std::regex_search(prompt, std::regex(R"(\bonly\b)", icase));

    auto enabled = std::set<std::string>(kMechanisms.begin(), kMechanisms.end());
    if (!allPhrase && !mentioned.empty() && (onlyWord || negated.empty()))
        enabled = mentioned;
    for (auto const& n: negated)
        enabled.erase(n);

    auto args = nlohmann::json {
        { "tx_x", (*tx)[0] }, { "tx_y", (*tx)[1] }, { "tx_z", (*tx)[2] }, { "location", *location },
        { "nx", nx },         { "ny", ny },
    };
    for (auto m: kMechanisms)
        args[std::string(m)] = enabled.contains(std::string(m));
    if (auto f = number_after(prompt, std::regex(R"((\d+(?:\.\d+)?)\s*GHz\b)", icase)))
        args["frequency_ghz"] = *f;
    plan.simulate_arguments = args;

    plan.summarize = std::regex_search(
        prompt, std::regex(R"(\b(?:summar\w*|describe|description|analy[sz]\w*|interpret\w*|explain\w*)\b)", icase));

    auto flags = std::vector<std::string> {};
    for (auto m: kMechanisms)
        if (enabled.contains(std::string(m)))
            flags.emplace_back(m);
    plan.thought = fmt::format("Requested: environment '{}', transmitter at ({}, {}, {}), {}x{} receiver grid, "
                               "mechanisms {}{}.",
                               *location,
                               format_double((*tx)[0]),
                               format_double((*tx)[1]),
                               format_double((*tx)[2]),
                               nx,
                               ny,
                               flags.empty() ? std::string("none") : fmt::format("{}", fmt::join(flags, ", ")),
                               plan.summarize ? ", followed by a summary of the heatmap" : "");
    return plan;
}

ScriptedPlanner::ScriptedPlanner(std::vector<std::string> known_locations): _locations(std::move(known_locations))
{
}

PlannerStep ScriptedPlanner::next(const EpisodeContext& context)
{
    auto const plan = scripted_plan(context.prompt, _locations);
    if (plan.clarification)
        return { std::nullopt, Clarification { *plan.clarification } };

    if (context.observations.empty())
        return { plan.thought,
                 ToolInvocation {
                     .name = std::string(kSimulateTool),
                     .action_text = fmt::format("Run {} with the extracted parameters.", kSimulateTool),
                     .arguments = plan.simulate_arguments,
                     .raw_arguments = plan.simulate_arguments->dump(),
                     .argument_error = std::nullopt,
                     .call_id = "call_1",
                 } };

    auto const& last = context.observations.back();
    if (last.tool == kSimulateTool)
    {
        if (!last.ok)
            return { std::nullopt, FinalAnswer { fmt::format("The simulation could not run. {}", last.text) } };
        auto const image = last.data.value("image_path", std::string {});
        if (plan.summarize && !image.empty())
            return { std::string("The radio map is on disk; next, summarize the heatmap."),
                     ToolInvocation {
                         .name = std::string(kSummarizeTool),
                         .action_text = fmt::format("Run {} on the new heatmap.", kSummarizeTool),
                         .arguments = nlohmann::json { { "image_path", image } },
                         .raw_arguments = nlohmann::json { { "image_path", image } }.dump(),
                         .argument_error = std::nullopt,
                         .call_id = "call_2",
                     } };
        return { std::nullopt, FinalAnswer { last.text } };
    }
    if (last.tool == kSummarizeTool)
    {
        auto const& sim = context.observations.front();
        auto const runId = sim.data.value("run_id", std::string {});
        if (!last.ok)
            return { std::nullopt,
                     FinalAnswer { fmt::format("Simulation run {} finished, but the summary failed. {}", runId, last.text) } };
        return { std::nullopt, FinalAnswer { fmt::format("Simulation run {} finished. {}", runId, last.text) } };
    }
    return { std::nullopt, FinalAnswer { last.text } };
}

// ---------------------------------------------------------------------------

ChatPlanner::ChatPlanner(std::shared_ptr<ChatClient> client, std::vector<std::string> known_locations):
    _client(std::move(client)), _locations(std::move(known_locations)), _messages(nlohmann::json::array())
{
}

nlohmann::json ChatPlanner::ask_user_declaration()
{
    return {
        { "type", "function" },
        { "function",
          {
              { "name", kAskUserTool },
              { "description", "Ask the user a clarification question when required inputs are missing or ambiguous. "
                               "Ends the episode." },
              { "parameters",
                {
                    { "type", "object" },
                    { "properties", { { "question", { { "type", "string" }, { "description", "The question." } } } } },
                    { "required", { "question" } },
                    { "additionalProperties", false },
                } },
          } },
    };
}

nlohmann::json ChatPlanner::system_prompt() const
{
    auto names = _locations;
    std::sort(names.begin(), names.end());
    auto text = fmt::format(
        "You operate a deterministic urban radio propagation simulator through tools. "
        "Extract the environment name, transmitter coordinates (tx_x, tx_y, tx_z in meters), receiver grid size "
        "(nx, ny) and mechanism flags (LOS, REF, GREF, NLOS, BEL) from the user's request and call {}. "
        "If the user asks for a summary or interpretation, call {} with the image_path returned by the simulation. "
        "If the transmitter position or the environment is missing, call {} instead of guessing. "
        "Known environments: {}. When done, answer briefly with the findings.",
        kSimulateTool,
        kSummarizeTool,
        kAskUserTool,
        names.empty() ? std::string("(none listed)") : fmt::format("{}", fmt::join(names, ", ")));
    return { { "role", "system" }, { "content", text } };
}

PlannerStep ChatPlanner::next(const EpisodeContext& context)
{
    if (_messages.empty())
    {
        _messages.push_back(system_prompt());
        _messages.push_back({ { "role", "user" }, { "content", context.prompt } });
    }
    for (; _seenObservations < context.observations.size(); ++_seenObservations)
    {
        auto const& obs = context.observations[_seenObservations];
        auto content = nlohmann::json { { "ok", obs.ok }, { "result", obs.text } };
        if (!obs.data.is_null())
            content["data"] = obs.data;
        _messages.push_back({ { "role", "tool" }, { "tool_call_id", obs.call_id }, { "content", content.dump() } });
    }

    auto tools = context.registry ? context.registry->tool_declarations() : nlohmann::json::array();
    tools.push_back(ask_user_declaration());
    auto response = _client->complete(_messages, tools);

    auto assistant = response.message;
    if (!assistant.contains("role"))
        assistant["role"] = "assistant";

    if (response.tool_calls.empty())
    {
        _messages.push_back(assistant);
        return { std::nullopt, FinalAnswer { response.content.value_or("") } };
    }

    // One tool per step; extra parallel calls are dropped from the history so
    // every tool_call_id sent back has a matching tool message.
    auto const& call = response.tool_calls.front();
    if (assistant.contains("tool_calls") && assistant["tool_calls"].size() > 1)
        assistant["tool_calls"] = nlohmann::json::array({ assistant["tool_calls"][0] });
    _messages.push_back(assistant);

    if (call.name == kAskUserTool)
    {
        auto question = std::string("Could you clarify the request?");
        if (call.arguments && call.arguments->contains("question") && (*call.arguments)["question"].is_string())
            question = (*call.arguments)["question"].get<std::string>();
        return { std::nullopt, Clarification { question } };
    }

    auto thought = response.content;
    if (thought && thought->empty())
        thought.reset();
    return { thought,
             ToolInvocation {
                 .name = call.name,
                 .action_text = fmt::format("Call {}.", call.name),
                 .arguments = call.arguments,
                 .raw_arguments = call.arguments_text,
                 .argument_error = call.argument_error,
                 .call_id = call.id,
             } };
}

} // namespace radiosim
