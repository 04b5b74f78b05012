// SPDX-License-Identifier: Apache-2.0
#include <radiosim/agent.hpp>
#include <radiosim/util.hpp>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <mutex>
#include <regex>
#include <thread>

namespace radiosim
{

std::string_view json_type_name(ParamType t)
{
    switch (t)
    {
        case ParamType::Number: return "number";
        case ParamType::Integer: return "integer";
        case ParamType::Boolean: return "boolean";
        case ParamType::String: return "string";
    }
    return "string";
}

ToolRegistry& ToolRegistry::register_tool(ToolSpec spec)
{
    static auto const namePattern = std::regex("^[A-Za-z0-9_-]{1,64}$");
    if (!std::regex_match(spec.name, namePattern))
        throw SchemaError(fmt::format("invalid tool name '{}'", spec.name));
    if (!spec.handler)
        throw SchemaError(fmt::format("tool '{}' has no handler", spec.name));
    if (find(spec.name))
        throw DuplicateToolError(fmt::format("tool '{}' is already registered", spec.name));
    for (std::size_t k = 0; k < spec.params.size(); ++k)
    {
        auto const& p = spec.params[k];
        if (p.name.empty())
            throw SchemaError(fmt::format("tool '{}' has an unnamed parameter", spec.name));
        for (std::size_t m = 0; m < k; ++m)
            if (spec.params[m].name == p.name)
                throw SchemaError(fmt::format("tool '{}' declares '{}' twice", spec.name, p.name));
    }
    _tools.push_back(std::move(spec));
    return *this;
}

const ToolSpec* ToolRegistry::find(std::string_view name) const
{
    auto it = std::find_if(_tools.begin(), _tools.end(), [&](const ToolSpec& t) { return t.name == name; });
    return it == _tools.end() ? nullptr : &*it;
}

std::vector<std::string> ToolRegistry::names() const
{
    auto out = std::vector<std::string> {};
    for (auto const& t: _tools)
        out.push_back(t.name);
    return out;
}

nlohmann::json ToolRegistry::tool_declarations() const
{
    auto tools = nlohmann::json::array();
    for (auto const& t: _tools)
    {
        auto properties = nlohmann::json::object();
        auto required = nlohmann::json::array();
        for (auto const& p: t.params)
        {
            auto prop = nlohmann::json { { "type", json_type_name(p.type) }, { "description", p.description } };
            if (p.default_value)
                prop["default"] = *p.default_value;
            properties[p.name] = std::move(prop);
            if (p.required)
                required.push_back(p.name);
        }
        tools.push_back({
            { "type", "function" },
            { "function",
              {
                  { "name", t.name },
                  { "description", t.description },
                  { "parameters",
                    {
                        { "type", "object" },
                        { "properties", properties },
                        { "required", required },
                        { "additionalProperties", false },
                    } },
              } },
        });
    }
    return tools;
}

nlohmann::json ToolRegistry::validate(std::string_view tool, const nlohmann::json& arguments) const
{
    auto const* spec = find(tool);
    if (!spec)
        throw SchemaError(fmt::format("unknown tool '{}'", tool));
    if (!arguments.is_object())
        throw SchemaError(fmt::format("arguments for '{}' must be a JSON object", tool));
    for (auto const& [key, _]: arguments.items())
        if (std::none_of(spec->params.begin(), spec->params.end(), [&](const ParamSpec& p) { return p.name == key; }))
            throw SchemaError(fmt::format("unknown parameter '{}' for tool '{}'", key, tool));

    auto out = nlohmann::json::object();
    for (auto const& p: spec->params)
    {
        auto it = arguments.find(p.name);
        if (it == arguments.end() || it->is_null())
        {
            if (p.required)
                throw SchemaError(fmt::format("missing required parameter '{}' for tool '{}'", p.name, tool));
            if (p.default_value)
                out[p.name] = *p.default_value;
            continue;
        }
        auto const& v = *it;
        auto bad = [&] {
            return SchemaError(fmt::format("parameter '{}' of tool '{}' must be of type {}, got {}",
                                           p.name,
                                           tool,
                                           json_type_name(p.type),
                                           v.dump()));
        };
        switch (p.type)
        {
            case ParamType::Number:
                if (!v.is_number() || !std::isfinite(v.get<double>()))
                    throw bad();
                out[p.name] = v;
                break;
            case ParamType::Integer:
                if (v.is_number_integer())
                    out[p.name] = v;
                else if (v.is_number_float() && std::isfinite(v.get<double>())
                         && v.get<double>() == std::trunc(v.get<double>()) && std::abs(v.get<double>()) < 1e15)
                    out[p.name] = static_cast<std::int64_t>(v.get<double>());
                else
                    throw bad();
                break;
            case ParamType::Boolean:
                if (!v.is_boolean())
                    throw bad();
                out[p.name] = v;
                break;
            case ParamType::String:
                if (!v.is_string())
                    throw bad();
                out[p.name] = v;
                break;
        }
    }
    return out;
}

std::string format_action_input(const ToolSpec* spec, const nlohmann::json& arguments)
{
    if (!arguments.is_object())
        return arguments.dump();
    auto keys = std::vector<std::string> {};
    if (spec)
        for (auto const& p: spec->params)
            if (arguments.contains(p.name))
                keys.push_back(p.name);
    for (auto const& [key, _]: arguments.items())
        if (std::find(keys.begin(), keys.end(), key) == keys.end())
            keys.push_back(key);

    auto out = std::string {};
    for (auto const& key: keys)
    {
        auto const& v = arguments[key];
        if (!out.empty())
            out += ", ";
        out += key;
        out += " = ";
        if (v.is_boolean())
            out += v.get<bool>() ? "True" : "False";
        else if (v.is_number_integer())
            out += v.dump();
        else if (v.is_number())
            out += format_double(v.get<double>());
        else if (v.is_string())
            out += "'" + v.get<std::string>() + "'";
        else
            out += v.dump();
    }
    return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(TurnKind k)
{
    switch (k)
    {
        case TurnKind::Thought: return "thought";
        case TurnKind::Action: return "action";
        case TurnKind::ActionInput: return "action_input";
        case TurnKind::Observation: return "observation";
        case TurnKind::ClarificationRequest: return "clarification_request";
        case TurnKind::FinalAnswer: return "final_answer";
    }
    return "?";
}

TurnKind turn_kind_from_string(std::string_view s)
{
    for (auto k: { TurnKind::Thought,
                   TurnKind::Action,
                   TurnKind::ActionInput,
                   TurnKind::Observation,
                   TurnKind::ClarificationRequest,
                   TurnKind::FinalAnswer })
        if (to_string(k) == s)
            return k;
    throw std::invalid_argument(fmt::format("unknown turn kind '{}'", s));
}

std::string_view turn_label(TurnKind k)
{
    switch (k)
    {
        case TurnKind::Thought: return "Thought";
        case TurnKind::Action: return "Action";
        case TurnKind::ActionInput: return "Action Input";
        case TurnKind::Observation: return "Observation";
        case TurnKind::ClarificationRequest: return "Clarification Request";
        case TurnKind::FinalAnswer: return "Final Answer";
    }
    return "?";
}

nlohmann::json turn_to_json(const AgentTurn& turn)
{
    auto j = nlohmann::json { { "kind", to_string(turn.kind) }, { "content", turn.content } };
    if (turn.payload)
        j["payload"] = *turn.payload;
    return j;
}

nlohmann::json transcript_to_json(const Transcript& t)
{
    auto turns = nlohmann::json::array();
    for (auto const& turn: t.turns)
        turns.push_back(turn_to_json(turn));
    auto j = nlohmann::json {
        { "episode_id", t.episode_id },
        { "prompt", t.prompt },
        { "backend", t.backend },
        { "created_at", t.created_at },
        { "turns", turns },
        { "artifacts", t.artifacts },
        { "truncated", t.truncated },
    };
    if (t.error)
        j["error"] = *t.error;
    return j;
}

Transcript transcript_from_json(const nlohmann::json& doc)
{
    auto t = Transcript {};
    t.episode_id = doc.at("episode_id").get<std::string>();
    t.prompt = doc.at("prompt").get<std::string>();
    t.backend = doc.value("backend", std::string {});
    t.created_at = doc.value("created_at", std::string {});
    for (auto const& turn: doc.at("turns"))
    {
        auto at = AgentTurn { turn_kind_from_string(turn.at("kind").get<std::string>()),
                              turn.at("content").get<std::string>(),
                              std::nullopt };
        if (turn.contains("payload"))
            at.payload = turn["payload"];
        t.turns.push_back(std::move(at));
    }
    t.artifacts = doc.value("artifacts", std::vector<std::string> {});
    t.truncated = doc.value("truncated", false);
    if (doc.contains("error") && doc["error"].is_string())
        t.error = doc["error"].get<std::string>();
    return t;
}

std::string transcript_text(const Transcript& t)
{
    auto out = std::string {};
    for (auto const& turn: t.turns)
        out += fmt::format("{}: {}\n", turn_label(turn.kind), turn.content);
    return out;
}

bool transcript_well_formed(const std::vector<AgentTurn>& turns)
{
    // States: 0 = expecting a step, 1 = after thought, 2 = after action,
    // 3 = after action_input, 4 = terminated.
    auto state = 0;
    for (auto const& turn: turns)
    {
        switch (state)
        {
            case 0:
            case 1:
                if (turn.kind == TurnKind::Action)
                    state = 2;
                else if (state == 0 && turn.kind == TurnKind::Thought)
                    state = 1;
                else if (state == 0
                         && (turn.kind == TurnKind::FinalAnswer || turn.kind == TurnKind::ClarificationRequest))
                    state = 4;
                else
                    return false;
                break;
            case 2:
                if (turn.kind != TurnKind::ActionInput)
                    return false;
                state = 3;
                break;
            case 3:
                if (turn.kind != TurnKind::Observation)
                    return false;
                state = 0;
                break;
            default: return false;
        }
    }
    return state == 4;
}

// ---------------------------------------------------------------------------

std::string truncate_observation(std::string text, std::size_t max_bytes)
{
    if (text.size() <= max_bytes)
        return text;
    static constexpr std::string_view marker = " [truncated]";
    auto cut = max_bytes > marker.size() ? max_bytes - marker.size() : 0;
    while (cut > 0 && (static_cast<unsigned char>(text[cut]) & 0xC0) == 0x80)
        --cut;
    text.resize(cut);
    text += marker;
    return text;
}

namespace
{

    struct ToolOutcome
    {
        bool ok = false;
        std::string text;
        nlohmann::json data;
        std::vector<std::string> artifacts;
    };

    ToolOutcome run_with_timeout(const ToolHandler& handler, nlohmann::json arguments, std::chrono::milliseconds timeout)
    {
        struct Shared
        {
            std::mutex mutex;
            std::condition_variable cv;
            bool done = false;
            ToolOutcome outcome;
        };
        auto shared = std::make_shared<Shared>();
        std::thread([shared, handler, args = std::move(arguments)] {
            auto outcome = ToolOutcome {};
            try
            {
                auto r = handler(args);
                outcome = { true, std::move(r.summary), std::move(r.data), std::move(r.artifacts) };
            }
            catch (const std::exception& e)
            {
                outcome = { false, fmt::format("Error: {}", e.what()), nullptr, {} };
            }
            catch (...)
            {
                outcome = { false, "Error: tool failed", nullptr, {} };
            }
            auto lock = std::lock_guard(shared->mutex);
            shared->outcome = std::move(outcome);
            shared->done = true;
            shared->cv.notify_all();
        }).detach();

        auto lock = std::unique_lock(shared->mutex);
        if (!shared->cv.wait_for(lock, timeout, [&] { return shared->done; }))
            return { false,
                     fmt::format("Error: tool did not finish within {} ms", timeout.count()),
                     nullptr,
                     {} };
        return shared->outcome;
    }

} // namespace

Transcript run_episode(const ToolRegistry& registry,
                       Planner& planner,
                       std::string_view prompt,
                       const EpisodeLimits& limits,
                       const TurnCallback& on_turn,
                       std::string episode_id)
{
    auto t = Transcript {};
    t.episode_id = episode_id.empty() ? random_id() : std::move(episode_id);
    t.prompt = std::string(prompt);
    t.backend = planner.name();
    t.created_at = utc_timestamp();

    auto ctx = EpisodeContext { t.prompt, &registry, {}, {} };
    auto emit = [&](TurnKind kind, std::string content, std::optional<nlohmann::json> payload = std::nullopt) {
        auto turn = AgentTurn { kind, std::move(content), std::move(payload) };
        t.turns.push_back(turn);
        ctx.turns.push_back(turn);
        if (on_turn)
            on_turn(turn);
    };

    for (auto iteration = 0; iteration < limits.max_iterations; ++iteration)
    {
        auto step = PlannerStep {};
        try
        {
            step = planner.next(ctx);
        }
        catch (const std::exception& e)
        {
            t.error = e.what();
            emit(TurnKind::FinalAnswer,
                 fmt::format("The planner backend failed: {}", e.what()),
                 nlohmann::json { { "error", e.what() } });
            return t;
        }

        if (auto* c = std::get_if<Clarification>(&step.decision))
        {
            emit(TurnKind::ClarificationRequest, c->question);
            return t;
        }
        if (auto* f = std::get_if<FinalAnswer>(&step.decision))
        {
            emit(TurnKind::FinalAnswer, f->answer);
            return t;
        }

        auto const& call = std::get<ToolInvocation>(step.decision);
        auto const* spec = registry.find(call.name);
        if (step.thought && !step.thought->empty())
            emit(TurnKind::Thought, *step.thought);
        emit(TurnKind::Action,
             call.action_text.empty() ? fmt::format("Call {}.", call.name) : call.action_text,
             nlohmann::json { { "tool", call.name }, { "call_id", call.call_id } });
        auto inputPayload = nlohmann::json { { "tool", call.name } };
        if (call.arguments)
            inputPayload["arguments"] = *call.arguments;
        else
            inputPayload["raw_arguments"] = call.raw_arguments;
        emit(TurnKind::ActionInput,
             call.arguments ? format_action_input(spec, *call.arguments) : call.raw_arguments,
             inputPayload);

        auto outcome = ToolOutcome {};
        if (!spec)
        {
            auto known = registry.names();
            outcome.text = fmt::format("Error: unknown tool '{}'; available tools: {}",
                                       call.name,
                                       fmt::join(known, ", "));
        }
        else if (call.argument_error || !call.arguments)
        {
            outcome.text = fmt::format("Error: {}", call.argument_error.value_or("missing tool arguments"));
        }
        else
        {
            auto validated = nlohmann::json {};
            try
            {
                validated = registry.validate(call.name, *call.arguments);
                outcome = run_with_timeout(spec->handler, std::move(validated), limits.tool_timeout);
            }
            catch (const SchemaError& e)
            {
                outcome.text = fmt::format("Error: {}", e.what());
            }
        }

        outcome.text = truncate_observation(std::move(outcome.text), limits.max_observation_bytes);
        for (auto const& a: outcome.artifacts)
            if (std::find(t.artifacts.begin(), t.artifacts.end(), a) == t.artifacts.end())
                t.artifacts.push_back(a);
        ctx.observations.push_back({ call.name, call.call_id, outcome.ok, outcome.text, outcome.data });
        auto payload = nlohmann::json { { "tool", call.name }, { "ok", outcome.ok } };
        if (!outcome.data.is_null())
            payload["data"] = outcome.data;
        emit(TurnKind::Observation, outcome.text, payload);
    }

    t.truncated = true;
    emit(TurnKind::FinalAnswer,
         fmt::format("Stopped after {} planning steps without reaching a final answer.", limits.max_iterations),
         nlohmann::json { { "truncated", true } });
    return t;
}

} // namespace radiosim
