// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <radiosim/chat.hpp>

#include <json.hpp>

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace radiosim
{

class EnvironmentCatalog;
class RunStore;

// ---------------------------------------------------------------------------
// Tool registry

enum class ParamType
{
    Number,
    Integer,
    Boolean,
    String,
};

[[nodiscard]] std::string_view json_type_name(ParamType t);

struct ParamSpec
{
    std::string name;
    ParamType type = ParamType::String;
    std::string description;
    bool required = false;
    std::optional<nlohmann::json> default_value;
};

struct ToolResult
{
    std::string summary;      ///< observation text
    nlohmann::json data;      ///< structured payload (paths, ids, numbers)
    std::vector<std::string> artifacts; ///< run ids produced
};

/// Thrown by handlers for failures the planner should see as an observation.
class ToolError: public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

class SchemaError: public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

class DuplicateToolError: public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

using ToolHandler = std::function<ToolResult(const nlohmann::json& arguments)>;

struct ToolSpec
{
    std::string name;
    std::string description;
    std::vector<ParamSpec> params;
    ToolHandler handler;
};

class ToolRegistry
{
  public:
    /// Throws DuplicateToolError, or SchemaError for a malformed spec.
    ToolRegistry& register_tool(ToolSpec spec);

    [[nodiscard]] std::size_t size() const noexcept { return _tools.size(); }
    [[nodiscard]] const ToolSpec* find(std::string_view name) const;
    [[nodiscard]] std::vector<std::string> names() const;

    /// OpenAI "tools" array: [{type: function, function: {name, description, parameters}}].
    [[nodiscard]] nlohmann::json tool_declarations() const;

    /// Checks arguments against the schema and fills defaults. Throws SchemaError.
    [[nodiscard]] nlohmann::json validate(std::string_view tool, const nlohmann::json& arguments) const;

  private:
    std::vector<ToolSpec> _tools; ///< registration order
};

/// "tx_x = 100, location = 'munich01', LOS = True" in schema order.
[[nodiscard]] std::string format_action_input(const ToolSpec* spec, const nlohmann::json& arguments);

// ---------------------------------------------------------------------------
// Transcript

enum class TurnKind
{
    Thought,
    Action,
    ActionInput,
    Observation,
    ClarificationRequest,
    FinalAnswer,
};

[[nodiscard]] std::string_view to_string(TurnKind k);
[[nodiscard]] TurnKind turn_kind_from_string(std::string_view s);
/// Printed label, e.g. "Action Input".
[[nodiscard]] std::string_view turn_label(TurnKind k);

struct AgentTurn
{
    TurnKind kind = TurnKind::Thought;
    std::string content;
    std::optional<nlohmann::json> payload;
};

struct Transcript
{
    std::string episode_id;
    std::string prompt;
    std::string backend;
    std::string created_at;
    std::vector<AgentTurn> turns;
    std::vector<std::string> artifacts; ///< run ids
    bool truncated = false;             ///< hit the iteration limit
    std::optional<std::string> error;   ///< planner backend failure
};

[[nodiscard]] nlohmann::json turn_to_json(const AgentTurn& turn);
[[nodiscard]] nlohmann::json transcript_to_json(const Transcript& t);
[[nodiscard]] Transcript transcript_from_json(const nlohmann::json& doc);
/// One "Label: content" line per turn.
[[nodiscard]] std::string transcript_text(const Transcript& t);
/// (thought? (action action_input observation))* (final_answer | clarification_request)
[[nodiscard]] bool transcript_well_formed(const std::vector<AgentTurn>& turns);

// ---------------------------------------------------------------------------
// Planners

struct ToolInvocation
{
    std::string name;
    std::string action_text; ///< shown on the Action line
    std::optional<nlohmann::json> arguments;
    std::string raw_arguments;
    std::optional<std::string> argument_error; ///< set when the backend sent unparseable arguments
    std::string call_id;
};

struct Clarification
{
    std::string question;
};

struct FinalAnswer
{
    std::string answer;
};

struct PlannerStep
{
    std::optional<std::string> thought;
    std::variant<ToolInvocation, Clarification, FinalAnswer> decision;
};

struct ObservationRecord
{
    std::string tool;
    std::string call_id;
    bool ok = false;
    std::string text;
    nlohmann::json data;
};

struct EpisodeContext
{
    std::string prompt;
    const ToolRegistry* registry = nullptr;
    std::vector<AgentTurn> turns;
    std::vector<ObservationRecord> observations;
};

class Planner
{
  public:
    virtual ~Planner() = default;
    /// May throw ChatError (external backends).
    virtual PlannerStep next(const EpisodeContext& context) = 0;
    [[nodiscard]] virtual std::string name() const = 0;
};

struct ScriptedPlan
{
    std::optional<nlohmann::json> simulate_arguments;
    bool summarize = false;
    std::optional<std::string> clarification;
    std::string thought;
};

/// Rule-based parameter extraction; known_locations are catalog names.
[[nodiscard]] ScriptedPlan scripted_plan(std::string_view prompt, const std::vector<std::string>& known_locations);

/// Offline deterministic planner built on scripted_plan.
class ScriptedPlanner: public Planner
{
  public:
    explicit ScriptedPlanner(std::vector<std::string> known_locations);
    PlannerStep next(const EpisodeContext& context) override;
    [[nodiscard]] std::string name() const override { return "scripted"; }

  private:
    std::vector<std::string> _locations;
};

/// Planner backed by an OpenAI-compatible chat endpoint. Clarifications come
/// through an extra ask_user function declared next to the registry's tools.
class ChatPlanner: public Planner
{
  public:
    explicit ChatPlanner(std::shared_ptr<ChatClient> client, std::vector<std::string> known_locations = {});
    PlannerStep next(const EpisodeContext& context) override;
    [[nodiscard]] std::string name() const override { return "remote"; }

    [[nodiscard]] nlohmann::json system_prompt() const;
    [[nodiscard]] static nlohmann::json ask_user_declaration();

  private:
    std::shared_ptr<ChatClient> _client;
    std::vector<std::string> _locations;
    nlohmann::json _messages;
    std::size_t _seenObservations = 0;
};

inline constexpr std::string_view kAskUserTool = "ask_user";

// ---------------------------------------------------------------------------
// Episode loop

struct EpisodeLimits
{
    int max_iterations = 8;
    std::chrono::milliseconds tool_timeout { 120'000 };
    std::size_t max_observation_bytes = 2048;
};

using TurnCallback = std::function<void(const AgentTurn&)>;

[[nodiscard]] Transcript run_episode(const ToolRegistry& registry,
                                     Planner& planner,
                                     std::string_view prompt,
                                     const EpisodeLimits& limits = {},
                                     const TurnCallback& on_turn = {},
                                     std::string episode_id = {}); ///< empty: a fresh random id

/// Cuts text to at most max_bytes on a UTF-8 boundary, marking the cut.
[[nodiscard]] std::string truncate_observation(std::string text, std::size_t max_bytes);

// ---------------------------------------------------------------------------
// Built-in tools

inline constexpr std::string_view kSimulateTool = "simulate_radio_environment";
inline constexpr std::string_view kSummarizeTool = "summarize_pathloss_image";

struct ToolContext
{
    std::shared_ptr<const EnvironmentCatalog> catalog;
    std::shared_ptr<RunStore> store;
    std::shared_ptr<ChatClient> vision; ///< optional
};

[[nodiscard]] ToolSpec make_simulate_tool(ToolContext context);
[[nodiscard]] ToolSpec make_summarize_tool(ToolContext context);
/// Registry holding both built-in tools.
[[nodiscard]] ToolRegistry default_registry(const ToolContext& context);

} // namespace radiosim
