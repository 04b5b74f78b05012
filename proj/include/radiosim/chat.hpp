// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include <chrono>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace radiosim
{

class ChatError: public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Missing base URL, model, or credential.
class ChatConfigError: public ChatError
{
  public:
    using ChatError::ChatError;
};

class ChatAuthError: public ChatError
{
  public:
    using ChatError::ChatError;
};

class ChatTimeoutError: public ChatError
{
  public:
    using ChatError::ChatError;
};

class ChatMalformedResponseError: public ChatError
{
  public:
    using ChatError::ChatError;
};

/// Connection failures and non-retryable HTTP errors.
class ChatTransportError: public ChatError
{
  public:
    using ChatError::ChatError;
};

inline constexpr std::string_view kDefaultApiKeyEnv = "RADIOSIM_CHAT_API_KEY";

struct ChatEndpoint
{
    std::string base_url; ///< e.g. https://api.openai.com/v1
    std::string model;
    std::string api_key_env = std::string(kDefaultApiKeyEnv);
    std::optional<std::string> api_key; ///< overrides the environment variable
    std::chrono::milliseconds timeout { 60'000 };
    int max_retries = 3;
    std::chrono::milliseconds backoff { 500 }; ///< doubled after each retry
};

struct ToolCall
{
    std::string id;
    std::string name;
    std::string arguments_text;             ///< as received
    std::optional<nlohmann::json> arguments; ///< absent if arguments_text is not a JSON object
    std::optional<std::string> argument_error;
};

struct ChatResponse
{
    std::optional<std::string> content;
    std::vector<ToolCall> tool_calls;
    std::string finish_reason;
    nlohmann::json message; ///< the assistant message, for appending to history
};

/// OpenAI-compatible chat-completions client (POST {base_url}/chat/completions).
/// Retries connection errors, 429 and 5xx up to max_retries times.
class ChatClient
{
  public:
    /// Throws ChatConfigError when the URL, model or credential is missing.
    explicit ChatClient(ChatEndpoint endpoint);

    [[nodiscard]] ChatResponse complete(const nlohmann::json& messages,
                                        const nlohmann::json& tools = nlohmann::json::array());

    [[nodiscard]] const ChatEndpoint& endpoint() const noexcept { return _endpoint; }
    [[nodiscard]] nlohmann::json request_body(const nlohmann::json& messages, const nlohmann::json& tools) const;

  private:
    ChatEndpoint _endpoint;
    std::string _apiKey;
    std::string _origin; ///< scheme://host[:port]
    std::string _path;   ///< base path + /chat/completions
};

/// Parses one chat-completions response body.
[[nodiscard]] ChatResponse parse_chat_response(const nlohmann::json& body);

} // namespace radiosim
