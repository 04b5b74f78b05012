// SPDX-License-Identifier: Apache-2.0
#include <radiosim/chat.hpp>

#include <fmt/format.h>
#include <httplib.h>

#include <cstdlib>
#include <thread>

namespace radiosim
{

ChatClient::ChatClient(ChatEndpoint endpoint): _endpoint(std::move(endpoint))
{
    if (_endpoint.base_url.empty())
        throw ChatConfigError("chat endpoint: base URL is not configured");
    if (_endpoint.model.empty())
        throw ChatConfigError("chat endpoint: model name is not configured");
    if (_endpoint.api_key)
        _apiKey = *_endpoint.api_key;
    else if (auto const* v = std::getenv(_endpoint.api_key_env.c_str()); v && *v)
        _apiKey = v;
    else
        throw ChatConfigError(fmt::format("chat endpoint: no credential, set {}", _endpoint.api_key_env));

    auto const& url = _endpoint.base_url;
    auto const scheme = url.find("://");
    if (scheme == std::string::npos || (url.compare(0, scheme, "http") != 0 && url.compare(0, scheme, "https") != 0))
        throw ChatConfigError(fmt::format("chat endpoint: unsupported base URL '{}'", url));
    auto const slash = url.find('/', scheme + 3);
    _origin = url.substr(0, slash);
    auto base = slash == std::string::npos ? std::string {} : url.substr(slash);
    while (!base.empty() && base.back() == '/')
        base.pop_back();
    _path = base + "/chat/completions";
}

nlohmann::json ChatClient::request_body(const nlohmann::json& messages, const nlohmann::json& tools) const
{
    auto body = nlohmann::json {
        { "model", _endpoint.model },
        { "messages", messages },
    };
    if (tools.is_array() && !tools.empty())
    {
        body["tools"] = tools;
        body["tool_choice"] = "auto";
    }
    return body;
}

ChatResponse parse_chat_response(const nlohmann::json& body)
{
    if (!body.is_object() || !body.contains("choices") || !body["choices"].is_array() || body["choices"].empty())
        throw ChatMalformedResponseError("chat response has no choices");
    auto const& choice = body["choices"][0];
    if (!choice.is_object() || !choice.contains("message") || !choice["message"].is_object())
        throw ChatMalformedResponseError("chat response choice has no message");
    auto const& message = choice["message"];

    auto out = ChatResponse {};
    out.message = message;
    if (auto f = choice.find("finish_reason"); f != choice.end() && f->is_string())
        out.finish_reason = f->get<std::string>();
    if (auto c = message.find("content"); c != message.end() && c->is_string())
        out.content = c->get<std::string>();
    if (auto calls = message.find("tool_calls"); calls != message.end() && !calls->is_null())
    {
        if (!calls->is_array())
            throw ChatMalformedResponseError("tool_calls is not an array");
        for (auto const& call: *calls)
        {
            if (!call.is_object() || !call.contains("function") || !call["function"].is_object())
                throw ChatMalformedResponseError("tool call without a function object");
            auto const& fn = call["function"];
            if (!fn.contains("name") || !fn["name"].is_string())
                throw ChatMalformedResponseError("tool call without a function name");
            auto tc = ToolCall {};
            tc.id = call.value("id", std::string {});
            tc.name = fn["name"].get<std::string>();
            auto const args = fn.value("arguments", nlohmann::json {});
            if (args.is_string())
            {
                tc.arguments_text = args.get<std::string>();
                try
                {
                    auto parsed = nlohmann::json::parse(tc.arguments_text.empty() ? "{}" : tc.arguments_text);
                    if (parsed.is_object())
                        tc.arguments = std::move(parsed);
                    else
                        tc.argument_error = "tool arguments are not a JSON object";
                }
                catch (const nlohmann::json::parse_error& e)
                {
                    tc.argument_error = fmt::format("tool arguments are not valid JSON: {}", e.what());
                }
            }
            else if (args.is_object())
            {
                tc.arguments_text = args.dump();
                tc.arguments = args;
            }
            else
            {
                tc.arguments_text = args.dump();
                tc.argument_error = "tool arguments are not a JSON object";
            }
            out.tool_calls.push_back(std::move(tc));
        }
    }
    if (!out.content && out.tool_calls.empty())
        throw ChatMalformedResponseError("chat response has neither content nor tool calls");
    return out;
}

ChatResponse ChatClient::complete(const nlohmann::json& messages, const nlohmann::json& tools)
{
    auto const payload = request_body(messages, tools).dump();
    auto backoff = _endpoint.backoff;
    auto lastError = std::string {};
    auto timedOut = false;

    for (auto attempt = 0; attempt <= _endpoint.max_retries; ++attempt)
    {
        if (attempt > 0)
        {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }

        auto client = httplib::Client(_origin);
        auto const seconds = std::chrono::duration_cast<std::chrono::seconds>(_endpoint.timeout);
        auto const usec = std::chrono::duration_cast<std::chrono::microseconds>(_endpoint.timeout - seconds);
        client.set_connection_timeout(seconds.count(), usec.count());
        client.set_read_timeout(seconds.count(), usec.count());
        client.set_write_timeout(seconds.count(), usec.count());
        auto headers = httplib::Headers { { "Authorization", "Bearer " + _apiKey } };

        auto res = client.Post(_path, headers, payload, "application/json");
        if (!res)
        {
            auto const err = res.error();
            timedOut = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
            lastError = fmt::format("chat request to {}{} failed: {}", _origin, _path, httplib::to_string(err));
            continue;
        }
        timedOut = false;
        if (res->status == 401 || res->status == 403)
            throw ChatAuthError(fmt::format("chat endpoint rejected the credential (HTTP {})", res->status));
        if (res->status == 429 || res->status >= 500)
        {
            lastError = fmt::format("chat endpoint returned HTTP {}", res->status);
            continue;
        }
        if (res->status != 200)
            throw ChatTransportError(fmt::format("chat endpoint returned HTTP {}: {}", res->status, res->body));

        auto body = nlohmann::json {};
        try
        {
            body = nlohmann::json::parse(res->body);
        }
        catch (const nlohmann::json::parse_error& e)
        {
            throw ChatMalformedResponseError(fmt::format("chat response is not JSON: {}", e.what()));
        }
        return parse_chat_response(body);
    }
    if (timedOut)
        throw ChatTimeoutError(lastError);
    throw ChatTransportError(lastError);
}

} // namespace radiosim
