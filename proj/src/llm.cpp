// SPDX-License-Identifier: Apache-2.0
#include <duet/policies.hpp>

#include <httplib.h>

#include <condition_variable>
#include <cstdlib>
#include <map>
#include <regex>
#include <thread>

namespace duet
{

void LlmPolicyConfig::apply_environment()
{
    if (endpoint.empty())
        if (const char* e = std::getenv("DUET_LLM_ENDPOINT"))
            endpoint = e;
    if (api_key.empty())
        if (const char* k = std::getenv("DUET_LLM_KEY"))
            api_key = k;
}

Json llm_config_to_json(const LlmPolicyConfig& c)
{
    return {
        {"endpoint", c.endpoint},
        {"model", c.model},
        {"temperature", c.temperature},
        {"max_output_tokens", c.max_output_tokens},
        {"retry_budget", c.retry_budget},
        {"max_parallel_requests", c.max_parallel_requests},
        {"timeout_seconds", c.timeout_seconds},
    };
}

LlmPolicyConfig llm_config_from_json(const Json& j)
{
    LlmPolicyConfig c;
    c.endpoint = j.value("endpoint", c.endpoint);
    c.api_key = j.value("api_key", c.api_key);
    c.model = j.value("model", c.model);
    c.temperature = j.value("temperature", c.temperature);
    c.max_output_tokens = j.value("max_output_tokens", c.max_output_tokens);
    c.retry_budget = j.value("retry_budget", c.retry_budget);
    c.max_parallel_requests = j.value("max_parallel_requests", c.max_parallel_requests);
    c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
    if (c.max_parallel_requests < 1 || c.retry_budget < 0 || c.max_output_tokens < 1)
        throw ConfigError("invalid llm configuration");
    return c;
}

namespace
{

std::string call_id(std::size_t index)
{
    return "call_" + std::to_string(index);
}

} // namespace

Json render_chat_request(const PolicyView& view, const LlmPolicyConfig& config)
{
    Json messages = Json::array();
    messages.push_back({{"role", "system"}, {"content", view.instructions}});
    for (const auto& e: view.visible_history)
    {
        const bool own = e.actor == view.role;
        if (const auto* m = std::get_if<Message>(&e.action))
        {
            messages.push_back({{"role", own ? "assistant" : "user"}, {"content", m->text}});
            continue;
        }
        if (!own)
            continue;
        if (const auto* tc = std::get_if<ToolCall>(&e.action))
        {
            Json call = {{"id", call_id(e.index)},
                         {"type", "function"},
                         {"function", {{"name", tc->name}, {"arguments", tc->args.dump()}}}};
            messages.push_back({{"role", "assistant"}, {"content", nullptr}, {"tool_calls", Json::array({call})}});
            std::string payload;
            if (e.observation)
                if (const auto* r = std::get_if<ToolResult>(&*e.observation))
                    payload = r->payload;
            messages.push_back({{"role", "tool"}, {"tool_call_id", call_id(e.index)}, {"content", payload}});
            continue;
        }
        const auto& bad = std::get<InvalidOutput>(e.action);
        if (!bad.raw.empty())
            messages.push_back({{"role", "assistant"}, {"content", bad.raw}});
        messages.push_back({{"role", "system"}, {"content", "Error: " + bad.reason}});
    }

    Json tools = Json::array();
    for (const auto& spec: view.tool_specs)
        tools.push_back(to_tool_declaration(spec));

    Json body = {
        {"model", config.model},
        {"temperature", config.temperature},
        {"max_tokens", config.max_output_tokens},
        {"messages", messages},
    };
    if (!tools.empty())
        body["tools"] = tools;
    return body;
}

Action parse_chat_response(const Json& response)
{
    const auto raw = response.dump();
    if (!response.contains("choices") || !response["choices"].is_array() || response["choices"].empty())
        return InvalidOutput {raw, "response has no choices"};
    const auto& msg = response["choices"][0].value("message", Json::object());

    std::string content;
    if (msg.contains("content") && msg["content"].is_string())
        content = msg["content"].get<std::string>();
    const bool has_text = content.find_first_not_of(" \t\r\n") != std::string::npos;
    const Json calls = msg.contains("tool_calls") && msg["tool_calls"].is_array() ? msg["tool_calls"] : Json::array();

    if (!calls.empty() && has_text)
        return InvalidOutput {raw, "you cannot send a message and make a tool call at the same time"};
    if (calls.size() > 1)
        return InvalidOutput {raw, "only one tool call per turn is allowed"};
    if (calls.size() == 1)
    {
        const auto& fn = calls[0].value("function", Json::object());
        const auto name = fn.value("name", std::string {});
        if (name.empty())
            return InvalidOutput {raw, "tool call without a name"};
        Json args = Json::object();
        if (fn.contains("arguments"))
        {
            const auto& a = fn["arguments"];
            if (a.is_string())
            {
                const auto text = a.get<std::string>();
                args = text.empty() ? Json::object() : Json::parse(text, nullptr, false);
            }
            else
                args = a;
        }
        if (!args.is_object())
            return InvalidOutput {raw, "tool arguments are not a JSON object"};
        return ToolCall {name, std::move(args)};
    }
    if (!has_text)
        return InvalidOutput {raw, "empty response"};
    return Message {content};
}

namespace
{

// Caps in-flight requests per endpoint across all policies in the process.
class RequestGate
{
  public:
    explicit RequestGate(int limit): free_(limit) {}

    void acquire()
    {
        std::unique_lock lock(m_);
        cv_.wait(lock, [&] { return free_ > 0; });
        --free_;
    }

    void release()
    {
        {
            std::lock_guard lock(m_);
            ++free_;
        }
        cv_.notify_one();
    }

  private:
    std::mutex m_;
    std::condition_variable cv_;
    int free_;
};

std::shared_ptr<RequestGate> gate_for(const std::string& endpoint, int limit)
{
    static std::mutex m;
    static std::map<std::string, std::shared_ptr<RequestGate>> gates;
    std::lock_guard lock(m);
    auto& g = gates[endpoint];
    if (!g)
        g = std::make_shared<RequestGate>(limit);
    return g;
}

struct Endpoint
{
    std::string origin;
    std::string path;
};

Endpoint split_endpoint(const std::string& url)
{
    static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, re))
        throw ConfigError("invalid llm endpoint '" + url + "'");
    return {m[1].str(), m[2].matched ? m[2].str() : "/v1/chat/completions"};
}

class LlmPolicy final : public Policy
{
  public:
    LlmPolicy(LlmPolicyConfig config, PlayerId role, std::shared_ptr<LlmUsage> usage)
        : config_(std::move(config)), role_(role), usage_(std::move(usage)), endpoint_(split_endpoint(config_.endpoint)),
          gate_(gate_for(config_.endpoint, config_.max_parallel_requests))
    {
        if (!usage_)
            usage_ = std::make_shared<LlmUsage>();
    }

    std::string id() const override { return "llm:" + config_.model + ":" + std::string(to_string(role_)); }

    Action decide(const PolicyView& view) override
    {
        const auto body = render_chat_request(view, config_).dump();
        httplib::Headers headers;
        if (!config_.api_key.empty())
            headers.emplace("Authorization", "Bearer " + config_.api_key);

        std::string last_error;
        for (int attempt = 0; attempt <= config_.retry_budget; ++attempt)
        {
            if (attempt > 0)
                std::this_thread::sleep_for(std::chrono::milliseconds(100 * attempt));
            httplib::Client client(endpoint_.origin);
            client.set_connection_timeout(config_.timeout_seconds);
            client.set_read_timeout(config_.timeout_seconds);
            gate_->acquire();
            auto res = client.Post(endpoint_.path, headers, body, "application/json");
            gate_->release();
            ++usage_->requests;
            if (!res)
            {
                last_error = "transport failure: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status == 429 || res->status >= 500)
            {
                last_error = "endpoint returned HTTP " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200)
            {
                ++usage_->failures;
                return InvalidOutput {res->body, "endpoint returned HTTP " + std::to_string(res->status)};
            }
            auto response = Json::parse(res->body, nullptr, false);
            if (response.is_discarded())
            {
                ++usage_->failures;
                return InvalidOutput {res->body, "response is not valid JSON"};
            }
            if (response.contains("usage") && response["usage"].is_object())
            {
                usage_->prompt_tokens += response["usage"].value("prompt_tokens", 0ULL);
                usage_->completion_tokens += response["usage"].value("completion_tokens", 0ULL);
            }
            return parse_chat_response(response);
        }
        ++usage_->failures;
        return InvalidOutput {"", last_error + " (retry budget exhausted)"};
    }

  private:
    LlmPolicyConfig config_;
    PlayerId role_;
    std::shared_ptr<LlmUsage> usage_;
    Endpoint endpoint_;
    std::shared_ptr<RequestGate> gate_;
};

} // namespace

PolicyPtr llm_policy(LlmPolicyConfig config, PlayerId role, std::shared_ptr<LlmUsage> usage)
{
    config.apply_environment();
    if (config.endpoint.empty())
        throw ConfigError("llm policy needs an endpoint (config or DUET_LLM_ENDPOINT)");
    return std::make_shared<LlmPolicy>(std::move(config), role, std::move(usage));
}

} // namespace duet
