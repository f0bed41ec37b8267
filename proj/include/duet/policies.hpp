// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <duet/orchestrator.hpp>

#include <atomic>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace duet
{

/// True when `tool` occurs in `text` as a whole identifier (toggle_wifi does not match toggle_wifi_calling).
bool mentions_tool(std::string_view text, std::string_view tool);

/// Earliest tool name from `names` mentioned in `text`.
std::optional<std::string> first_mentioned_tool(std::string_view text, const std::vector<std::string>& names);

/// Replays the task's expected actions: its own calls directly, user-side calls by asking for them by name.
/// In no_user mode it performs every call itself and finishes with the stop token.
PolicyPtr oracle_agent(const CompositeTask& task, Mode mode);

struct OracleUserOptions
{
    // Execute owned tools named by the agent even when they are not part of the solution.
    bool compliant = false;
    // Probability of answering a request with a clarifying question first. Needs a seed.
    double hesitation = 0.0;
    std::uint64_t seed = 0;
};

/// Executes the user-side tool the agent names, reports the result, and stops once the goal probe passes.
PolicyPtr oracle_user(const CompositeTask& task, OracleUserOptions options = {});
PolicyPtr compliance_user(const CompositeTask& task);

/// Always answers with an unhelpful message and never calls tools.
PolicyPtr null_agent();

/// Emits a fixed action list in order, then repeats `fallback`.
PolicyPtr scripted_policy(std::string id, std::vector<Action> actions, Action fallback);

struct LlmPolicyConfig
{
    std::string endpoint; // e.g. http://127.0.0.1:8000/v1/chat/completions
    std::string api_key;
    std::string model = "gpt-4.1";
    double temperature = 0.0;
    int max_output_tokens = 1024;
    int retry_budget = 2;
    int max_parallel_requests = 4;
    int timeout_seconds = 60;

    /// Fills endpoint and key from DUET_LLM_ENDPOINT / DUET_LLM_KEY when unset.
    void apply_environment();
};

Json llm_config_to_json(const LlmPolicyConfig& c); // never includes the key
LlmPolicyConfig llm_config_from_json(const Json& j);

struct LlmUsage
{
    std::atomic<std::uint64_t> requests {0};
    std::atomic<std::uint64_t> failures {0};
    std::atomic<std::uint64_t> prompt_tokens {0};
    std::atomic<std::uint64_t> completion_tokens {0};
};

/// Chat-completion request body for a view (system prompt, tools, history).
Json render_chat_request(const PolicyView& view, const LlmPolicyConfig& config);

/// Converts one chat-completion response into an action. Mixed or multiple outputs become InvalidOutput.
Action parse_chat_response(const Json& response);

PolicyPtr llm_policy(LlmPolicyConfig config, PlayerId role, std::shared_ptr<LlmUsage> usage = nullptr);

struct PolicyChoice
{
    std::string agent = "oracle"; // oracle | null | llm
    std::string user = "oracle";  // oracle | compliance | hesitant | llm
    std::optional<LlmPolicyConfig> llm;
};

/// Factory for run_trials/run_suite from policy names.
PolicyFactory make_policy_factory(const PolicyChoice& choice, Mode mode);

} // namespace duet
