// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <duet/env.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace duet
{

enum class Intent
{
    service_issue,
    mobile_data_issue,
    mms_issue,
};

enum class Persona
{
    none,
    easy,
    hard,
};

std::string_view to_string(Intent i);
std::string_view to_string(Persona p);
Intent intent_from_string(std::string_view s);
Persona persona_from_string(std::string_view s);
inline constexpr Intent kAllIntents[] = {Intent::service_issue, Intent::mobile_data_issue, Intent::mms_issue};
inline constexpr Persona kAllPersonas[] = {Persona::none, Persona::easy, Persona::hard};

/// Profile paragraph for the persona; empty for Persona::none.
const std::string& persona_text(Persona p);

struct SolutionCall
{
    PlayerId requestor = PlayerId::user;
    std::string name;
    Json args = Json::object();
    // Argument keys that must match. nullopt compares every expected key.
    std::optional<std::vector<std::string>> compare_args;

    bool operator==(const SolutionCall&) const = default;
};

struct AssertionCall
{
    PlayerId env = PlayerId::user;
    std::string function;
    Json args = Json::object();
    bool expected = true;

    bool operator==(const AssertionCall&) const = default;
};

/// Text fragments a subtask contributes to the rendered scenario.
struct ScenarioFragments
{
    std::string known_info;
    std::string task_instructions;
    std::string ticket;
};

struct AtomicSubtask
{
    std::string id;
    Intent intent = Intent::service_issue;
    std::string group_id;
    std::vector<InitCall> init_calls;
    std::vector<SolutionCall> solution_calls;
    std::vector<AssertionCall> assertion_calls;
    ScenarioFragments fragments;
};

struct SubtaskGroup
{
    std::string group_id;
    std::vector<AtomicSubtask> members;
};

struct ExpectedAction
{
    std::string action_id;
    SolutionCall call;

    bool operator==(const ExpectedAction&) const = default;
};

struct UserScenario
{
    std::string domain;
    std::string reason_for_call;
    std::string known_info;
    std::optional<std::string> unknown_info;
    std::string task_instructions;
    std::string persona_text;

    bool operator==(const UserScenario&) const = default;
};

struct EvaluationCriteria
{
    std::vector<ExpectedAction> expected_actions;
    std::vector<AssertionCall> env_assertions;
    std::vector<std::string> communication_checks;
    std::vector<std::string> nl_assertions;
    std::optional<WorldHashes> expected_hashes;
    // When set, action matching is part of the reward. Off for telecom by default.
    bool match_actions = false;

    bool operator==(const EvaluationCriteria&) const = default;
};

struct CompositeTask
{
    std::string id;
    Intent intent = Intent::service_issue;
    Persona persona = Persona::none;
    std::string purpose;
    std::vector<std::string> subtask_ids;
    UserScenario user_scenario;
    std::string ticket;
    std::vector<InitCall> init_actions;
    EvaluationCriteria evaluation;

    [[nodiscard]] std::size_t n_subtasks() const { return subtask_ids.size(); }
    [[nodiscard]] std::size_t n_actions() const { return evaluation.expected_actions.size(); }
    [[nodiscard]] bool has_transfer() const;

    bool operator==(const CompositeTask&) const = default;
};

struct CompositionConstraints
{
    std::optional<Intent> intent;
    std::size_t min_subtasks = 1;
    std::size_t max_subtasks = SIZE_MAX;
    // Optional veto over a selection; none is enabled for telecom.
    std::function<bool(const std::vector<const AtomicSubtask*>&)> compatible;
};

/// Builds the composite for one selection (members listed in group order).
using TaskAssembler = std::function<CompositeTask(Intent, const std::vector<const AtomicSubtask*>&)>;

/// Enumerates every selection of at most one member per group, excluding the empty one.
std::vector<CompositeTask> compose_tasks(const std::vector<SubtaskGroup>& groups, const CompositionConstraints& constraints,
                                         const TaskAssembler& assemble);

/// Generic assembler: concatenates init/solution calls and unions assertions. Scenario text is left empty.
CompositeTask assemble_plain(Intent intent, const std::vector<const AtomicSubtask*>& selection);

/// Count of compose_tasks output without constraints: prod(n_i + 1) - 1.
std::uint64_t composition_count(const std::vector<SubtaskGroup>& groups);

enum class Verdict
{
    pass,
    fail,
};

struct VerificationReport
{
    std::string task_id;
    bool unsolved_after_init = false;
    std::vector<bool> prefix_results;
    bool solved_after_all = false;
    Verdict verdict = Verdict::fail;
    std::string diagnostic;
};

/// True iff every environment assertion evaluates to its expected value.
bool assertions_hold(const Environment& env, const std::vector<AssertionCall>& assertions);

/// Runs one solution call as the requestor; returns the error text on failure.
std::optional<std::string> apply_solution_call(Environment& env, const SolutionCall& call);

VerificationReport verify_task(const CompositeTask& task, Environment& env);

/// Verifies each task on its own pristine environment. Parallel over tasks.
std::vector<VerificationReport> verify_all(const std::vector<CompositeTask>& tasks, const DomainPtr& domain);
/// Serial reference for verify_all.
std::vector<VerificationReport> verify_all_serial(const std::vector<CompositeTask>& tasks, const DomainPtr& domain);

using QuotaKey = std::pair<Intent, std::size_t>;
using Quotas = std::map<QuotaKey, std::size_t>;

/// Deterministic per-cell sampling without replacement. Output sorted by intent, subtask count, id.
std::vector<CompositeTask> sample_balanced(const std::vector<CompositeTask>& tasks, const Quotas& quotas, std::uint64_t seed);

/// Uniform persona draw per task, deterministic for a seed. Fills user_scenario.persona_text.
std::vector<CompositeTask> assign_personas(std::vector<CompositeTask> tasks, std::uint64_t seed);

std::string render_ticket(const CompositeTask& task);
std::string render_user_instructions(const CompositeTask& task);
/// Human-readable task document in the layout of the task-file markdown view.
std::string render_task_markdown(const CompositeTask& task);

nlohmann::ordered_json task_to_json(const CompositeTask& task);
CompositeTask task_from_json(const Json& j);

/// Reads/writes a task-suite file: {"tasks": [...]}.
std::vector<CompositeTask> load_tasks(const std::string& path);
void save_tasks(const std::string& path, const std::vector<CompositeTask>& tasks);

/// Bounded uniform integer in [0, bound) from a 64-bit Mersenne twister, identical on every platform.
std::uint64_t uniform_below(std::uint64_t bound, std::mt19937_64& rng);

namespace telecom
{

std::vector<SubtaskGroup> subtask_groups(Intent intent);
std::vector<CompositeTask> compose_all(std::size_t min_subtasks = 1);
Quotas suite_quotas();

/// The full pipeline: compose, sample the balanced suite, assign personas.
std::vector<CompositeTask> default_suite(std::uint64_t seed = 0);

} // namespace telecom

} // namespace duet
