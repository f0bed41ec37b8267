// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <duet/orchestrator.hpp>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace duet
{

enum class CriterionKind
{
    db_check,
    env_assertion,
    action_match,
    communication,
    nl_assertion,
};

std::string_view to_string(CriterionKind k);
CriterionKind criterion_kind_from_string(std::string_view s);

struct CriterionResult
{
    CriterionKind kind = CriterionKind::env_assertion;
    std::string id;
    bool passed = false;
    std::string detail;
    // Set when the criterion could not be evaluated (e.g. the judge was unavailable).
    bool errored = false;

    bool operator==(const CriterionResult&) const = default;
};

struct TrialRecord
{
    std::string task_id;
    std::size_t trial_index = 0;
    Mode mode = Mode::standard;
    int reward = 0;
    std::vector<CriterionResult> criteria;
    StopReason stop_reason = StopReason::max_steps;
    std::size_t step_count = 0;
    bool flagged = false;

    bool operator==(const TrialRecord&) const = default;
};

Json record_to_json(const TrialRecord& r);
TrialRecord record_from_json(const Json& j);

/// Natural-language judge: returns the verdict for `statement` over `transcript`, or nullopt when unavailable.
struct Judge
{
    std::string id;
    std::function<std::optional<bool>(const std::string& transcript, const std::string& statement)> fn;
};

Judge constant_judge(bool verdict);

std::vector<CriterionResult> check_env_assertions(const GlobalState& final_state, const std::vector<AssertionCall>& assertions,
                                                  const Domain& domain);

/// True when `event` is a tool call by the requestor with the expected name and matching arguments.
bool action_matches(const Event& event, const SolutionCall& expected);
CriterionResult check_actions(const std::vector<Event>& events, const std::vector<ExpectedAction>& expected);

CriterionResult check_db(const WorldState& final_world, const std::optional<WorldHashes>& expected);

/// Lower-case, drop commas and currency symbols, collapse whitespace.
std::string normalize_info(std::string_view text);
CriterionResult check_communication(const std::vector<Event>& events, const std::vector<std::string>& required);

std::string render_transcript(const std::vector<Event>& events);
std::vector<CriterionResult> check_nl_assertions(const std::vector<Event>& events, const std::vector<std::string>& statements,
                                                 const Judge* judge);

struct EvalOptions
{
    // Overrides the task's match_actions flag when set.
    std::optional<bool> match_actions;
    const Judge* judge = nullptr;
};

TrialRecord compute_reward(const CompositeTask& task, const Trajectory& trajectory, const GlobalState& final_state,
                           const Domain& domain, const EvalOptions& options = {});

struct TaskCounts
{
    std::string task_id;
    std::size_t successes = 0;
    std::size_t trials = 0;
};

/// C(c,k)/C(n,k). Throws std::invalid_argument when k is 0 or exceeds n.
double pass_hat_k_task(std::size_t c, std::size_t n, std::size_t k);
/// Unweighted mean of the per-task values.
double pass_hat_k(const std::vector<TaskCounts>& counts, std::size_t k);
/// Per-task success counts, in first-seen task order.
std::vector<TaskCounts> count_successes(const std::vector<TrialRecord>& records);

struct PassKCurve
{
    std::vector<double> values; // index k-1
    std::vector<TaskCounts> counts;
};

/// pass^k for k = 1..min trials per task.
PassKCurve pass_k_curve(const std::vector<TrialRecord>& records);

std::string action_bin(const CompositeTask& task);
inline constexpr const char* kActionBins[] = {"1-2", "3-4", "5-7", "8+", "transfer"};

struct BreakdownRow
{
    std::string mode;
    std::string bin;
    std::size_t n_tasks = 0;
    double proportion = 0.0;
    std::vector<double> pass_k;
};

struct BreakdownTable
{
    std::string dimension; // mode | intent | persona | action_bin | subtask_count
    std::vector<BreakdownRow> rows;
};

std::vector<BreakdownTable> breakdown_tables(const std::vector<TrialRecord>& records, const std::vector<CompositeTask>& tasks);
Json breakdown_to_json(const std::vector<BreakdownTable>& tables);

} // namespace duet
