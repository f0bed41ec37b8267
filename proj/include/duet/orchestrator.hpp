// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <duet/tasks.hpp>

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace duet
{

enum class Mode
{
    standard, // "default"
    no_user,
    ground_truth,
};

std::string_view to_string(Mode m);
Mode mode_from_string(std::string_view s);
inline constexpr Mode kAllModes[] = {Mode::standard, Mode::no_user, Mode::ground_truth};

enum class StopReason
{
    user_stop,
    user_transfer,
    agent_stop,
    max_steps,
    error_limit,
};

std::string_view to_string(StopReason r);
StopReason stop_reason_from_string(std::string_view s);

inline constexpr std::string_view kStopToken = "###STOP###";
inline constexpr std::string_view kTransferToken = "###TRANSFER###";
inline constexpr std::string_view kGreeting = "Hi! How can I help you today?";

enum class StopToken
{
    none,
    stop,
    transfer,
};

/// Exact token scan. When both tokens occur, transfer wins.
StopToken detect_stop(std::string_view text);

struct PolicyView
{
    PlayerId role = PlayerId::agent;
    std::string instructions;
    std::vector<ToolSpec> tool_specs;
    std::vector<Event> visible_history;
};

/// Events `role` may see: its own events, plus the other player's messages.
std::vector<Event> visible_history(PlayerId role, const std::vector<Event>& history);

/// Read-only check of whether the task's assertions hold right now.
using GoalProbe = std::function<bool()>;

class Policy
{
  public:
    virtual ~Policy() = default;
    /// Returns exactly one action for the view.
    virtual Action decide(const PolicyView& view) = 0;
    [[nodiscard]] virtual std::string id() const = 0;
    /// Scripted users may consult the live goal state; other policies ignore it.
    virtual void attach_probe(GoalProbe) {}

    /// Serializes decisions when a timed-out call is still running in the background.
    std::mutex& decision_gate() { return gate_; }

  private:
    std::mutex gate_;
};

using PolicyPtr = std::shared_ptr<Policy>;

struct RunConfig
{
    std::size_t max_steps = 200;
    std::size_t max_consecutive_errors = 3;
    std::uint64_t seed = 0;
    std::size_t trials_per_task = 1;
    Mode mode = Mode::standard;
    std::optional<std::chrono::milliseconds> decision_timeout;

    /// Throws ConfigError when a count is zero.
    void validate() const;

    bool operator==(const RunConfig&) const = default;
};

Json run_config_to_json(const RunConfig& c);
RunConfig run_config_from_json(const Json& j);

struct Trajectory
{
    std::string task_id;
    std::size_t trial_index = 0;
    Mode mode = Mode::standard;
    std::vector<InitCall> preamble;
    std::vector<Event> events;
    StopReason stop_reason = StopReason::max_steps;
    WorldHashes final_hashes;

    bool operator==(const Trajectory&) const = default;
};

std::string agent_instructions(const Domain& domain, const CompositeTask& task, Mode mode);
std::string user_instructions(const CompositeTask& task);

PolicyView build_view(PlayerId role, const CompositeTask& task, Mode mode, const Environment& env);

/// One simulation that advances one decision at a time. Drives both batch runs and live sessions.
class Simulation
{
  public:
    Simulation(CompositeTask task, DomainPtr domain, RunConfig config, std::size_t trial_index = 0);
    // probe() captures this object, so it stays in place.
    Simulation(const Simulation&) = delete;
    Simulation& operator=(const Simulation&) = delete;

    [[nodiscard]] bool done() const { return stop_.has_value(); }
    [[nodiscard]] std::optional<StopReason> stop_reason() const { return stop_; }
    /// Player whose decision is awaited.
    [[nodiscard]] PlayerId current_actor() const { return turn_; }
    [[nodiscard]] PolicyView view(PlayerId role) const;
    [[nodiscard]] bool goal_reached() const;
    [[nodiscard]] GoalProbe probe() const;

    /// Applies `action` for `actor`. Throws ContractViolation when out of turn or finished.
    Observation submit(PlayerId actor, const Action& action);

    [[nodiscard]] Trajectory trajectory() const;
    [[nodiscard]] const Environment& env() const { return env_; }
    [[nodiscard]] const CompositeTask& task() const { return task_; }
    [[nodiscard]] const RunConfig& config() const { return config_; }
    [[nodiscard]] std::size_t steps() const { return steps_; }

  private:
    CompositeTask task_;
    RunConfig config_;
    std::size_t trial_;
    Environment env_;
    PlayerId turn_ = PlayerId::agent;
    std::size_t steps_ = 0;
    std::size_t consecutive_errors_ = 0;
    std::optional<StopReason> stop_;
};

struct SimulationResult
{
    Trajectory trajectory;
    GlobalState final_state;
};

/// Asks `policy` for a decision, bounded by `timeout` when given. Failures become InvalidOutput.
Action request_decision(const PolicyPtr& policy, const PolicyView& view, std::optional<std::chrono::milliseconds> timeout);

/// Plays `sim` to completion with the given policies. `user` may be null in no_user mode.
void drive(Simulation& sim, const PolicyPtr& agent, const PolicyPtr& user);

SimulationResult run_simulation(const CompositeTask& task, const PolicyPtr& agent, const PolicyPtr& user,
                                const DomainPtr& domain, const RunConfig& config, std::size_t trial_index = 0);

struct PolicyPair
{
    PolicyPtr agent;
    PolicyPtr user;
};

/// Builds fresh policies for one (task, trial); `seed` is the trial's derived seed.
using PolicyFactory = std::function<PolicyPair(const CompositeTask& task, std::size_t trial, std::uint64_t seed)>;

/// Stable per-(run seed, task, trial) seed.
std::uint64_t trial_seed(std::uint64_t run_seed, std::string_view task_id, std::size_t trial);

std::vector<SimulationResult> run_trials(const CompositeTask& task, const PolicyFactory& factory, const DomainPtr& domain,
                                         const RunConfig& config);

/// All (task, trial) pairs, in task-major order. Parallel over pairs.
std::vector<SimulationResult> run_suite(const std::vector<CompositeTask>& tasks, const PolicyFactory& factory,
                                        const DomainPtr& domain, const RunConfig& config);
/// Serial reference for run_suite.
std::vector<SimulationResult> run_suite_serial(const std::vector<CompositeTask>& tasks, const PolicyFactory& factory,
                                               const DomainPtr& domain, const RunConfig& config);

/// Rebuilds the final state of a trajectory by re-running its init and tool calls on a fresh environment.
GlobalState replay(const CompositeTask& task, const Trajectory& trajectory, const DomainPtr& domain);

} // namespace duet
