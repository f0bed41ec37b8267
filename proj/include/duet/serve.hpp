// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <duet/policies.hpp>
#include <duet/store.hpp>

#include <chrono>
#include <atomic>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace duet
{

class NotFound : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// A submission by the wrong player or to a finished session.
class TurnError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

struct InterventionRecord
{
    std::string session_id; // the new branch
    std::string parent_session;
    std::size_t event_index = 0;
    std::optional<Action> replacement;
    std::string note;

    bool operator==(const InterventionRecord&) const = default;
};

Json intervention_to_json(const InterventionRecord& r);
InterventionRecord intervention_from_json(const Json& j);

struct SessionOptions
{
    std::string task_id;
    Mode mode = Mode::standard;
    PlayerId human_role = PlayerId::user;
    // Policy for the other player: oracle | null (agent) or oracle | compliance (user).
    std::string opponent = "oracle";
};

/// Live human-in-the-loop sessions. One player is fed by submitted actions, the other by a policy.
/// Every change is checkpointed under the store's sessions directory.
class SessionManager
{
  public:
    SessionManager(std::vector<CompositeTask> tasks, DomainPtr domain, RunConfig base, std::shared_ptr<RunStore> store = nullptr);
    ~SessionManager();

    [[nodiscard]] const std::vector<CompositeTask>& tasks() const { return tasks_; }
    [[nodiscard]] const CompositeTask& task(std::string_view id) const;

    std::string start(const SessionOptions& options);
    [[nodiscard]] std::vector<std::string> list() const;

    /// The human's view: own history and tool results plus the other side's messages, turn, criteria.
    [[nodiscard]] Json state(const std::string& session_id) const;

    /// Submits the human's action, then lets the policy act until control returns or the session ends.
    Json act(const std::string& session_id, const Action& action);

    /// Forks a new session that keeps events [0, index) and replaces event `index` when `replacement` is set.
    std::string rewind(const std::string& session_id, std::size_t index, std::optional<Action> replacement, std::string note);

    /// Closes a session to further actions; the stored checkpoint stays.
    Json end(const std::string& session_id);

    [[nodiscard]] std::vector<InterventionRecord> interventions() const;
    [[nodiscard]] Trajectory trajectory(const std::string& session_id) const;
    [[nodiscard]] TrialRecord evaluate(const std::string& session_id) const;

    /// Blocks until the session's version exceeds `seen`, the timeout passes, or shutdown. Returns the version.
    std::uint64_t wait_change(const std::string& session_id, std::uint64_t seen, std::chrono::milliseconds timeout) const;
    [[nodiscard]] bool closed(const std::string& session_id) const;

    /// Wakes all waiters; further waits return immediately.
    void shutdown();

  private:
    struct Session;
    std::shared_ptr<Session> find(const std::string& id) const;
    std::shared_ptr<Session> create(const SessionOptions& options, const std::string& parent);
    void advance(Session& s);
    void checkpoint(const Session& s) const;
    Json state_locked(const Session& s) const;

    std::vector<CompositeTask> tasks_;
    DomainPtr domain_;
    RunConfig base_;
    std::shared_ptr<RunStore> store_;

    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::vector<InterventionRecord> interventions_;
    std::uint64_t next_id_ = 1;
    std::atomic<bool> shutting_down_ {false};
};

/// HTTP front end:
///   GET  /api/runs                          -> {"runs":[manifest...]}
///   GET  /api/runs/{run}                    -> manifest
///   GET  /api/runs/{run}/trajectories       -> {"trajectories":[name...]}
///   GET  /api/runs/{run}/trajectories/{name}-> {"header":..,"events":[..],"footer":..}
///   GET  /api/runs/{run}/results            -> {"records":[..]}
///   GET  /api/tasks                         -> {"tasks":[{"id","intent","persona","n_subtasks","n_actions"}]}
///   GET  /api/tasks/{id}                    -> task document
///   GET  /api/sessions                      -> {"sessions":[id...]}
///   POST /api/sessions                      {"task_id","mode","human_role","opponent"?} -> session state
///   GET  /api/sessions/{id}                 -> session state
///   POST /api/sessions/{id}/actions         {"action":{kind,payload}} -> session state (409 when out of turn)
///   POST /api/sessions/{id}/rewind          {"index","replacement"?,"note"?} -> state of the new branch
///   POST /api/sessions/{id}/end             -> session state
///   GET  /api/sessions/{id}/events          -> text/event-stream of "state" events
///   GET  /api/interventions                 -> {"interventions":[..]}
/// Errors: {"error":{"kind","message"}} with 400, 404 or 409.
class ApiServer
{
  public:
    ApiServer(std::shared_ptr<SessionManager> sessions, std::shared_ptr<RunStore> store);
    ~ApiServer();
    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    /// Binds and serves on a background thread. Port 0 picks a free port; returns the bound port.
    int start(const std::string& host, int port);
    /// Serves on the calling thread until stop().
    void listen(const std::string& host, int port);
    void stop();

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace duet
