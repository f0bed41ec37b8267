// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <duet/evaluation.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace duet
{

inline constexpr std::string_view kTrajectorySchema = "duet.trajectory/1";
inline constexpr std::string_view kManifestSchema = "duet.manifest/1";

/// Version string recorded in manifests.
std::string_view code_version();

/// Current UTC time as ISO 8601 (manifests only; trajectories carry no wall-clock time).
std::string utc_timestamp();

/// Digest of a domain's seed world (both databases).
std::string fixture_digest(const Domain& domain);

/// Digest of a task list's canonical JSON.
std::string tasks_digest(const std::vector<CompositeTask>& tasks);

struct RunManifest
{
    std::string run_id;
    std::string timestamp; // UTC, ISO 8601
    std::string domain;
    RunConfig config;
    std::string agent_policy;
    std::string user_policy;
    Json llm = nullptr; // adapter settings without credentials, or null
    std::string fixture_digest;
    std::string tasks_digest;
    std::string hash_algorithm = std::string(kHashAlgorithm);
    std::string code_version;
    std::vector<std::string> task_ids;

    bool operator==(const RunManifest&) const = default;
};

Json manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const Json& j);

/// Deterministic id from the inputs that define a run.
std::string derive_run_id(const RunManifest& m);

/// Line-delimited form: one header line, one line per event, one footer line. No wall-clock fields.
std::string trajectory_to_jsonl(const Trajectory& t, std::string_view run_id);
/// Throws EncodingError on malformed input. Returns the run id from the header through `run_id` when given.
Trajectory trajectory_from_jsonl(std::string_view text, std::string* run_id = nullptr);

/// File name for a (task ordinal, trial) pair: "0007-0.jsonl".
std::string trajectory_file_name(std::size_t ordinal, std::size_t trial);

std::string records_to_csv(const std::vector<TrialRecord>& records);
Json passk_to_json(const PassKCurve& curve);

std::string read_file(const std::filesystem::path& p);
/// Writes through a temporary file and rename.
void write_file(const std::filesystem::path& p, std::string_view content);

/// One directory per run under a root:
///   runs/<run_id>/manifest.json, tasks.json, trajectories/NNNN-T.jsonl,
///   results.jsonl, results.csv, passk.json, breakdown.json
/// and live-session checkpoints under sessions/<session_id>/.
class RunStore
{
  public:
    explicit RunStore(std::filesystem::path root);

    [[nodiscard]] const std::filesystem::path& root() const { return root_; }
    [[nodiscard]] std::filesystem::path run_dir(std::string_view run_id) const;
    [[nodiscard]] std::filesystem::path sessions_dir() const;

    /// Creates the run directory and writes the manifest, tasks and trajectories. Fails if the run exists.
    /// `results[i]` belongs to tasks[i / trials] and trial i % trials.
    std::filesystem::path write_run(const RunManifest& manifest, const std::vector<CompositeTask>& tasks,
                                    const std::vector<SimulationResult>& results);

    void write_results(std::string_view run_id, const std::vector<TrialRecord>& records, const std::vector<CompositeTask>& tasks);

    [[nodiscard]] std::vector<std::string> list_runs() const;
    [[nodiscard]] RunManifest load_manifest(std::string_view run_id) const;
    [[nodiscard]] std::vector<CompositeTask> load_run_tasks(std::string_view run_id) const;
    [[nodiscard]] std::vector<std::string> list_trajectories(std::string_view run_id) const;
    [[nodiscard]] Trajectory load_trajectory(std::string_view run_id, std::string_view name) const;
    [[nodiscard]] std::vector<TrialRecord> load_results(std::string_view run_id) const;

  private:
    std::filesystem::path root_;
};

} // namespace duet
