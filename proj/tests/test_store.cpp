// SPDX-License-Identifier: Apache-2.0
#include <duet/policies.hpp>
#include <duet/store.hpp>
#include <duet/telecom.hpp>

#include <gtest/gtest.h>

#include <filesystem>

using namespace duet;
namespace fs = std::filesystem;

namespace
{

struct TempDir
{
    fs::path path;
    TempDir()
    {
        static int counter = 0;
        path = fs::temp_directory_path() / ("duet_store_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

struct SmallRun
{
    DomainPtr domain = telecom::make_domain();
    std::vector<CompositeTask> tasks;
    RunConfig config;
    std::vector<SimulationResult> results;
    RunManifest manifest;

    SmallRun()
    {
        tasks = telecom::default_suite(0);
        tasks.resize(6);
        config.trials_per_task = 2;
        config.seed = 11;
        results = run_suite(tasks, make_policy_factory({}, config.mode), domain, config);
        manifest.domain = "telecom";
        manifest.config = config;
        manifest.agent_policy = "oracle";
        manifest.user_policy = "oracle";
        manifest.fixture_digest = fixture_digest(*domain);
        manifest.tasks_digest = tasks_digest(tasks);
        manifest.code_version = std::string(code_version());
        manifest.timestamp = utc_timestamp();
        for (const auto& t: tasks)
            manifest.task_ids.push_back(t.id);
        manifest.run_id = derive_run_id(manifest);
    }
};

} // namespace

TEST(Jsonl, TrajectoryRoundTrip)
{
    const SmallRun run;
    for (const auto& r: run.results)
    {
        std::string id;
        const auto text = trajectory_to_jsonl(r.trajectory, "run-x");
        EXPECT_EQ(trajectory_from_jsonl(text, &id), r.trajectory);
        EXPECT_EQ(id, "run-x");
        EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), static_cast<long>(r.trajectory.events.size() + 2));
    }
}

TEST(Jsonl, HeaderAndFooterFields)
{
    const SmallRun run;
    const auto text = trajectory_to_jsonl(run.results[0].trajectory, "r");
    const auto header = Json::parse(text.substr(0, text.find('\n')));
    EXPECT_EQ(header["type"], "header");
    EXPECT_EQ(header["schema"], kTrajectorySchema);
    EXPECT_EQ(header["task_id"], run.tasks[0].id);
    EXPECT_TRUE(header["preamble"].is_array());
    const auto body = text.substr(0, text.size() - 1);
    const auto footer = Json::parse(body.substr(body.rfind('\n') + 1));
    EXPECT_EQ(footer["type"], "footer");
    EXPECT_EQ(footer["final_hashes"]["agent"], run.results[0].trajectory.final_hashes.agent);
    EXPECT_EQ(text.find("timestamp"), std::string::npos);
}

TEST(Jsonl, MalformedInputIsRejected)
{
    const SmallRun run;
    const auto good = trajectory_to_jsonl(run.results[0].trajectory, "r");
    EXPECT_THROW(trajectory_from_jsonl(""), EncodingError);
    EXPECT_THROW(trajectory_from_jsonl("not json\n"), EncodingError);
    EXPECT_THROW(trajectory_from_jsonl(good.substr(0, good.size() / 2)), EncodingError);
    auto wrong_schema = good;
    wrong_schema.replace(wrong_schema.find(kTrajectorySchema), kTrajectorySchema.size(), "other/9");
    EXPECT_THROW(trajectory_from_jsonl(wrong_schema), EncodingError);
    const auto without_footer = good.substr(0, good.rfind('\n', good.size() - 2) + 1);
    EXPECT_THROW(trajectory_from_jsonl(without_footer), EncodingError);
}

TEST(Manifest, RoundTripAndDeterministicId)
{
    const SmallRun a;
    const SmallRun b;
    EXPECT_EQ(manifest_from_json(manifest_to_json(a.manifest)), a.manifest);
    EXPECT_EQ(a.manifest.run_id, b.manifest.run_id);
    EXPECT_EQ(a.manifest.run_id.rfind("default-s11-", 0), 0u);
    auto other = a.manifest;
    other.config.seed = 12;
    EXPECT_NE(derive_run_id(other), a.manifest.run_id);
    EXPECT_EQ(manifest_to_json(a.manifest)["schema"], kManifestSchema);
    EXPECT_EQ(manifest_to_json(a.manifest)["hash_algorithm"], "sha256");
}

TEST(RunStore, WriteLoadAndReevaluate)
{
    TempDir dir;
    const SmallRun run;
    RunStore store(dir.path);
    const auto path = store.write_run(run.manifest, run.tasks, run.results);
    EXPECT_TRUE(fs::exists(path / "manifest.json"));
    EXPECT_THROW(store.write_run(run.manifest, run.tasks, run.results), ConfigError);

    std::vector<TrialRecord> records;
    for (std::size_t i = 0; i < run.results.size(); ++i)
    {
        auto r = compute_reward(run.tasks[i / 2], run.results[i].trajectory, run.results[i].final_state, *run.domain);
        r.trial_index = i % 2;
        records.push_back(r);
    }
    store.write_results(run.manifest.run_id, records, run.tasks);

    EXPECT_EQ(store.list_runs(), std::vector<std::string> {run.manifest.run_id});
    EXPECT_EQ(store.load_manifest(run.manifest.run_id), run.manifest);
    EXPECT_EQ(store.load_run_tasks(run.manifest.run_id), run.tasks);
    EXPECT_EQ(store.load_results(run.manifest.run_id), records);
    const auto names = store.list_trajectories(run.manifest.run_id);
    ASSERT_EQ(names.size(), run.results.size());
    EXPECT_EQ(names[0], "0000-0.jsonl");
    for (std::size_t i = 0; i < names.size(); ++i)
    {
        const auto t = store.load_trajectory(run.manifest.run_id, names[i]);
        const auto& task = run.tasks[i / 2];
        const auto state = replay(task, t, run.domain);
        EXPECT_EQ(compute_reward(task, t, state, *run.domain).reward, records[i].reward);
    }
    for (const char* f: {"results.jsonl", "results.csv", "passk.json", "breakdown.json"})
        EXPECT_TRUE(fs::exists(path / f)) << f;
    const auto passk = Json::parse(read_file(path / "passk.json"));
    EXPECT_EQ(passk["curve"].size(), 2u);
    EXPECT_THROW(store.run_dir("../escape"), ConfigError);
}

TEST(RunStore, CsvHasOneRowPerTrial)
{
    TrialRecord r;
    r.task_id = "[mms_issue]a|b";
    r.criteria = {{CriterionKind::env_assertion, "assert_mms_working", false, "", false}};
    const auto csv = records_to_csv({r, r});
    EXPECT_EQ(csv.rfind("task_id,trial,mode,reward,stop_reason,step_count,flagged,failed_criteria\n", 0), 0u);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
    EXPECT_NE(csv.find("assert_mms_working"), std::string::npos);
}

TEST(Files, AtomicWriteReplacesContent)
{
    TempDir dir;
    const auto p = dir.path / "sub" / "f.txt";
    write_file(p, "one");
    write_file(p, "two");
    EXPECT_EQ(read_file(p), "two");
    EXPECT_THROW(read_file(dir.path / "missing"), ConfigError);
}
