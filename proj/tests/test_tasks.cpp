// SPDX-License-Identifier: Apache-2.0
#include "law_support.hpp"
#include "mock_domain.hpp"

#include <duet/telecom.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <map>
#include <set>

using namespace duet;

namespace
{

const std::vector<CompositeTask>& universe()
{
    static const auto all = telecom::compose_all();
    return all;
}

} // namespace

TEST(Composition, CountLawOnRandomConfigurations)
{
    const auto r = duet::testing::composition_law(40, 17);
    EXPECT_EQ(r.configs, 40u);
    EXPECT_EQ(r.mismatches, 0u);
}

TEST(Composition, RejectsEmptyAndDuplicateGroups)
{
    EXPECT_THROW(compose_tasks({}, {}, assemble_plain), ConfigError);
    SubtaskGroup g {"same", {AtomicSubtask {"a", Intent::service_issue, "same", {}, {}, {}, {}}}};
    EXPECT_THROW(compose_tasks({g, g}, {}, assemble_plain), ConfigError);
}

TEST(Composition, SingleGroupYieldsItsMembers)
{
    SubtaskGroup g {"g", {}};
    for (const char* id: {"a", "b", "c"})
        g.members.push_back({id, Intent::service_issue, "g", {}, {}, {}, {}});
    const auto tasks = compose_tasks({g}, {}, assemble_plain);
    ASSERT_EQ(tasks.size(), 3u);
    EXPECT_EQ(tasks[0].id, "[service_issue]a");
}

TEST(Composition, ConstraintsFilterBySize)
{
    std::mt19937_64 rng(3);
    const auto groups = duet::testing::random_groups(rng, 4096);
    CompositionConstraints c;
    c.min_subtasks = 2;
    c.max_subtasks = 2;
    for (const auto& t: compose_tasks(groups, c, assemble_plain))
        EXPECT_EQ(t.n_subtasks(), 2u);
}

TEST(Composition, CompositeConcatenatesMembers)
{
    const auto& t = universe().front();
    EXPECT_FALSE(t.init_actions.empty());
    EXPECT_EQ(t.init_actions.front().name, "set_user_info");
    EXPECT_EQ(t.id.rfind("[", 0), 0u);
    EXPECT_GE(t.evaluation.expected_actions.size(), 1u);
}

TEST(Composition, TelecomUniverseSizes)
{
    std::map<Intent, std::size_t> per;
    for (const auto& t: universe())
        ++per[t.intent];
    for (auto intent: kAllIntents)
        EXPECT_EQ(per[intent], composition_count(telecom::subtask_groups(intent)));
}

TEST(Verification, EveryComposedTaskPasses)
{
    const auto reports = verify_all(universe(), telecom::make_domain());
    ASSERT_EQ(reports.size(), universe().size());
    for (const auto& r: reports)
        ASSERT_EQ(r.verdict, Verdict::pass) << r.task_id << ": " << r.diagnostic;
}

TEST(Verification, ParallelAndSerialAgree)
{
    std::vector<CompositeTask> some(universe().begin(), universe().begin() + 60);
    const auto a = verify_all(some, telecom::make_domain());
    const auto b = verify_all_serial(some, telecom::make_domain());
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
    {
        EXPECT_EQ(a[i].task_id, b[i].task_id);
        EXPECT_EQ(a[i].verdict, b[i].verdict);
        EXPECT_EQ(a[i].prefix_results, b[i].prefix_results);
    }
}

TEST(Verification, TaskSolvedAtInitIsRejected)
{
    auto t = duet::testing::mock_task();
    t.init_actions.clear();
    t.evaluation.expected_actions.clear();
    t.evaluation.env_assertions = {{PlayerId::user, "lamp_is", {{"on", false}}, true}};
    Environment env(duet::testing::mock_domain());
    const auto r = verify_task(t, env);
    EXPECT_EQ(r.verdict, Verdict::fail);
    EXPECT_FALSE(r.unsolved_after_init);
}

TEST(Verification, IncompleteSolutionIsRejected)
{
    auto t = duet::testing::mock_task();
    t.evaluation.expected_actions.pop_back();
    Environment env(duet::testing::mock_domain());
    EXPECT_EQ(verify_task(t, env).verdict, Verdict::fail);
}

TEST(Verification, MockTaskPassesAndRestoresWorld)
{
    Environment env(duet::testing::mock_domain());
    const auto before = env.hashes();
    const auto r = verify_task(duet::testing::mock_task(), env);
    EXPECT_EQ(r.verdict, Verdict::pass) << r.diagnostic;
    EXPECT_EQ(r.prefix_results.size(), 1u); // strict prefixes only
    EXPECT_EQ(env.hashes(), before);
}

TEST(Sampling, SuiteMatchesQuotaTable)
{
    const auto suite = telecom::default_suite(0);
    EXPECT_EQ(suite.size(), 114u);
    std::map<QuotaKey, std::size_t> cells;
    std::map<Intent, std::size_t> totals;
    for (const auto& t: suite)
    {
        ++cells[{t.intent, t.n_subtasks()}];
        ++totals[t.intent];
    }
    EXPECT_EQ(totals[Intent::service_issue], 29u);
    EXPECT_EQ(totals[Intent::mobile_data_issue], 36u);
    EXPECT_EQ(totals[Intent::mms_issue], 49u);
    for (const auto& [key, quota]: telecom::suite_quotas())
        EXPECT_EQ(cells[key], quota) << to_string(key.first) << " " << key.second;
    std::set<std::string> ids;
    for (const auto& t: suite)
        ids.insert(t.id);
    EXPECT_EQ(ids.size(), suite.size());
}

TEST(Sampling, ActionCountsWithinBounds)
{
    for (const auto& t: telecom::default_suite(0))
    {
        EXPECT_GE(t.n_actions(), 1u);
        EXPECT_LE(t.n_actions(), 12u);
    }
}

TEST(Sampling, SameSeedSameSuiteDifferentSeedDiffers)
{
    const auto a = telecom::default_suite(1);
    const auto b = telecom::default_suite(1);
    const auto c = telecom::default_suite(2);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, c);
}

TEST(Sampling, ShortSupplyIsAConfigError)
{
    Quotas q {{{Intent::service_issue, 1}, 1000}};
    EXPECT_THROW(sample_balanced(universe(), q, 0), ConfigError);
}

TEST(Personas, EveryTaskGetsOneAndTextsAreSet)
{
    std::set<Persona> seen;
    for (const auto& t: telecom::default_suite(0))
    {
        seen.insert(t.persona);
        EXPECT_EQ(t.user_scenario.persona_text, persona_text(t.persona));
    }
    EXPECT_EQ(seen.size(), 3u);
    EXPECT_TRUE(persona_text(Persona::none).empty());
    EXPECT_FALSE(persona_text(Persona::hard).empty());
}

TEST(TaskFiles, JsonRoundTrip)
{
    for (const auto& t: telecom::default_suite(0))
        ASSERT_EQ(task_from_json(Json::parse(task_to_json(t).dump())), t) << t.id;
}

TEST(TaskFiles, SaveAndLoad)
{
    const auto path = std::filesystem::temp_directory_path() / "duet_tasks_roundtrip.json";
    const auto suite = telecom::default_suite(0);
    save_tasks(path.string(), suite);
    EXPECT_EQ(load_tasks(path.string()), suite);
    std::filesystem::remove(path);
}

TEST(TaskFiles, UsesExampleFieldNames)
{
    const auto j = Json::parse(task_to_json(universe().front()).dump());
    for (const char* k: {"ID", "Description", "User Scenario", "Ticket", "Initial State", "Evaluation Criteria"})
        EXPECT_TRUE(j.contains(k)) << k;
    EXPECT_TRUE(j["Evaluation Criteria"].contains("Environment Assertions"));
    EXPECT_EQ(j["Evaluation Criteria"]["Environment Assertions"][0]["Assert Value"], true);
}

TEST(Rng, UniformBelowStaysInRange)
{
    std::mt19937_64 rng(1);
    for (std::uint64_t b: {1ULL, 2ULL, 7ULL, 1000ULL})
        for (int i = 0; i < 200; ++i)
            EXPECT_LT(uniform_below(b, rng), b);
}
