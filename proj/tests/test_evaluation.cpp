// SPDX-License-Identifier: Apache-2.0
#include "mock_domain.hpp"

#include <duet/evaluation.hpp>
#include <duet/policies.hpp>
#include <duet/telecom.hpp>

#include <gtest/gtest.h>

#include <random>
#include <set>

using namespace duet;
using duet::testing::mock_domain;
using duet::testing::mock_task;

namespace
{

Event call(std::size_t i, PlayerId who, std::string name, Json args)
{
    return {i, who, ToolCall {std::move(name), std::move(args)}, ToolResult {"ok", false}};
}

Event say(std::size_t i, PlayerId who, std::string text)
{
    return {i, who, Message {text}, IncomingMessage {who, text}};
}

TrialRecord rec(std::string id, int reward, Mode mode = Mode::standard)
{
    TrialRecord r;
    r.task_id = std::move(id);
    r.reward = reward;
    r.mode = mode;
    return r;
}

} // namespace

TEST(EnvAssertions, PassFailAndUnknown)
{
    const auto d = telecom::make_domain();
    Environment env(d);
    env.apply_init(std::vector<InitCall> {telecom::customer_info_init()});
    const auto& g = env.state();
    const auto ok = check_env_assertions(g, {{PlayerId::user, "assert_service_status", {{"expected_status", "connected"}}, true}}, *d);
    ASSERT_EQ(ok.size(), 1u);
    EXPECT_TRUE(ok[0].passed);
    const auto no = check_env_assertions(g, {{PlayerId::user, "assert_service_status", {{"expected_status", "connected"}}, false}}, *d);
    EXPECT_FALSE(no[0].passed);
    EXPECT_TRUE(check_env_assertions(g, {}, *d).empty());
    EXPECT_THROW(check_env_assertions(g, {{PlayerId::user, "nope", {}, true}}, *d), ConfigError);
}

TEST(ActionMatching, ActorNameAndArguments)
{
    const SolutionCall exp {PlayerId::agent, "increment", {{"by", 2}}, std::nullopt};
    EXPECT_TRUE(action_matches(call(0, PlayerId::agent, "increment", {{"by", 2}}), exp));
    EXPECT_TRUE(action_matches(call(0, PlayerId::agent, "increment", {{"by", 2.0}}), exp));
    EXPECT_FALSE(action_matches(call(0, PlayerId::user, "increment", {{"by", 2}}), exp));
    EXPECT_FALSE(action_matches(call(0, PlayerId::agent, "increment", {{"by", 3}}), exp));
    EXPECT_FALSE(action_matches(call(0, PlayerId::agent, "increment", {{"by", 2}, {"extra", 1}}), exp));
    EXPECT_FALSE(action_matches(say(0, PlayerId::agent, "increment"), exp));
}

TEST(ActionMatching, CompareArgsSubset)
{
    const SolutionCall exp {PlayerId::agent, "transfer_to_human", {{"summary", "anything"}}, std::vector<std::string> {}};
    EXPECT_TRUE(action_matches(call(0, PlayerId::agent, "transfer_to_human", {{"summary", "billing"}}), exp));
    EXPECT_FALSE(action_matches(call(0, PlayerId::agent, "transfer_to_human", {{"summary", "x"}, {"priority", 1}}), exp));
}

TEST(ActionMatching, OrderFreeAndExtrasIgnored)
{
    const std::vector<ExpectedAction> exp {{"a", {PlayerId::user, "toggle_airplane_mode", {}, std::nullopt}},
                                           {"b", {PlayerId::user, "reseat_sim_card", {}, std::nullopt}}};
    const std::vector<Event> events {call(0, PlayerId::user, "get_sim_status", {}), call(1, PlayerId::user, "reseat_sim_card", {}),
                                     call(2, PlayerId::user, "toggle_airplane_mode", {})};
    EXPECT_TRUE(check_actions(events, exp).passed);
    const auto missing = check_actions({events[0]}, exp);
    EXPECT_FALSE(missing.passed);
    EXPECT_NE(missing.detail.find("a"), std::string::npos);
}

TEST(DbCheck, ComparesBothHashes)
{
    const auto w = telecom::seed_world();
    EXPECT_TRUE(check_db(w, world_hashes(w)).passed);
    auto other = w;
    other.user_db["phone"]["airplane_mode"] = true;
    EXPECT_FALSE(check_db(other, world_hashes(w)).passed);
    EXPECT_THROW(check_db(w, std::nullopt), ConfigError);
}

TEST(Communication, NormalizedContainment)
{
    EXPECT_EQ(normalize_info("  Your total is $1,150.00\n\tthanks "), "your total is 1150.00 thanks");
    EXPECT_EQ(normalize_info("€5 and £6"), "5 and 6");
    const std::vector<Event> events {say(0, PlayerId::agent, "Your total is $150.00"), say(1, PlayerId::user, "due 2025-03-15")};
    EXPECT_TRUE(check_communication(events, {"150.00"}).passed);
    EXPECT_TRUE(check_communication(events, {}).passed);
    EXPECT_FALSE(check_communication(events, {"2025-03-15"}).passed); // said by the user, not the agent
}

TEST(NlAssertions, StubJudgeAndMissingJudge)
{
    const std::vector<Event> events {say(0, PlayerId::agent, "hello")};
    const auto yes = constant_judge(true);
    const auto r = check_nl_assertions(events, {"agent greets"}, &yes);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_TRUE(r[0].passed);
    const auto none = check_nl_assertions(events, {"agent greets"}, nullptr);
    EXPECT_TRUE(none[0].errored);
    EXPECT_FALSE(none[0].passed);
    EXPECT_TRUE(check_nl_assertions(events, {}, nullptr).empty());
}

TEST(Reward, TelecomDefaultUsesAssertionsOnly)
{
    const auto d = telecom::make_domain();
    const auto task = telecom::default_suite(0).front();
    const auto r = run_simulation(task, oracle_agent(task, Mode::standard), oracle_user(task), d, RunConfig {});
    const auto record = compute_reward(task, r.trajectory, r.final_state, *d);
    EXPECT_EQ(record.reward, 1);
    for (const auto& c: record.criteria)
        EXPECT_EQ(c.kind, CriterionKind::env_assertion);
    EvalOptions strict;
    strict.match_actions = true;
    const auto with_actions = compute_reward(task, r.trajectory, r.final_state, *d, strict);
    EXPECT_EQ(with_actions.reward, 1);
    EXPECT_EQ(with_actions.criteria.back().kind, CriterionKind::action_match);
}

TEST(Reward, NullAgentScoresZeroWithDetail)
{
    const auto d = mock_domain();
    const auto task = mock_task();
    const auto r = run_simulation(task, null_agent(), oracle_user(task), d, RunConfig {});
    const auto record = compute_reward(task, r.trajectory, r.final_state, *d);
    EXPECT_EQ(record.reward, 0);
    EXPECT_FALSE(record.criteria.front().passed);
    EXPECT_FALSE(record.criteria.front().detail.empty());
}

TEST(Reward, ConjunctionOverAllConfiguredFamilies)
{
    const auto d = mock_domain();
    auto task = mock_task();
    const auto r = run_simulation(task, oracle_agent(task, Mode::standard), oracle_user(task), d, RunConfig {});
    task.evaluation.expected_hashes = world_hashes(r.final_state.world());
    task.evaluation.match_actions = true;
    task.evaluation.communication_checks = {"flip_lamp"};
    task.evaluation.nl_assertions = {"the agent was polite"};
    const auto yes = constant_judge(true);
    const auto no = constant_judge(false);
    EvalOptions o;
    o.judge = &yes;
    const auto good = compute_reward(task, r.trajectory, r.final_state, *d, o);
    EXPECT_EQ(good.reward, 1);
    std::set<CriterionKind> kinds;
    for (const auto& c: good.criteria)
        kinds.insert(c.kind);
    EXPECT_EQ(kinds.size(), 5u);
    o.judge = &no;
    EXPECT_EQ(compute_reward(task, r.trajectory, r.final_state, *d, o).reward, 0);
    o.judge = nullptr;
    const auto flagged = compute_reward(task, r.trajectory, r.final_state, *d, o);
    EXPECT_EQ(flagged.reward, 0);
    EXPECT_TRUE(flagged.flagged);
}

TEST(PassK, ClosedFormValues)
{
    EXPECT_DOUBLE_EQ(pass_hat_k_task(2, 4, 2), 1.0 / 6.0);
    EXPECT_DOUBLE_EQ(pass_hat_k_task(4, 4, 4), 1.0);
    EXPECT_DOUBLE_EQ(pass_hat_k_task(3, 4, 4), 0.0);
    EXPECT_DOUBLE_EQ(pass_hat_k_task(3, 4, 1), 0.75);
    EXPECT_THROW(pass_hat_k_task(1, 2, 3), std::invalid_argument);
    EXPECT_THROW(pass_hat_k_task(1, 2, 0), std::invalid_argument);
}

TEST(PassK, MatchesSubsetSampling)
{
    std::mt19937_64 rng(7);
    for (int pair = 0; pair < 20; ++pair)
    {
        const std::size_t n = 1 + rng() % 8;
        const std::size_t c = rng() % (n + 1);
        const std::size_t k = 1 + rng() % n;
        std::vector<int> trials(n, 0);
        std::fill(trials.begin(), trials.begin() + static_cast<long>(c), 1);
        int hits = 0;
        const int draws = 20000;
        for (int d = 0; d < draws; ++d)
        {
            std::shuffle(trials.begin(), trials.end(), rng);
            hits += std::all_of(trials.begin(), trials.begin() + static_cast<long>(k), [](int x) { return x == 1; }) ? 1 : 0;
        }
        EXPECT_NEAR(pass_hat_k_task(c, n, k), static_cast<double>(hits) / draws, 0.02) << c << "/" << n << " k=" << k;
    }
}

TEST(PassK, CurveIsMeanOverTasksAndNonIncreasing)
{
    std::vector<TrialRecord> rs;
    for (int i = 0; i < 4; ++i)
        rs.push_back(rec("a", 1));
    for (int i = 0; i < 4; ++i)
        rs.push_back(rec("b", i < 2 ? 1 : 0));
    const auto curve = pass_k_curve(rs);
    ASSERT_EQ(curve.values.size(), 4u);
    EXPECT_DOUBLE_EQ(curve.values[1], (1.0 + 1.0 / 6.0) / 2.0);
    for (std::size_t k = 1; k < curve.values.size(); ++k)
        EXPECT_LE(curve.values[k], curve.values[k - 1]);
    EXPECT_THROW(pass_hat_k({}, 1), std::invalid_argument);
}

TEST(Breakdown, BinsPartitionTasksPerMode)
{
    const auto suite = telecom::default_suite(0);
    std::vector<TrialRecord> rs;
    for (auto mode: {Mode::standard, Mode::no_user})
        for (const auto& t: suite)
            rs.push_back(rec(t.id, 1, mode));
    const auto tables = breakdown_tables(rs, suite);
    std::set<std::string> dims;
    for (const auto& table: tables)
    {
        dims.insert(table.dimension);
        std::map<std::string, std::size_t> per_mode;
        std::map<std::string, double> share;
        for (const auto& row: table.rows)
        {
            per_mode[row.mode] += row.n_tasks;
            share[row.mode] += row.proportion;
        }
        EXPECT_EQ(per_mode.size(), 2u);
        for (const auto& [mode, n]: per_mode)
        {
            EXPECT_EQ(n, suite.size()) << table.dimension << " " << mode;
            EXPECT_NEAR(share[mode], 1.0, 1e-9);
        }
    }
    EXPECT_EQ(dims, (std::set<std::string> {"mode", "intent", "persona", "action_bin", "subtask_count"}));
}

TEST(Breakdown, ActionBins)
{
    CompositeTask t;
    t.evaluation.expected_actions.resize(2);
    EXPECT_EQ(action_bin(t), "1-2");
    t.evaluation.expected_actions.resize(4);
    EXPECT_EQ(action_bin(t), "3-4");
    t.evaluation.expected_actions.resize(7);
    EXPECT_EQ(action_bin(t), "5-7");
    t.evaluation.expected_actions.resize(8);
    EXPECT_EQ(action_bin(t), "8+");
}

TEST(Records, JsonRoundTrip)
{
    TrialRecord r = rec("x", 1, Mode::ground_truth);
    r.criteria = {{CriterionKind::nl_assertion, "s", false, "judge unavailable", true}};
    r.flagged = true;
    r.stop_reason = StopReason::user_transfer;
    EXPECT_EQ(record_from_json(record_to_json(r)), r);
}
