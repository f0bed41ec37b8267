// SPDX-License-Identifier: Apache-2.0
#include "mock_domain.hpp"

#include <duet/policies.hpp>
#include <duet/telecom.hpp>

#include <gtest/gtest.h>

#include <thread>

using namespace duet;
using duet::testing::mock_domain;
using duet::testing::mock_task;

namespace
{

RunConfig config(Mode mode = Mode::standard)
{
    RunConfig c;
    c.mode = mode;
    return c;
}

PolicyPtr say(std::string id, std::string text)
{
    return scripted_policy(std::move(id), {}, Message {std::move(text)});
}

class SlowPolicy final : public Policy
{
  public:
    std::string id() const override { return "slow"; }
    Action decide(const PolicyView&) override
    {
        std::this_thread::sleep_for(std::chrono::milliseconds(200));
        return Message {"late"};
    }
};

class ThrowingPolicy final : public Policy
{
  public:
    std::string id() const override { return "throws"; }
    Action decide(const PolicyView&) override { throw std::runtime_error("boom"); }
};

} // namespace

TEST(StopTokens, DetectionAndPrecedence)
{
    EXPECT_EQ(detect_stop("all good ###STOP###"), StopToken::stop);
    EXPECT_EQ(detect_stop("###TRANSFER### now"), StopToken::transfer);
    EXPECT_EQ(detect_stop("###STOP### and ###TRANSFER###"), StopToken::transfer);
    EXPECT_EQ(detect_stop("### STOP ###"), StopToken::none);
    EXPECT_EQ(detect_stop("stop"), StopToken::none);
}

TEST(Simulation, AgentGreetsAndUserHasTheTurn)
{
    Simulation sim(mock_task(), mock_domain(), config());
    ASSERT_EQ(sim.trajectory().events.size(), 1u);
    const auto greet = sim.trajectory().events[0];
    EXPECT_EQ(greet.actor, PlayerId::agent);
    EXPECT_EQ(std::get<Message>(greet.action).text, kGreeting);
    EXPECT_EQ(sim.current_actor(), PlayerId::user);
    EXPECT_EQ(sim.steps(), 0u);
}

TEST(Simulation, OutOfTurnSubmissionIsRejected)
{
    Simulation sim(mock_task(), mock_domain(), config());
    EXPECT_THROW(sim.submit(PlayerId::agent, Message {"hello"}), ContractViolation);
}

TEST(Simulation, ToolCallsKeepTheTurnMessagesPassIt)
{
    Simulation sim(mock_task(), mock_domain(), config());
    sim.submit(PlayerId::user, ToolCall {"look_at_lamp", Json::object()});
    EXPECT_EQ(sim.current_actor(), PlayerId::user);
    sim.submit(PlayerId::user, Message {"The lamp is off."});
    EXPECT_EQ(sim.current_actor(), PlayerId::agent);
}

TEST(Simulation, UserStopAndTransferTokensEndTheRun)
{
    {
        Simulation sim(mock_task(), mock_domain(), config());
        sim.submit(PlayerId::user, Message {"thanks ###STOP###"});
        EXPECT_EQ(sim.stop_reason(), StopReason::user_stop);
        EXPECT_THROW(sim.submit(PlayerId::agent, Message {"x"}), ContractViolation);
        // the message containing the token is still recorded
        EXPECT_EQ(std::get<Message>(sim.trajectory().events.back().action).text, "thanks ###STOP###");
    }
    {
        Simulation sim(mock_task(), mock_domain(), config());
        sim.submit(PlayerId::user, Message {"###TRANSFER### ###STOP###"});
        EXPECT_EQ(sim.stop_reason(), StopReason::user_transfer);
    }
}

TEST(Simulation, AgentStopTokenOnlyCountsInNoUserMode)
{
    Simulation a(mock_task(), mock_domain(), config(Mode::no_user));
    EXPECT_EQ(a.current_actor(), PlayerId::agent);
    a.submit(PlayerId::agent, Message {"done ###STOP###"});
    EXPECT_EQ(a.stop_reason(), StopReason::agent_stop);

    Simulation b(mock_task(), mock_domain(), config());
    b.submit(PlayerId::user, Message {"hi"});
    b.submit(PlayerId::agent, Message {"###STOP###"});
    EXPECT_FALSE(b.done());
}

TEST(Simulation, NoUserModeGrantsUserToolsAndRejectsUser)
{
    Simulation sim(mock_task(), mock_domain(), config(Mode::no_user));
    const auto obs = sim.submit(PlayerId::agent, ToolCall {"flip_lamp", Json::object()});
    EXPECT_FALSE(std::get<ToolResult>(obs).is_error);
    EXPECT_THROW(sim.submit(PlayerId::user, Message {"hi"}), ContractViolation);
}

TEST(Simulation, MaxStepsCapsTheRun)
{
    auto c = config();
    c.max_steps = 5;
    const auto r = run_simulation(mock_task(), say("a", "hmm"), say("u", "hmm"), mock_domain(), c);
    EXPECT_EQ(r.trajectory.stop_reason, StopReason::max_steps);
    EXPECT_EQ(r.trajectory.events.size(), 6u); // greeting + 5 steps
}

TEST(Simulation, ConsecutiveErrorsEndTheRun)
{
    auto bad = scripted_policy("bad", {}, ToolCall {"no_such_tool", Json::object()});
    const auto r = run_simulation(mock_task(), bad, say("u", "help"), mock_domain(), config());
    EXPECT_EQ(r.trajectory.stop_reason, StopReason::error_limit);
}

TEST(Simulation, InvalidOutputIsRecordedAsAnErrorObservation)
{
    Simulation sim(mock_task(), mock_domain(), config());
    const auto obs = sim.submit(PlayerId::user, InvalidOutput {"{oops", "not JSON"});
    const auto& r = std::get<ToolResult>(obs);
    EXPECT_TRUE(r.is_error);
    EXPECT_EQ(r.payload, "Error: not JSON");
    EXPECT_EQ(sim.current_actor(), PlayerId::user);
}

TEST(Views, EachRoleSeesOnlyItsToolResults)
{
    Simulation sim(mock_task(), mock_domain(), config());
    sim.submit(PlayerId::user, ToolCall {"look_at_lamp", Json::object()});
    sim.submit(PlayerId::user, Message {"lamp is off"});
    sim.submit(PlayerId::agent, ToolCall {"get_counter", Json::object()});
    const auto agent = sim.view(PlayerId::agent);
    const auto user = sim.view(PlayerId::user);
    for (const auto& e: agent.visible_history)
        EXPECT_TRUE(e.actor == PlayerId::agent || std::holds_alternative<Message>(e.action));
    for (const auto& e: user.visible_history)
        EXPECT_TRUE(e.actor == PlayerId::user || std::holds_alternative<Message>(e.action));
    EXPECT_EQ(agent.visible_history.size(), 3u);
    EXPECT_EQ(user.visible_history.size(), 3u);
    for (const auto& spec: agent.tool_specs)
        EXPECT_EQ(spec.owner, PlayerId::agent);
}

TEST(Views, InstructionsPerMode)
{
    const auto d = telecom::make_domain();
    const auto task = telecom::default_suite(0).front();
    const auto plain = agent_instructions(*d, task, Mode::standard);
    const auto solo = agent_instructions(*d, task, Mode::no_user);
    const auto truth = agent_instructions(*d, task, Mode::ground_truth);
    EXPECT_NE(plain.find("<policy>"), std::string::npos);
    EXPECT_EQ(plain.find("<ticket>"), std::string::npos);
    EXPECT_NE(solo.find("<ticket>"), std::string::npos);
    EXPECT_NE(truth.find("<solution>"), std::string::npos);
    EXPECT_NE(truth.find(task.evaluation.expected_actions.front().call.name), std::string::npos);
    EXPECT_NE(user_instructions(task).find(task.user_scenario.reason_for_call), std::string::npos);
}

TEST(Decisions, TimeoutsAndExceptionsBecomeInvalidOutput)
{
    PolicyView v;
    const auto slow = request_decision(std::make_shared<SlowPolicy>(), v, std::chrono::milliseconds(20));
    EXPECT_TRUE(std::holds_alternative<InvalidOutput>(slow));
    const auto thrown = request_decision(std::make_shared<ThrowingPolicy>(), v, std::nullopt);
    ASSERT_TRUE(std::holds_alternative<InvalidOutput>(thrown));
    EXPECT_NE(std::get<InvalidOutput>(thrown).reason.find("boom"), std::string::npos);
    const auto fine = request_decision(std::make_shared<SlowPolicy>(), v, std::chrono::milliseconds(5000));
    EXPECT_TRUE(std::holds_alternative<Message>(fine));
}

TEST(RunConfig, ValidationAndJson)
{
    RunConfig c;
    c.max_steps = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    RunConfig d;
    d.seed = 9;
    d.trials_per_task = 4;
    d.mode = Mode::ground_truth;
    d.decision_timeout = std::chrono::milliseconds(1500);
    const auto e = run_config_from_json(run_config_to_json(d));
    EXPECT_EQ(e.seed, 9u);
    EXPECT_EQ(e.trials_per_task, 4u);
    EXPECT_EQ(e.mode, Mode::ground_truth);
    EXPECT_EQ(e.decision_timeout, d.decision_timeout);
    EXPECT_THROW(mode_from_string("solo"), ConfigError);
    EXPECT_EQ(mode_from_string("default"), Mode::standard);
}

TEST(Suites, ParallelMatchesSerialAndSeedsAreStable)
{
    const auto d = telecom::make_domain();
    auto tasks = telecom::default_suite(0);
    tasks.resize(12);
    auto c = config();
    c.trials_per_task = 2;
    c.seed = 5;
    PolicyChoice choice;
    choice.user = "hesitant";
    const auto f = make_policy_factory(choice, c.mode);
    const auto a = run_suite(tasks, f, d, c);
    const auto b = run_suite_serial(tasks, f, d, c);
    ASSERT_EQ(a.size(), 24u);
    for (std::size_t i = 0; i < a.size(); ++i)
        EXPECT_EQ(a[i].trajectory, b[i].trajectory);
    EXPECT_EQ(trial_seed(5, "x", 0), trial_seed(5, "x", 0));
    EXPECT_NE(trial_seed(5, "x", 0), trial_seed(5, "x", 1));
    EXPECT_NE(trial_seed(5, "x", 0), trial_seed(6, "x", 0));
}

TEST(Replay, ReproducesFinalState)
{
    const auto d = telecom::make_domain();
    for (auto mode: kAllModes)
    {
        const auto task = telecom::default_suite(0)[40];
        auto c = config(mode);
        const auto r = run_simulation(task, oracle_agent(task, mode), mode == Mode::no_user ? nullptr : oracle_user(task), d, c);
        const auto g = replay(task, r.trajectory, d);
        EXPECT_EQ(world_hashes(g.world()), r.trajectory.final_hashes);
        EXPECT_EQ(g.history(), r.trajectory.events);
    }
}
