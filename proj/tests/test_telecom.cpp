// SPDX-License-Identifier: Apache-2.0
#include "fuzz_support.hpp"

#include <duet/telecom.hpp>

#include <gtest/gtest.h>

using namespace duet;

namespace
{

const std::string kNoServiceTask = "[service_issue]airplane_mode_on|unseat_sim_card";

std::size_t count(const DomainPtr& d, PlayerId owner, ToolKind kind)
{
    std::size_t n = 0;
    for (const auto& s: d->tools.specs(owner))
        n += s.kind == kind ? 1 : 0;
    return n;
}

const CompositeTask& find(const std::vector<CompositeTask>& tasks, const std::string& id)
{
    for (const auto& t: tasks)
        if (t.id == id)
            return t;
    throw std::runtime_error("missing task " + id);
}

const std::vector<CompositeTask>& universe()
{
    static const auto all = telecom::compose_all();
    return all;
}

std::string payload(const ToolResult& r)
{
    return r.payload;
}

} // namespace

TEST(TelecomRegistry, ToolCountsPerPlayerAndKind)
{
    const auto d = telecom::make_domain();
    EXPECT_EQ(count(d, PlayerId::agent, ToolKind::read), 7u);
    EXPECT_EQ(count(d, PlayerId::agent, ToolKind::write), 6u);
    EXPECT_EQ(count(d, PlayerId::user, ToolKind::read), 15u);
    EXPECT_EQ(count(d, PlayerId::user, ToolKind::write), 15u);
}

TEST(TelecomStatus, LinkedSeedPhoneIsConnected)
{
    auto w = telecom::seed_world();
    EXPECT_THROW(telecom::derive_network_status(w), telecom::DomainError);
    w.user_db["phone"]["user_phone_number"] = std::string(telecom::kCustomerPhone);
    const auto s = telecom::derive_network_status(w);
    EXPECT_EQ(s.cellular_connection, telecom::Connection::connected);
    EXPECT_EQ(s.signal, telecom::Signal::excellent);
    EXPECT_EQ(s.network_type, telecom::NetworkType::g5);
    EXPECT_EQ(telecom::render_status_bar(w), "[Signal 4] Excellent | 5G | [Data] Enabled | [Battery 80%]");
}

TEST(TelecomStatus, UnknownPhoneNumberIsADomainError)
{
    auto w = telecom::seed_world();
    w.user_db["phone"]["user_phone_number"] = "555-000-0000";
    EXPECT_THROW(telecom::derive_network_status(w), telecom::DomainError);
    w.user_db["phone"]["user_phone_number"] = "";
    EXPECT_THROW(telecom::derive_network_status(w), telecom::DomainError);
}

TEST(TelecomNoService, AirplaneThenReseatReproducesObservations)
{
    const auto d = telecom::make_domain();
    const auto& task = find(universe(), kNoServiceTask);
    Environment env(d);
    env.apply_init(task.init_actions);
    EXPECT_FALSE(env.check_assertion("assert_service_status", {{"expected_status", "connected"}}));

    const auto first = env.execute_tool(PlayerId::user, {"toggle_airplane_mode", Json::object()});
    EXPECT_EQ(payload(first), "Airplane Mode is now OFF.\nStatus Bar: [No Signal] | [Battery 80%]");
    EXPECT_FALSE(env.check_assertion("assert_service_status", {{"expected_status", "connected"}}));

    const auto sim = env.execute_tool(PlayerId::user, {"get_sim_status", Json::object()});
    EXPECT_EQ(payload(sim), "The SIM card is invalid or not recognized.");

    const auto second = env.execute_tool(PlayerId::user, {"reseat_sim_card", Json::object()});
    EXPECT_EQ(payload(second), "SIM card re-seated successfully.\nStatus Bar: [Signal 4] Excellent | 5G | [Data] Enabled | [Battery 80%]");
    EXPECT_TRUE(env.check_assertion("assert_service_status", {{"expected_status", "connected"}}));
}

TEST(TelecomNoService, TaskDocumentMatchesExample)
{
    const auto& task = find(universe(), kNoServiceTask);
    ASSERT_EQ(task.evaluation.expected_actions.size(), 2u);
    EXPECT_EQ(task.evaluation.expected_actions[0].call.name, "toggle_airplane_mode");
    EXPECT_EQ(task.evaluation.expected_actions[1].call.name, "reseat_sim_card");
    ASSERT_EQ(task.evaluation.env_assertions.size(), 1u);
    EXPECT_EQ(task.evaluation.env_assertions[0].function, "assert_service_status");
    EXPECT_EQ(task.evaluation.env_assertions[0].args, Json({{"expected_status", "connected"}}));
    const auto md = render_task_markdown(task);
    EXPECT_NE(md.find("Your phone has been showing 'No Service' for the past few hours."), std::string::npos);
}

TEST(TelecomTools, AgentLookupsAndOwnership)
{
    Environment env(telecom::make_domain());
    const auto r = env.execute_tool(PlayerId::agent, {"get_customer_by_phone", {{"phone_number", "555-123-2002"}}});
    ASSERT_FALSE(r.is_error);
    EXPECT_NE(r.payload.find("C1001"), std::string::npos);
    EXPECT_TRUE(env.execute_tool(PlayerId::agent, {"get_customer_by_phone", {{"phone_number", ""}}}).is_error);
    EXPECT_TRUE(env.execute_tool(PlayerId::agent, {"get_details_by_id", {{"id", "Z1"}}}).is_error);
    const auto wrong = env.execute_tool(PlayerId::agent, {"enable_roaming", {{"customer_id", "C1002"}, {"line_id", "L1002"}}});
    EXPECT_TRUE(wrong.is_error);
    EXPECT_EQ(wrong.payload.rfind("Error: ", 0), 0u);
    EXPECT_TRUE(env.execute_tool(PlayerId::user, {"get_bills_for_customer", {{"customer_id", "C1001"}}}).is_error);
}

TEST(TelecomTools, RefuelRejectsNonPositiveAmounts)
{
    Environment env(telecom::make_domain());
    const auto before = env.hashes();
    EXPECT_TRUE(env.execute_tool(PlayerId::agent, {"refuel_data", {{"customer_id", "C1001"}, {"line_id", "L1002"}, {"gb", 0}}}).is_error);
    EXPECT_EQ(env.hashes(), before);
    EXPECT_FALSE(env.execute_tool(PlayerId::agent, {"refuel_data", {{"customer_id", "C1001"}, {"line_id", "L1002"}, {"gb", 2.0}}}).is_error);
    EXPECT_NE(env.hashes(), before);
}

TEST(TelecomTools, TransferIsRecordedAndAsserted)
{
    Environment env(telecom::make_domain());
    EXPECT_FALSE(env.check_assertion("assert_transfer_occurred", {}));
    env.step(PlayerId::agent, ToolCall {"transfer_to_human", {{"summary", "billing dispute"}}});
    EXPECT_TRUE(env.check_assertion("assert_transfer_occurred", {}));
    EXPECT_EQ(env.world().agent_db["transfers"].size(), 1u);
}

TEST(TelecomTools, SimPinUnlock)
{
    Environment env(telecom::make_domain());
    env.apply_init(std::vector<InitCall> {telecom::customer_info_init(), {"lock_sim_card_pin", PlayerId::user, Json::object()}});
    EXPECT_EQ(env.execute_tool(PlayerId::user, {"get_sim_status", Json::object()}).payload, "The SIM card is locked with a PIN.");
    EXPECT_TRUE(env.execute_tool(PlayerId::user, {"unlock_sim_with_pin", {{"pin", "0000"}}}).is_error);
    EXPECT_FALSE(env.execute_tool(PlayerId::user, {"unlock_sim_with_pin", {{"pin", "1234"}}}).is_error);
    EXPECT_TRUE(env.check_assertion("assert_service_status", {{"expected_status", "connected"}}));
}

TEST(TelecomAssertions, RejectUnknownExpectedValues)
{
    Environment env(telecom::make_domain());
    EXPECT_THROW((void)env.check_assertion("assert_service_status", {{"expected_status", "great"}}), ConfigError);
    EXPECT_THROW((void)env.check_assertion("assert_data_speed", {{"expected_speed", "warp"}}), ConfigError);
    EXPECT_TRUE(env.check_assertion("assert_line_status", {{"line_id", "L1002"}, {"expected_status", "Active"}}));
}

TEST(TelecomProperties, ReadToolsNeverChangeState)
{
    const auto r = duet::testing::read_purity_fuzz(telecom::make_domain(), universe(), 2000, 5);
    EXPECT_EQ(r.executions, 2000u);
    EXPECT_EQ(r.hash_changes, 0u);
    EXPECT_GT(r.errors, 0u); // the fuzz reaches error paths too
}

// Applying the solutions of any strict subset of a composite's subtasks leaves some assertion false;
// applying all of them satisfies every assertion.
TEST(TelecomProperties, AssertionsHoldIffAllDefectsCleared)
{
    const auto d = telecom::make_domain();
    std::map<std::string, const AtomicSubtask*> by_id;
    std::vector<SubtaskGroup> groups;
    for (auto intent: kAllIntents)
        for (auto& g: telecom::subtask_groups(intent))
            groups.push_back(std::move(g));
    for (const auto& g: groups)
        for (const auto& m: g.members)
            by_id[std::string(to_string(m.intent)) + "/" + m.id] = &m;

    std::size_t checked = 0;
    for (std::size_t ti = 0; ti < universe().size(); ti += 7)
    {
        const auto& task = universe()[ti];
        if (task.n_subtasks() > 5)
            continue;
        std::vector<const AtomicSubtask*> members;
        for (const auto& sid: task.subtask_ids)
            members.push_back(by_id.at(std::string(to_string(task.intent)) + "/" + sid));
        const auto n = members.size();
        for (std::uint32_t mask = 0; mask < (1u << n); ++mask)
        {
            Environment env(d);
            env.apply_init(task.init_actions);
            for (std::size_t i = 0; i < n; ++i)
                if (mask & (1u << i))
                    for (const auto& call: members[i]->solution_calls)
                        ASSERT_FALSE(apply_solution_call(env, call).has_value()) << task.id;
            const bool all = mask == (1u << n) - 1;
            EXPECT_EQ(assertions_hold(env, task.evaluation.env_assertions), all) << task.id << " mask " << mask;
            ++checked;
        }
    }
    EXPECT_GT(checked, 500u);
}
