// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <duet/env.hpp>
#include <duet/tasks.hpp>

namespace duet::testing
{

// Minimal two-player domain: the agent owns a counter, the user owns a lamp.
inline DomainPtr mock_domain()
{
    auto d = std::make_shared<Domain>();
    d->name = "mock";
    d->seed.agent_db = {{"counter", 0}, {"log", Json::array()}};
    d->seed.user_db = {{"lamp", false}};
    d->agent_policy = "Keep the counter and the lamp in order.";

    d->tools.add_read({"get_counter", PlayerId::agent, ToolKind::read, {}, "Read the counter."},
                      [](const WorldState& w, const Json&) { return ToolOutcome::ok(w.agent_db["counter"].dump()); });
    d->tools.add_write({"increment", PlayerId::agent, ToolKind::write, {{"by", ParamType::integer, true, "Amount"}}, "Add to the counter."},
                       [](WorldState& w, const Json& a) {
                           const auto by = a.at("by").get<int>();
                           if (by <= 0)
                               return ToolOutcome::invalid("by must be positive");
                           w.agent_db["counter"] = w.agent_db["counter"].get<int>() + by;
                           w.agent_db["log"].push_back(by);
                           return ToolOutcome::ok("Counter is now " + w.agent_db["counter"].dump() + ".");
                       });
    d->tools.add_write({"broken_write", PlayerId::agent, ToolKind::write, {}, "Mutates, then fails."},
                       [](WorldState& w, const Json&) {
                           w.agent_db["counter"] = 999;
                           return ToolOutcome::error("device unavailable");
                       });
    d->tools.add_read({"look_at_lamp", PlayerId::user, ToolKind::read, {}, "Look at the lamp."},
                      [](const WorldState& w, const Json&) {
                          return ToolOutcome::ok(w.user_db["lamp"].get<bool>() ? "The lamp is on." : "The lamp is off.");
                      });
    d->tools.add_write({"flip_lamp", PlayerId::user, ToolKind::write, {}, "Flip the lamp switch."},
                       [](WorldState& w, const Json&) {
                           w.user_db["lamp"] = !w.user_db["lamp"].get<bool>();
                           return ToolOutcome::ok(w.user_db["lamp"].get<bool>() ? "Lamp on." : "Lamp off.");
                       });

    d->inits["set_counter"] = [](WorldState& w, const Json& a) { w.agent_db["counter"] = a.at("value"); };
    d->inits["turn_lamp_on"] = [](WorldState& w, const Json&) { w.user_db["lamp"] = true; };
    d->assertions["counter_equals"] = [](const GlobalState& g, const Json& a) {
        return g.world().agent_db["counter"] == a.at("value");
    };
    d->assertions["lamp_is"] = [](const GlobalState& g, const Json& a) { return g.world().user_db["lamp"] == a.at("on"); };
    return d;
}

// Task: counter starts at 1 and must reach 3 (agent), lamp must be turned on (user).
inline CompositeTask mock_task()
{
    CompositeTask t;
    t.id = "[service_issue]mock";
    t.intent = Intent::service_issue;
    t.subtask_ids = {"mock"};
    t.user_scenario.domain = "mock";
    t.user_scenario.reason_for_call = "The lamp is off.";
    t.user_scenario.known_info = "You are at home.";
    t.user_scenario.task_instructions = "Ask for help.";
    t.ticket = "Lamp is off and the counter is low.";
    t.init_actions = {{"set_counter", PlayerId::agent, {{"value", 1}}}};
    t.evaluation.expected_actions = {
        {"a0", {PlayerId::agent, "increment", {{"by", 2}}, std::nullopt}},
        {"a1", {PlayerId::user, "flip_lamp", Json::object(), std::nullopt}},
    };
    t.evaluation.env_assertions = {
        {PlayerId::agent, "counter_equals", {{"value", 3}}, true},
        {PlayerId::user, "lamp_is", {{"on", true}}, true},
    };
    return t;
}

} // namespace duet::testing
