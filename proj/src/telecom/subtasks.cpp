// SPDX-License-Identifier: Apache-2.0
#include <duet/tasks.hpp>
#include <duet/telecom.hpp>

#include <algorithm>

namespace duet::telecom
{

namespace
{

const std::string kLine(kCustomerLine);
const std::string kCustomer(kCustomerId);

SolutionCall user_call(std::string name, Json args = Json::object())
{
    return {PlayerId::user, std::move(name), std::move(args), std::nullopt};
}

SolutionCall agent_call(std::string name, Json args = Json::object())
{
    return {PlayerId::agent, std::move(name), std::move(args), std::nullopt};
}

InitCall user_init(std::string name, Json args = Json::object())
{
    return {std::move(name), PlayerId::user, std::move(args)};
}

InitCall agent_init(std::string name, Json args = Json::object())
{
    return {std::move(name), PlayerId::agent, std::move(args)};
}

AssertionCall goal_assertion(Intent intent)
{
    switch (intent)
    {
        case Intent::service_issue: return {PlayerId::user, "assert_service_status", {{"expected_status", "connected"}}, true};
        case Intent::mobile_data_issue: return {PlayerId::user, "assert_data_speed", {{"expected_speed", "excellent"}}, true};
        case Intent::mms_issue: return {PlayerId::user, "assert_mms_working", Json::object(), true};
    }
    throw ContractViolation("unreachable intent");
}

const std::string kRefuelNote =
    "You are willing to refuel 2.0 GB of data if necessary, but you do not want to change your mobile data plan.";

struct Builder
{
    Intent intent;
    std::vector<SubtaskGroup> groups;

    AtomicSubtask& add(const std::string& group_id, std::string id, std::vector<InitCall> inits,
                       std::vector<SolutionCall> solutions)
    {
        auto it = std::find_if(groups.begin(), groups.end(), [&](const SubtaskGroup& g) { return g.group_id == group_id; });
        if (it == groups.end())
        {
            groups.push_back({group_id, {}});
            it = std::prev(groups.end());
        }
        AtomicSubtask s;
        s.id = std::move(id);
        s.intent = intent;
        s.group_id = group_id;
        s.init_calls = std::move(inits);
        s.solution_calls = std::move(solutions);
        s.assertion_calls.push_back(goal_assertion(intent));
        it->members.push_back(std::move(s));
        return it->members.back();
    }
};

} // namespace

InitCall customer_info_init()
{
    return {"set_user_info", PlayerId::user, {{"name", std::string(kCustomerName)}, {"phone_number", std::string(kCustomerPhone)}}};
}

std::vector<SubtaskGroup> subtask_groups(Intent intent)
{
    Builder b {intent, {}};
    const bool data_path = intent != Intent::service_issue;

    b.add("airplane", "airplane_mode_on", {user_init("turn_airplane_mode_on")}, {user_call("toggle_airplane_mode")});

    b.add("sim", "unseat_sim_card", {user_init("unseat_sim_card")}, {user_call("reseat_sim_card")});
    b.add("sim", "lock_sim_card_pin", {user_init("lock_sim_card_pin")},
          {user_call("unlock_sim_with_pin", {{"pin", std::string(kSimPin)}})})
        .fragments.task_instructions = "If you are asked for your SIM PIN, it is 1234.";

    b.add("line_suspension", "line_suspended", {agent_init("set_line_suspended", {{"line_id", kLine}})},
          {agent_call("resume_line", {{"customer_id", kCustomer}, {"line_id", kLine}})})
        .assertion_calls.push_back(
            {PlayerId::agent, "assert_line_status", {{"line_id", kLine}, {"expected_status", "Active"}}, true});

    {
        std::vector<SolutionCall> fix {agent_call("enable_roaming", {{"customer_id", kCustomer}, {"line_id", kLine}})};
        if (data_path)
            fix.push_back(user_call("toggle_data_roaming"));
        auto& s = b.add("roaming", "abroad_roaming_disabled",
                        {user_init("set_user_abroad"), agent_init("set_line_roaming", {{"line_id", kLine}, {"enabled", false}})},
                        std::move(fix));
        s.fragments.known_info = "You are currently traveling abroad in France.";
    }

    if (intent == Intent::service_issue)
    {
        SolutionCall transfer = agent_call("transfer_to_human", {{"summary", "Customer disputes a charge on bill B1003."}});
        transfer.compare_args = std::vector<std::string> {};
        auto& s = b.add("escalation", "billing_dispute_escalation", {agent_init("open_bill_dispute", {{"bill_id", "B1003"}})},
                        {transfer});
        s.assertion_calls.push_back({PlayerId::agent, "assert_transfer_occurred", Json::object(), true});
        s.fragments.task_instructions =
            "Once your service is back, you also want to dispute the charge on your latest bill (B1003). "
            "You accept being transferred to a human agent for the dispute.";
        s.fragments.ticket = "The user also wants to dispute a charge on bill B1003.";
        return b.groups;
    }

    b.add("mobile_data", "mobile_data_off", {user_init("turn_data_off")}, {user_call("toggle_mobile_data")});

    b.add("data_allowance", "data_exhausted", {agent_init("exhaust_line_data", {{"line_id", kLine}})},
          {agent_call("refuel_data", {{"customer_id", kCustomer}, {"line_id", kLine}, {"gb", kRefuelGb}})})
        .fragments.task_instructions = intent == Intent::mms_issue ? kRefuelNote : "";

    if (intent == Intent::mobile_data_issue)
    {
        b.add("throttle", "data_saver_on", {user_init("enable_data_saver")}, {user_call("toggle_data_saver_mode")});
        b.add("throttle", "network_mode_3g", {user_init("set_network_mode", {{"mode", "3g_only"}})},
              {user_call("set_network_mode_preference", {{"mode", "4g_5g_preferred"}})});
        return b.groups;
    }

    b.add("mms_transport", "bad_apn_mms", {user_init("break_apn_mms_setting")},
          {user_call("reset_apn_settings"), user_call("reboot_phone")});
    b.add("mms_transport", "wifi_interference", {user_init("connect_to_wifi")}, {user_call("toggle_wifi")});

    b.add("messaging_permission", "messaging_sms_revoked",
          {user_init("revoke_app_permission", {{"app_name", "messaging"}, {"permission", "sms"}})},
          {user_call("grant_app_permission", {{"app_name", "messaging"}, {"permission", "sms"}})});
    b.add("messaging_permission", "messaging_storage_revoked",
          {user_init("revoke_app_permission", {{"app_name", "messaging"}, {"permission", "storage"}})},
          {user_call("grant_app_permission", {{"app_name", "messaging"}, {"permission", "storage"}})});

    b.add("wifi_calling", "wifi_calling_on", {user_init("enable_wifi_calling")}, {user_call("toggle_wifi_calling")});
    return b.groups;
}

namespace
{

struct IntentText
{
    std::string purpose;
    std::string reason;
    std::string home_note;
    std::string instructions;
    std::string ticket;
};

const IntentText& intent_text(Intent intent)
{
    static const IntentText service {
        "Test resolution path: No Service/Connection Issues.",
        "Your phone has been showing 'No Service' for the past few hours.",
        "",
        "If the agent suggests actions that don't immediately fix the issue, follow their guidance but express mild "
        "frustration after the first unsuccessful attempt. You will consider the issue resolved when the status bar shows "
        "that you have signal. If the tool call does not return updated status information, you might need to perform "
        "another tool call to get the updated status.",
        "The user is experiencing issues with their phone service. They are unable to make or receive calls, and the "
        "status bar shows 'No Service'. Customer name: John Smith, phone number: 555-123-2002. They will consider the "
        "issue resolved when the status bar shows that they have signal.",
    };
    static const IntentText data {
        "Test resolution path: Mobile Data Issues.",
        "You mobile data is not working properly. It either stops working or is very slow. You want to fix it and get "
        "excellent internet speed on your phone. You do not have access to wifi.",
        "You are currently at home in the United States.",
        "If the agent suggests actions that don't immediately fix the issue, follow their guidance but express mild "
        "frustration after the first unsuccessful attempt. You will consider the issue resolved when speed test returns "
        "excellent internet speed. "
            + kRefuelNote,
        "The user's mobile data is not working or is very slow. Customer name: John Smith, phone number: 555-123-2002. "
        "They will consider the issue resolved when a speed test on their phone returns excellent internet speed.",
    };
    static const IntentText mms {
        "Test resolution path: MMS Issues.",
        "You cannot send picture messages (MMS) from your phone. You want to be able to send them again.",
        "You are currently at home in the United States.",
        "If the agent suggests actions that don't immediately fix the issue, follow their guidance but express mild "
        "frustration after the first unsuccessful attempt. You will consider the issue resolved when a test MMS message "
        "sends successfully.",
        "The user cannot send MMS (picture) messages. Customer name: John Smith, phone number: 555-123-2002. They will "
        "consider the issue resolved when a test MMS message sends successfully.",
    };
    switch (intent)
    {
        case Intent::service_issue: return service;
        case Intent::mobile_data_issue: return data;
        case Intent::mms_issue: return mms;
    }
    return service;
}

void append_sentence(std::string& text, const std::string& sentence)
{
    if (sentence.empty())
        return;
    if (!text.empty())
        text += ' ';
    text += sentence;
}

CompositeTask assemble(Intent intent, const std::vector<const AtomicSubtask*>& selection)
{
    auto task = assemble_plain(intent, selection);
    const auto& t = intent_text(intent);
    task.purpose = t.purpose;

    task.init_actions.insert(task.init_actions.begin(), customer_info_init());

    auto& s = task.user_scenario;
    s.domain = std::string(kDomainName);
    s.reason_for_call = t.reason;
    s.known_info = "You are John Smith with phone number 555-123-2002.";
    std::string location = t.home_note;
    task.ticket = t.ticket;
    s.task_instructions = t.instructions;
    for (const auto* sub: selection)
    {
        if (!sub->fragments.known_info.empty())
            location = sub->fragments.known_info;
        append_sentence(s.task_instructions, sub->fragments.task_instructions);
        append_sentence(task.ticket, sub->fragments.ticket);
    }
    append_sentence(s.known_info, location);
    return task;
}

} // namespace

std::vector<CompositeTask> compose_all(std::size_t min_subtasks)
{
    std::vector<CompositeTask> out;
    for (auto intent: kAllIntents)
    {
        CompositionConstraints c;
        c.intent = intent;
        c.min_subtasks = min_subtasks;
        auto part = compose_tasks(subtask_groups(intent), c, assemble);
        out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    return out;
}

Quotas suite_quotas()
{
    using I = Intent;
    return {
        {{I::service_issue, 2}, 9},     {{I::service_issue, 3}, 9},     {{I::service_issue, 4}, 9},
        {{I::service_issue, 5}, 2},     {{I::mobile_data_issue, 2}, 8}, {{I::mobile_data_issue, 3}, 8},
        {{I::mobile_data_issue, 4}, 6}, {{I::mobile_data_issue, 5}, 6}, {{I::mobile_data_issue, 6}, 5},
        {{I::mobile_data_issue, 7}, 3}, {{I::mms_issue, 2}, 8},         {{I::mms_issue, 3}, 9},
        {{I::mms_issue, 4}, 6},         {{I::mms_issue, 5}, 5},         {{I::mms_issue, 6}, 6},
        {{I::mms_issue, 7}, 5},         {{I::mms_issue, 8}, 4},         {{I::mms_issue, 9}, 6},
    };
}

std::vector<CompositeTask> default_suite(std::uint64_t seed)
{
    auto sampled = sample_balanced(compose_all(), suite_quotas(), seed);
    return assign_personas(std::move(sampled), seed);
}

} // namespace duet::telecom
