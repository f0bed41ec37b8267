// SPDX-License-Identifier: Apache-2.0
#include "telecom_internal.hpp"

#include <array>
#include <sstream>

namespace duet::telecom::detail
{

namespace
{

ToolSpec user_tool(std::string name, std::string doc, std::vector<ParamSpec> params = {})
{
    return {std::move(name), PlayerId::user, ToolKind::read, std::move(params), std::move(doc)};
}

std::string with_status_bar(const WorldState& w, std::string message)
{
    return message + "\nStatus Bar: " + render_status_bar(w);
}

std::string on_off(bool b)
{
    return b ? "ON" : "OFF";
}

std::string fmt_gb(double v)
{
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(2);
    out << v;
    return out.str();
}

bool flip(Json& record, const char* key)
{
    const bool now = !record.at(key).get<bool>();
    record[key] = now;
    return now;
}

void apply_pending_apn_reset(Json& p)
{
    if (p.at("apn_reset_pending").get<bool>())
    {
        p["apn_name"] = "internet";
        p["apn_mms_correct"] = true;
        p["apn_reset_pending"] = false;
    }
}

constexpr std::array kNetworkModes {"4g_5g_preferred", "4g_only", "3g_only"};
constexpr std::array kPermissions {"sms", "storage"};

template <std::size_t N>
bool one_of(const std::array<const char*, N>& options, const std::string& v)
{
    for (const char* o: options)
        if (v == o)
            return true;
    return false;
}

} // namespace

void register_user_tools(ToolRegistry& registry)
{
    // Reads.
    registry.add_read(user_tool("get_network_status", "Show the phone's full network status report."),
                      [](const WorldState& w, const Json&) { return ToolOutcome::ok(render_network_report(w)); });

    registry.add_read(user_tool("get_sim_status", "Show whether the SIM card is recognised."),
                      [](const WorldState& w, const Json&) {
                          switch (derive_network_status(w).sim_status)
                          {
                              case SimStatus::active: return ToolOutcome::ok("The SIM card is active and working.");
                              case SimStatus::missing: return ToolOutcome::ok("No SIM card detected.");
                              case SimStatus::locked: return ToolOutcome::ok("The SIM card is locked with a PIN.");
                              case SimStatus::invalid: break;
                          }
                          return ToolOutcome::ok("The SIM card is invalid or not recognized.");
                      });

    registry.add_read(user_tool("check_status_bar", "Read the icons shown on the phone's status bar."),
                      [](const WorldState& w, const Json&) { return ToolOutcome::ok("Status Bar: " + render_status_bar(w)); });

    registry.add_read(user_tool("run_speed_test", "Run a download speed test."), [](const WorldState& w, const Json&) {
        const auto speed = derive_network_status(w).data_speed;
        if (speed == DataSpeed::none)
            return ToolOutcome::ok("Speed test failed: no connection.");
        return ToolOutcome::ok("Speed test complete. Download speed: " + std::string(to_string(speed)) + ".");
    });

    registry.add_read(user_tool("get_data_usage_on_device", "Show mobile data used this cycle as counted by the phone."),
                      [](const WorldState& w, const Json&) {
                          const auto& line = linked_line(w);
                          const auto& plan = w.agent_db.at("plans").at(line.at("plan_id").get<std::string>());
                          return ToolOutcome::ok("Data used this cycle: " + fmt_gb(line.at("data_used_gb").get<double>())
                                                 + " GB of " + fmt_gb(plan.at("data_limit_gb").get<double>()) + " GB.");
                      });

    registry.add_read(user_tool("get_wifi_status", "Show the Wi-Fi radio and connection state."),
                      [](const WorldState& w, const Json&) {
                          const auto& p = phone(w);
                          std::string out = "Wi-Fi Radio: " + on_off(p.at("wifi_radio").get<bool>());
                          if (p.at("wifi_connected").get<bool>())
                              out += "\nConnected to: " + p.at("wifi_ssid").get<std::string>();
                          else
                              out += "\nNot connected to any network.";
                          return ToolOutcome::ok(out);
                      });

    registry.add_read(user_tool("get_apn_settings", "Show the access point name settings."), [](const WorldState& w, const Json&) {
        const auto& p = phone(w);
        std::string out = "APN: " + p.at("apn_name").get<std::string>() + "\nMMSC URL: "
                          + (p.at("apn_mms_correct").get<bool>() ? "http://mms.carrier.example/mms" : "(not set)");
        if (p.at("apn_reset_pending").get<bool>())
            out += "\nA reset is pending and will apply after a reboot.";
        return ToolOutcome::ok(out);
    });

    registry.add_read(user_tool("get_battery_level", "Show the battery level."), [](const WorldState& w, const Json&) {
        return ToolOutcome::ok("Battery: " + std::to_string(phone(w).at("battery_percent").get<int>()) + "%");
    });

    registry.add_read(user_tool("can_send_mms_probe", "Try sending a test picture message."), [](const WorldState& w, const Json&) {
        return ToolOutcome::ok(derive_network_status(w).mms_working ? "MMS test message sent successfully."
                                                                    : "MMS test message failed to send.");
    });

    registry.add_read(user_tool("get_device_info", "Show the phone's model and identity."), [](const WorldState& w, const Json&) {
        const auto& line = linked_line(w);
        const auto& device = w.agent_db.at("devices").at(line.at("device_id").get<std::string>());
        return ToolOutcome::ok("Model: " + device.at("model").get<std::string>() + "\nIMEI: "
                               + device.at("imei").get<std::string>() + "\nPhone number: "
                               + phone(w).at("user_phone_number").get<std::string>());
    });

    registry.add_read(user_tool("check_network_mode_preference", "Show the preferred cellular network mode."),
                      [](const WorldState& w, const Json&) {
                          return ToolOutcome::ok("Preferred network mode: "
                                                 + phone(w).at("network_mode_preference").get<std::string>());
                      });

    registry.add_read(user_tool("check_vpn_status", "Show whether a VPN is connected."), [](const WorldState& w, const Json&) {
        return ToolOutcome::ok(phone(w).at("vpn_connected").get<bool>() ? "VPN: connected" : "VPN: not connected");
    });

    registry.add_read(user_tool("check_data_saver_status", "Show whether Data Saver mode is on."),
                      [](const WorldState& w, const Json&) {
                          return ToolOutcome::ok("Data Saver: " + on_off(phone(w).at("data_saver_mode").get<bool>()));
                      });

    registry.add_read(user_tool("check_app_permissions", "List the permissions granted to an app.",
                                {{"app_name", ParamType::string, true, "App to inspect, e.g. messaging."}}),
                      [](const WorldState& w, const Json& args) {
                          const auto app = args.at("app_name").get<std::string>();
                          const auto& perms = phone(w).at("app_permissions");
                          if (!perms.contains(app))
                              return ToolOutcome::error("app not found: " + app);
                          std::string out = "Permissions for " + app + ":";
                          for (const auto& [name, granted]: perms.at(app).items())
                              out += "\n- " + name + ": " + (granted.get<bool>() ? "granted" : "denied");
                          return ToolOutcome::ok(out);
                      });

    registry.add_read(user_tool("check_wifi_calling_status", "Show whether Wi-Fi Calling is on."),
                      [](const WorldState& w, const Json&) {
                          return ToolOutcome::ok("Wi-Fi Calling: " + on_off(phone(w).at("wifi_calling_enabled").get<bool>()));
                      });

    // Writes. Each reports its effect followed by the refreshed status bar.
    auto writer = [&registry](ToolSpec spec, std::function<std::string(WorldState&, const Json&)> effect) {
        registry.add_write(std::move(spec), [effect = std::move(effect)](WorldState& w, const Json& args) {
            auto message = effect(w, args);
            return ToolOutcome::ok(with_status_bar(w, std::move(message)));
        });
    };

    writer(user_tool("toggle_airplane_mode", "Turn Airplane Mode on or off."), [](WorldState& w, const Json&) {
        return "Airplane Mode is now " + on_off(flip(phone(w), "airplane_mode")) + ".";
    });

    writer(user_tool("reseat_sim_card", "Take the SIM card out and put it back in."), [](WorldState& w, const Json&) {
        auto& sim = phone(w).at("sim");
        sim["seated"] = true;
        sim["needs_reseat"] = false;
        return std::string("SIM card re-seated successfully.");
    });

    registry.add_write(user_tool("unlock_sim_with_pin", "Unlock a PIN-locked SIM card.",
                                 {{"pin", ParamType::string, true, "The SIM PIN."}}),
                       [](WorldState& w, const Json& args) {
                           auto& sim = phone(w).at("sim");
                           if (sim.at("lock_state") != "pin_locked")
                               return ToolOutcome::error("the SIM card is not locked");
                           if (args.at("pin") != sim.at("pin"))
                               return ToolOutcome::error("incorrect PIN");
                           sim["lock_state"] = "unlocked";
                           return ToolOutcome::ok(with_status_bar(w, "SIM card unlocked."));
                       });

    writer(user_tool("toggle_mobile_data", "Turn mobile data on or off."), [](WorldState& w, const Json&) {
        return "Mobile data is now " + on_off(flip(phone(w), "mobile_data_enabled")) + ".";
    });

    writer(user_tool("toggle_data_roaming", "Turn data roaming on or off."), [](WorldState& w, const Json&) {
        return "Data roaming is now " + on_off(flip(phone(w), "data_roaming_enabled")) + ".";
    });

    writer(user_tool("toggle_wifi", "Turn the Wi-Fi radio on or off."), [](WorldState& w, const Json&) {
        auto& p = phone(w);
        const bool on = flip(p, "wifi_radio");
        if (!on)
        {
            p["wifi_connected"] = false;
            p["wifi_ssid"] = nullptr;
        }
        return "Wi-Fi is now " + on_off(on) + ".";
    });

    writer(user_tool("reboot_phone", "Restart the phone."), [](WorldState& w, const Json&) {
        apply_pending_apn_reset(phone(w));
        return std::string("Phone restarted.");
    });

    writer(user_tool("reset_apn_settings", "Reset APN settings to carrier defaults (applies after a restart)."),
           [](WorldState& w, const Json&) {
               phone(w)["apn_reset_pending"] = true;
               return std::string("APN settings will be reset to defaults after the phone restarts.");
           });

    writer(user_tool("power_cycle", "Power the phone off and back on."), [](WorldState& w, const Json&) {
        auto& p = phone(w);
        apply_pending_apn_reset(p);
        p["powered_on"] = true;
        return std::string("Phone powered off and on again.");
    });

    registry.add_write(user_tool("connect_wifi", "Connect to a Wi-Fi network.",
                                 {{"ssid", ParamType::string, true, "Network name."}}),
                       [](WorldState& w, const Json& args) {
                           const auto ssid = args.at("ssid").get<std::string>();
                           if (ssid.empty())
                               return ToolOutcome::invalid("ssid must not be empty");
                           auto& p = phone(w);
                           p["wifi_radio"] = true;
                           p["wifi_connected"] = true;
                           p["wifi_ssid"] = ssid;
                           return ToolOutcome::ok(with_status_bar(w, "Connected to Wi-Fi network " + ssid + "."));
                       });

    registry.add_write(user_tool("set_network_mode_preference", "Choose the preferred cellular network mode.",
                                 {{"mode", ParamType::string, true, "One of 4g_5g_preferred, 4g_only, 3g_only."}}),
                       [](WorldState& w, const Json& args) {
                           const auto mode = args.at("mode").get<std::string>();
                           if (!one_of(kNetworkModes, mode))
                               return ToolOutcome::invalid("mode must be one of 4g_5g_preferred, 4g_only, 3g_only");
                           phone(w)["network_mode_preference"] = mode;
                           return ToolOutcome::ok(with_status_bar(w, "Preferred network mode set to " + mode + "."));
                       });

    writer(user_tool("toggle_vpn", "Connect or disconnect the VPN."), [](WorldState& w, const Json&) {
        return std::string(flip(phone(w), "vpn_connected") ? "VPN connected." : "VPN disconnected.");
    });

    writer(user_tool("toggle_data_saver_mode", "Turn Data Saver mode on or off."), [](WorldState& w, const Json&) {
        return "Data Saver is now " + on_off(flip(phone(w), "data_saver_mode")) + ".";
    });

    registry.add_write(user_tool("grant_app_permission", "Grant a permission to an app.",
                                 {{"app_name", ParamType::string, true, "App name, e.g. messaging."},
                                  {"permission", ParamType::string, true, "Permission, e.g. sms or storage."}}),
                       [](WorldState& w, const Json& args) {
                           const auto app = args.at("app_name").get<std::string>();
                           const auto perm = args.at("permission").get<std::string>();
                           auto& perms = phone(w).at("app_permissions");
                           if (!perms.contains(app))
                               return ToolOutcome::error("app not found: " + app);
                           if (!one_of(kPermissions, perm))
                               return ToolOutcome::invalid("permission must be one of sms, storage");
                           perms.at(app)[perm] = true;
                           return ToolOutcome::ok(with_status_bar(w, "Permission " + perm + " granted to " + app + "."));
                       });

    writer(user_tool("toggle_wifi_calling", "Turn Wi-Fi Calling on or off."), [](WorldState& w, const Json&) {
        return "Wi-Fi Calling is now " + on_off(flip(phone(w), "wifi_calling_enabled")) + ".";
    });
}

void register_inits(Domain& domain)
{
    auto& inits = domain.inits;
    inits["set_user_info"] = [](WorldState& w, const Json& args) {
        auto& p = phone(w);
        p["user_name"] = args.at("name");
        p["user_phone_number"] = args.at("phone_number");
    };
    inits["turn_airplane_mode_on"] = [](WorldState& w, const Json&) { phone(w)["airplane_mode"] = true; };
    inits["unseat_sim_card"] = [](WorldState& w, const Json&) { phone(w).at("sim")["needs_reseat"] = true; };
    inits["lock_sim_card_pin"] = [](WorldState& w, const Json&) { phone(w).at("sim")["lock_state"] = "pin_locked"; };
    inits["turn_data_off"] = [](WorldState& w, const Json&) { phone(w)["mobile_data_enabled"] = false; };
    inits["set_user_abroad"] = [](WorldState& w, const Json&) { phone(w)["abroad"] = true; };
    inits["enable_data_saver"] = [](WorldState& w, const Json&) { phone(w)["data_saver_mode"] = true; };
    inits["set_network_mode"] = [](WorldState& w, const Json& args) {
        const auto mode = args.at("mode").get<std::string>();
        if (!one_of(kNetworkModes, mode))
            throw ConfigError("set_network_mode: unknown mode '" + mode + "'");
        phone(w)["network_mode_preference"] = mode;
    };
    inits["break_apn_mms_setting"] = [](WorldState& w, const Json&) {
        auto& p = phone(w);
        p["apn_mms_correct"] = false;
        p["apn_name"] = "internet.custom";
    };
    inits["connect_to_wifi"] = [](WorldState& w, const Json&) {
        auto& p = phone(w);
        p["wifi_radio"] = true;
        p["wifi_connected"] = true;
        p["wifi_ssid"] = "HomeNetwork";
    };
    inits["enable_wifi_calling"] = [](WorldState& w, const Json&) { phone(w)["wifi_calling_enabled"] = true; };
    inits["revoke_app_permission"] = [](WorldState& w, const Json& args) {
        auto& perms = phone(w).at("app_permissions").at(args.at("app_name").get<std::string>());
        perms[args.at("permission").get<std::string>()] = false;
    };
    inits["set_line_suspended"] = [](WorldState& w, const Json& args) {
        auto& line = w.agent_db.at("lines").at(args.at("line_id").get<std::string>());
        line["status"] = "Suspended";
        line["suspension_start_date"] = "2025-02-15";
    };
    inits["set_line_roaming"] = [](WorldState& w, const Json& args) {
        w.agent_db.at("lines").at(args.at("line_id").get<std::string>())["roaming_enabled"] = args.at("enabled").get<bool>();
    };
    inits["exhaust_line_data"] = [](WorldState& w, const Json& args) {
        auto& line = w.agent_db.at("lines").at(args.at("line_id").get<std::string>());
        const auto& plan = w.agent_db.at("plans").at(line.at("plan_id").get<std::string>());
        line["data_used_gb"] = plan.at("data_limit_gb").get<double>() + line.at("data_refueling_gb").get<double>() + 1.0;
    };
    inits["open_bill_dispute"] = [](WorldState& w, const Json& args) {
        w.agent_db.at("bills").at(args.at("bill_id").get<std::string>())["dispute_status"] = "Open";
    };
}

void register_assertions(Domain& domain)
{
    auto& a = domain.assertions;
    a["assert_service_status"] = [](const GlobalState& s, const Json& args) {
        const auto expected = args.at("expected_status").get<std::string>();
        if (expected != "connected" && expected != "no_service" && expected != "searching")
            throw ConfigError("assert_service_status: unknown expected_status '" + expected + "'");
        return to_string(derive_network_status(s.world()).cellular_connection) == expected;
    };
    a["assert_data_speed"] = [](const GlobalState& s, const Json& args) {
        const auto expected = args.at("expected_speed").get<std::string>();
        if (expected != "excellent" && expected != "slow" && expected != "none")
            throw ConfigError("assert_data_speed: unknown expected_speed '" + expected + "'");
        return to_string(derive_network_status(s.world()).data_speed) == expected;
    };
    a["assert_mms_working"] = [](const GlobalState& s, const Json&) { return derive_network_status(s.world()).mms_working; };
    a["assert_line_status"] = [](const GlobalState& s, const Json& args) {
        const auto expected = args.at("expected_status").get<std::string>();
        if (expected != "Active" && expected != "Suspended" && expected != "Pending" && expected != "Closed")
            throw ConfigError("assert_line_status: unknown expected_status '" + expected + "'");
        const auto& lines = s.world().agent_db.at("lines");
        auto it = lines.find(args.at("line_id").get<std::string>());
        return it != lines.end() && it->at("status") == expected;
    };
    a["assert_transfer_occurred"] = [](const GlobalState& s, const Json&) {
        for (const auto& e: s.history())
        {
            const auto* call = std::get_if<ToolCall>(&e.action);
            if (e.actor == PlayerId::agent && call && call->name == "transfer_to_human" && e.observation)
                if (const auto* r = std::get_if<ToolResult>(&*e.observation); r && !r->is_error)
                    return true;
        }
        return false;
    };
}

} // namespace duet::telecom::detail
