// SPDX-License-Identifier: Apache-2.0
#include "telecom_internal.hpp"

#include <duet/generated/telecom_fixture.hpp>

#include <sstream>

namespace duet::telecom
{

std::string_view to_string(SimStatus s)
{
    switch (s)
    {
        case SimStatus::active: return "active";
        case SimStatus::missing: return "missing";
        case SimStatus::invalid: return "invalid";
        case SimStatus::locked: return "locked";
    }
    return "invalid";
}

std::string_view to_string(Connection c)
{
    switch (c)
    {
        case Connection::connected: return "connected";
        case Connection::no_service: return "no_service";
        case Connection::searching: return "searching";
    }
    return "no_service";
}

std::string_view to_string(Signal s)
{
    switch (s)
    {
        case Signal::none: return "none";
        case Signal::poor: return "poor";
        case Signal::fair: return "fair";
        case Signal::good: return "good";
        case Signal::excellent: return "excellent";
    }
    return "none";
}

std::string_view to_string(NetworkType n)
{
    switch (n)
    {
        case NetworkType::none: return "none";
        case NetworkType::g3: return "3G";
        case NetworkType::g4: return "4G";
        case NetworkType::g5: return "5G";
    }
    return "none";
}

std::string_view to_string(DataSpeed d)
{
    switch (d)
    {
        case DataSpeed::none: return "none";
        case DataSpeed::slow: return "slow";
        case DataSpeed::excellent: return "excellent";
    }
    return "none";
}

namespace detail
{

const Json& phone(const WorldState& w)
{
    return w.user_db.at("phone");
}

Json& phone(WorldState& w)
{
    return w.user_db.at("phone");
}

std::optional<std::string> linked_line_id(const WorldState& w)
{
    const auto number = phone(w).value("user_phone_number", std::string {});
    if (number.empty())
        return std::nullopt;
    for (const auto& [id, line]: w.agent_db.at("lines").items())
        if (line.at("phone_number") == number)
            return id;
    return std::nullopt;
}

const Json& linked_line(const WorldState& w)
{
    auto id = linked_line_id(w);
    if (!id)
        throw DomainError("phone number '" + phone(w).value("user_phone_number", std::string {})
                          + "' is not linked to any line");
    return w.agent_db.at("lines").at(*id);
}

double remaining_data_gb(const WorldState& w, const Json& line)
{
    const auto& plan = w.agent_db.at("plans").at(line.at("plan_id").get<std::string>());
    return plan.at("data_limit_gb").get<double>() + line.at("data_refueling_gb").get<double>()
           - line.at("data_used_gb").get<double>();
}

} // namespace detail

NetworkStatus derive_network_status(const WorldState& world)
{
    using namespace detail;
    const auto& p = phone(world);
    const auto& line = linked_line(world);
    const auto& plan = world.agent_db.at("plans").at(line.at("plan_id").get<std::string>());
    const auto& sim = p.at("sim");

    NetworkStatus s;
    if (!sim.at("seated").get<bool>())
        s.sim_status = SimStatus::missing;
    else if (sim.at("lock_state") == "pin_locked")
        s.sim_status = SimStatus::locked;
    else if (sim.at("needs_reseat").get<bool>() || !sim.at("active").get<bool>())
        s.sim_status = SimStatus::invalid;
    else
        s.sim_status = SimStatus::active;

    const bool radio_on = p.at("powered_on").get<bool>() && !p.at("airplane_mode").get<bool>();
    const bool abroad = p.at("abroad").get<bool>();
    if (!radio_on || s.sim_status != SimStatus::active || line.at("status") != "Active")
        s.cellular_connection = Connection::no_service;
    else if (abroad && !line.at("roaming_enabled").get<bool>())
        s.cellular_connection = Connection::searching;
    else
        s.cellular_connection = Connection::connected;

    const bool connected = s.cellular_connection == Connection::connected;
    s.roaming_active = abroad && connected;

    if (connected)
    {
        const auto mode = p.at("network_mode_preference").get<std::string>();
        if (mode == "3g_only")
        {
            s.signal = Signal::fair;
            s.network_type = NetworkType::g3;
        }
        else if (mode == "4g_only" || s.roaming_active)
        {
            s.signal = Signal::good;
            s.network_type = NetworkType::g4;
        }
        else
        {
            s.signal = Signal::excellent;
            s.network_type = NetworkType::g5;
        }
    }

    const bool bearer_ok = connected && p.at("mobile_data_enabled").get<bool>()
                           && (!s.roaming_active || p.at("data_roaming_enabled").get<bool>());
    const bool has_allowance = remaining_data_gb(world, line) > 0.0;
    s.data_working = bearer_ok && has_allowance;

    const bool throttled = p.at("data_saver_mode").get<bool>() || p.at("vpn_connected").get<bool>()
                           || p.at("network_mode_preference") == "3g_only";
    if (!bearer_ok)
        s.data_speed = DataSpeed::none;
    else if (!has_allowance || throttled)
        s.data_speed = DataSpeed::slow;
    else
        s.data_speed = DataSpeed::excellent;

    const auto& perms = p.at("app_permissions").at("messaging");
    s.mms_working = s.data_working && p.at("apn_mms_correct").get<bool>() && plan.at("mms_included").get<bool>()
                    && !p.at("wifi_connected").get<bool>() && !p.at("wifi_calling_enabled").get<bool>()
                    && perms.at("sms").get<bool>() && perms.at("storage").get<bool>();
    return s;
}

namespace
{

int signal_bars(Signal s)
{
    switch (s)
    {
        case Signal::none: return 0;
        case Signal::poor: return 1;
        case Signal::fair: return 2;
        case Signal::good: return 3;
        case Signal::excellent: return 4;
    }
    return 0;
}

std::string capitalized(std::string_view s)
{
    std::string out(s);
    if (!out.empty())
        out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
    return out;
}

std::string yes_no(bool b)
{
    return b ? "Yes" : "No";
}

std::string on_off(bool b)
{
    return b ? "ON" : "OFF";
}

} // namespace

std::string render_status_bar(const WorldState& world)
{
    const auto& p = detail::phone(world);
    const std::string battery = "[Battery " + std::to_string(p.at("battery_percent").get<int>()) + "%]";
    if (!p.at("powered_on").get<bool>())
        return "[Powered Off]";

    std::string bar;
    if (p.at("airplane_mode").get<bool>())
        bar = "[Airplane Mode]";
    else
    {
        auto status = derive_network_status(world);
        if (status.cellular_connection == Connection::connected)
        {
            bar = "[Signal " + std::to_string(signal_bars(status.signal)) + "] " + capitalized(to_string(status.signal))
                  + " | " + std::string(to_string(status.network_type));
            if (status.roaming_active)
                bar += " | [Roaming]";
            bar += p.at("mobile_data_enabled").get<bool>() ? " | [Data] Enabled" : " | [Data] Disabled";
        }
        else if (status.cellular_connection == Connection::searching)
            bar = "[Searching]";
        else
            bar = "[No Signal]";
    }
    if (p.at("wifi_connected").get<bool>())
        bar += " | [Wi-Fi] Connected";
    return bar + " | " + battery;
}

std::string render_network_report(const WorldState& world)
{
    const auto& p = detail::phone(world);
    const auto s = derive_network_status(world);
    std::ostringstream out;
    out << "Airplane Mode: " << on_off(p.at("airplane_mode").get<bool>()) << '\n'
        << "SIM Card Status: " << to_string(s.sim_status) << '\n'
        << "Cellular Connection: " << to_string(s.cellular_connection) << '\n'
        << "Cellular Signal: " << to_string(s.signal) << '\n'
        << "Cellular Network Type: " << to_string(s.network_type) << '\n'
        << "Mobile Data Allowed: " << yes_no(p.at("mobile_data_enabled").get<bool>()) << '\n'
        << "Roaming: " << yes_no(s.roaming_active) << '\n'
        << "Data Roaming Allowed: " << yes_no(p.at("data_roaming_enabled").get<bool>()) << '\n'
        << "Wi-Fi Radio: " << on_off(p.at("wifi_radio").get<bool>()) << '\n'
        << "Wi-Fi Connected: " << yes_no(p.at("wifi_connected").get<bool>());
    return out.str();
}

WorldState seed_world()
{
    static const Json fixture = Json::parse(generated::kTelecomFixture);
    return {fixture.at("agent_db"), fixture.at("user_db")};
}

} // namespace duet::telecom
