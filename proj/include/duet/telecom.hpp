// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <duet/env.hpp>

#include <stdexcept>
#include <string>
#include <string_view>

namespace duet::telecom
{

inline constexpr std::string_view kDomainName = "telecom";

// The customer every generated task is about.
inline constexpr std::string_view kCustomerName = "John Smith";
inline constexpr std::string_view kCustomerPhone = "555-123-2002";
inline constexpr std::string_view kCustomerId = "C1001";
inline constexpr std::string_view kCustomerLine = "L1002";
inline constexpr std::string_view kSimPin = "1234";
inline constexpr double kRefuelGb = 2.0;

/// Fixed business date used for suspension stamps and contract checks.
inline constexpr std::string_view kToday = "2025-03-01";

class DomainError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

enum class SimStatus
{
    active,
    missing,
    invalid,
    locked,
};

enum class Connection
{
    connected,
    no_service,
    searching,
};

enum class Signal
{
    none,
    poor,
    fair,
    good,
    excellent,
};

enum class NetworkType
{
    none,
    g3,
    g4,
    g5,
};

enum class DataSpeed
{
    none,
    slow,
    excellent,
};

std::string_view to_string(SimStatus s);
std::string_view to_string(Connection c);
std::string_view to_string(Signal s);
std::string_view to_string(NetworkType n);
std::string_view to_string(DataSpeed d);

struct NetworkStatus
{
    SimStatus sim_status = SimStatus::missing;
    Connection cellular_connection = Connection::no_service;
    Signal signal = Signal::none;
    NetworkType network_type = NetworkType::none;
    bool roaming_active = false;
    bool data_working = false;
    DataSpeed data_speed = DataSpeed::none;
    bool mms_working = false;

    bool operator==(const NetworkStatus&) const = default;
};

/// The phone's observable status as a pure function of both databases.
/// Throws DomainError when the phone's number is not linked to a line.
NetworkStatus derive_network_status(const WorldState& world);

/// e.g. "[Signal 4] Excellent | 5G | [Data] Enabled | [Battery 80%]"
std::string render_status_bar(const WorldState& world);

/// The multi-line report returned by get_network_status.
std::string render_network_report(const WorldState& world);

WorldState seed_world();

/// Preamble call that links the phone to the customer's line. Every task starts with it.
InitCall customer_info_init();

/// Builds the full telecom domain (tools, init functions, assertions, policy).
DomainPtr make_domain();

/// Agent-facing troubleshooting policy shipped with the domain.
const std::string& agent_policy_text();

} // namespace duet::telecom
