// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace duet
{

using Json = nlohmann::json;

/// A precondition or invariant of the caller was broken.
class ContractViolation : public std::logic_error
{
  public:
    using std::logic_error::logic_error;
};

/// A task, domain, or run configuration is malformed.
class ConfigError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// A database value has no canonical encoding (non-finite number, binary blob).
class EncodingError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

enum class PlayerId
{
    agent,
    user,
};

std::string_view to_string(PlayerId p);
PlayerId player_from_string(std::string_view s);

constexpr PlayerId other(PlayerId p)
{
    return p == PlayerId::agent ? PlayerId::user : PlayerId::agent;
}

struct ToolCall
{
    std::string name;
    Json args = Json::object();

    bool operator==(const ToolCall&) const = default;
};

struct Message
{
    std::string text;

    bool operator==(const Message&) const = default;
};

// A policy decision that could not be turned into a tool call or message.
// Recorded in history so the failing policy sees its own error.
struct InvalidOutput
{
    std::string raw;
    std::string reason;

    bool operator==(const InvalidOutput&) const = default;
};

using Action = std::variant<ToolCall, Message, InvalidOutput>;

struct ToolResult
{
    std::string payload;
    bool is_error = false;

    bool operator==(const ToolResult&) const = default;
};

struct IncomingMessage
{
    PlayerId from = PlayerId::agent;
    std::string text;

    bool operator==(const IncomingMessage&) const = default;
};

using Observation = std::variant<ToolResult, IncomingMessage>;

struct Event
{
    std::size_t index = 0;
    PlayerId actor = PlayerId::agent;
    Action action;
    std::optional<Observation> observation;

    bool operator==(const Event&) const = default;
};

/// Who receives the observation of an event, if anyone.
std::optional<PlayerId> observer_of(const Event& e);

struct WorldState
{
    Json agent_db = Json::object();
    Json user_db = Json::object();

    bool operator==(const WorldState&) const = default;
};

struct WorldHashes
{
    std::string agent;
    std::string user;

    bool operator==(const WorldHashes&) const = default;
};

class GlobalState
{
  public:
    GlobalState() = default;
    explicit GlobalState(WorldState world): world_(std::move(world)) {}

    /// Appends `e`; its index must equal the current history length.
    void append(Event e);

    [[nodiscard]] const WorldState& world() const { return world_; }
    [[nodiscard]] WorldState& world() { return world_; }
    [[nodiscard]] const std::vector<Event>& history() const { return history_; }

  private:
    WorldState world_;
    std::vector<Event> history_;
};

/// Canonical byte form: sorted keys, explicit nulls, shortest round-trip decimals.
std::string canonical_serialize(const Json& db);

/// Lowercase hex SHA-256 of the canonical form (64 chars).
std::string state_hash(const Json& db);

WorldHashes world_hashes(const WorldState& w);

inline constexpr std::string_view kHashAlgorithm = "sha256";

// Line-format encoding of events; stable field names used by the store.
Json event_to_json(const Event& e);
Event event_from_json(const Json& j);
Json action_to_json(const Action& a);
Action action_from_json(const Json& j);

} // namespace duet
