// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <duet/world.hpp>

#include <functional>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace duet
{

enum class ToolKind
{
    read,
    write,
};

enum class ParamType
{
    string,
    number,
    integer,
    boolean,
};

std::string_view to_string(ToolKind k);
std::string_view to_string(ParamType t);

struct ParamSpec
{
    std::string name;
    ParamType type = ParamType::string;
    bool required = true;
    std::string description;
};

struct ToolSpec
{
    std::string name;
    PlayerId owner = PlayerId::agent;
    ToolKind kind = ToolKind::read;
    std::vector<ParamSpec> params;
    std::string doc;
};

/// Chat-completion tool declaration: {"type":"function","function":{name, description, parameters}}.
Json to_tool_declaration(const ToolSpec& spec);

/// Result of running a tool implementation. Failures are data, never exceptions.
struct ToolOutcome
{
    enum class Status
    {
        ok,
        invalid_arguments,
        domain_error,
    };

    Status status = Status::ok;
    std::string text;

    static ToolOutcome ok(std::string text) { return {Status::ok, std::move(text)}; }
    static ToolOutcome invalid(std::string why) { return {Status::invalid_arguments, std::move(why)}; }
    static ToolOutcome error(std::string why) { return {Status::domain_error, std::move(why)}; }
};

// Read tools receive a const world, so purity is enforced by the type system.
using ReadToolFn = std::function<ToolOutcome(const WorldState&, const Json& args)>;
using WriteToolFn = std::function<ToolOutcome(WorldState&, const Json& args)>;
using ToolFn = std::variant<ReadToolFn, WriteToolFn>;

struct BoundTool
{
    ToolSpec spec;
    ToolFn fn;
};

class ToolRegistry
{
  public:
    void add_read(ToolSpec spec, ReadToolFn fn);
    void add_write(ToolSpec spec, WriteToolFn fn);

    [[nodiscard]] const BoundTool* find(PlayerId owner, std::string_view name) const;
    [[nodiscard]] const BoundTool* find_any(std::string_view name) const;
    [[nodiscard]] std::vector<ToolSpec> specs(PlayerId owner) const;
    [[nodiscard]] const std::vector<BoundTool>& all() const { return tools_; }

  private:
    void add(BoundTool tool);
    std::vector<BoundTool> tools_;
};

/// Privileged setup call from a task's initial state; may touch either database.
struct InitCall
{
    std::string name;
    PlayerId env = PlayerId::user;
    Json args = Json::object();

    bool operator==(const InitCall&) const = default;
};

using InitFn = std::function<void(WorldState&, const Json& args)>;
using AssertionFn = std::function<bool(const GlobalState&, const Json& args)>;

/// Everything that defines one domain: seed world, tools, init and assertion functions, policy text.
struct Domain
{
    std::string name;
    WorldState seed;
    ToolRegistry tools;
    std::map<std::string, InitFn, std::less<>> inits;
    std::map<std::string, AssertionFn, std::less<>> assertions;
    std::string agent_policy;

    [[nodiscard]] WorldHashes seed_hashes() const { return world_hashes(seed); }
};

using DomainPtr = std::shared_ptr<const Domain>;

/// Validates `args` against the declared parameters. Returns an empty string when valid.
std::string validate_args(const ToolSpec& spec, const Json& args);

struct EnvSnapshot
{
    GlobalState state;
    std::vector<InitCall> preamble;
};

/// One simulation's mutable world plus the shared, read-only domain.
class Environment
{
  public:
    explicit Environment(DomainPtr domain);

    /// Lets `player` invoke tools owned by the other player too (no-user mode).
    void grant_all_tools(PlayerId player);

    /// Runs a tool call; never throws for bad calls, and never appends history.
    ToolResult execute_tool(PlayerId actor, const ToolCall& call);

    /// Applies one action and appends the resulting event.
    std::optional<Observation> step(PlayerId actor, const Action& action);

    /// Applies privileged init calls in order. Unknown names raise ConfigError.
    void apply_init(std::span<const InitCall> calls);

    /// Evaluates a registered assertion against the current global state.
    bool check_assertion(std::string_view function, const Json& args) const;

    [[nodiscard]] EnvSnapshot snapshot() const { return {state_, preamble_}; }
    void restore(const EnvSnapshot& snap);

    [[nodiscard]] const GlobalState& state() const { return state_; }
    [[nodiscard]] const WorldState& world() const { return state_.world(); }
    [[nodiscard]] const std::vector<InitCall>& preamble() const { return preamble_; }
    [[nodiscard]] const Domain& domain() const { return *domain_; }
    [[nodiscard]] const DomainPtr& domain_ptr() const { return domain_; }
    [[nodiscard]] std::vector<ToolSpec> available_tools(PlayerId player) const;
    [[nodiscard]] WorldHashes hashes() const { return world_hashes(state_.world()); }

  private:
    [[nodiscard]] bool may_use(PlayerId actor, PlayerId owner) const;

    DomainPtr domain_;
    GlobalState state_;
    std::vector<InitCall> preamble_;
    std::set<PlayerId> all_access_;
};

} // namespace duet
