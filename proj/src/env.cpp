// SPDX-License-Identifier: Apache-2.0
#include <duet/env.hpp>

#include <algorithm>

namespace duet
{

std::string_view to_string(ToolKind k)
{
    return k == ToolKind::read ? "read" : "write";
}

std::string_view to_string(ParamType t)
{
    switch (t)
    {
        case ParamType::string: return "string";
        case ParamType::number: return "number";
        case ParamType::integer: return "integer";
        case ParamType::boolean: return "boolean";
    }
    return "string";
}

Json to_tool_declaration(const ToolSpec& spec)
{
    Json properties = Json::object();
    Json required = Json::array();
    for (const auto& p: spec.params)
    {
        properties[p.name] = {{"type", to_string(p.type)}, {"description", p.description}};
        if (p.required)
            required.push_back(p.name);
    }
    return {
        {"type", "function"},
        {"function",
         {
             {"name", spec.name},
             {"description", spec.doc},
             {"parameters", {{"type", "object"}, {"properties", properties}, {"required", required}}},
         }},
    };
}

void ToolRegistry::add(BoundTool tool)
{
    if (tool.spec.name.empty())
        throw ConfigError("tool name must not be empty");
    if (find(tool.spec.owner, tool.spec.name))
        throw ConfigError("duplicate tool '" + tool.spec.name + "'");
    tools_.push_back(std::move(tool));
}

void ToolRegistry::add_read(ToolSpec spec, ReadToolFn fn)
{
    spec.kind = ToolKind::read;
    add({std::move(spec), std::move(fn)});
}

void ToolRegistry::add_write(ToolSpec spec, WriteToolFn fn)
{
    spec.kind = ToolKind::write;
    add({std::move(spec), std::move(fn)});
}

const BoundTool* ToolRegistry::find(PlayerId owner, std::string_view name) const
{
    auto it = std::find_if(tools_.begin(), tools_.end(),
                           [&](const BoundTool& t) { return t.spec.owner == owner && t.spec.name == name; });
    return it == tools_.end() ? nullptr : &*it;
}

const BoundTool* ToolRegistry::find_any(std::string_view name) const
{
    auto it = std::find_if(tools_.begin(), tools_.end(), [&](const BoundTool& t) { return t.spec.name == name; });
    return it == tools_.end() ? nullptr : &*it;
}

std::vector<ToolSpec> ToolRegistry::specs(PlayerId owner) const
{
    std::vector<ToolSpec> out;
    for (const auto& t: tools_)
        if (t.spec.owner == owner)
            out.push_back(t.spec);
    return out;
}

namespace
{

bool type_matches(ParamType t, const Json& v)
{
    switch (t)
    {
        case ParamType::string: return v.is_string();
        case ParamType::number: return v.is_number();
        case ParamType::integer: return v.is_number_integer();
        case ParamType::boolean: return v.is_boolean();
    }
    return false;
}

} // namespace

std::string validate_args(const ToolSpec& spec, const Json& args)
{
    if (!args.is_object())
        return "arguments must be an object";
    for (const auto& [key, value]: args.items())
    {
        auto p = std::find_if(spec.params.begin(), spec.params.end(), [&](const ParamSpec& ps) { return ps.name == key; });
        if (p == spec.params.end())
            return "unexpected argument '" + key + "'";
        if (!type_matches(p->type, value))
            return "argument '" + key + "' must be of type " + std::string(to_string(p->type));
    }
    for (const auto& p: spec.params)
        if (p.required && !args.contains(p.name))
            return "missing required argument '" + p.name + "'";
    return {};
}

Environment::Environment(DomainPtr domain): domain_(std::move(domain))
{
    if (!domain_)
        throw ContractViolation("environment requires a domain");
    state_ = GlobalState(domain_->seed);
}

void Environment::grant_all_tools(PlayerId player)
{
    all_access_.insert(player);
}

bool Environment::may_use(PlayerId actor, PlayerId owner) const
{
    return actor == owner || all_access_.contains(actor);
}

std::vector<ToolSpec> Environment::available_tools(PlayerId player) const
{
    auto out = domain_->tools.specs(player);
    if (all_access_.contains(player))
    {
        auto more = domain_->tools.specs(other(player));
        out.insert(out.end(), more.begin(), more.end());
    }
    return out;
}

ToolResult Environment::execute_tool(PlayerId actor, const ToolCall& call)
{
    const BoundTool* tool = domain_->tools.find(actor, call.name);
    if (!tool)
        tool = domain_->tools.find(other(actor), call.name);
    if (!tool)
        return {"Error: unknown tool '" + call.name + "'", true};
    if (!may_use(actor, tool->spec.owner))
        return {"Error: not permitted: tool '" + call.name + "' belongs to the " + std::string(to_string(tool->spec.owner)),
                true};
    if (auto why = validate_args(tool->spec, call.args); !why.empty())
        return {"Error: invalid arguments: " + why, true};

    ToolOutcome outcome;
    try
    {
        if (const auto* read = std::get_if<ReadToolFn>(&tool->fn))
            outcome = (*read)(state_.world(), call.args);
        else
        {
            // Work on a copy so that a failing write leaves the world untouched.
            WorldState scratch = state_.world();
            outcome = std::get<WriteToolFn>(tool->fn)(scratch, call.args);
            if (outcome.status == ToolOutcome::Status::ok)
                state_.world() = std::move(scratch);
        }
    }
    catch (const std::exception& e)
    {
        outcome = ToolOutcome::error(e.what());
    }

    switch (outcome.status)
    {
        case ToolOutcome::Status::ok: return {std::move(outcome.text), false};
        case ToolOutcome::Status::invalid_arguments: return {"Error: invalid arguments: " + outcome.text, true};
        case ToolOutcome::Status::domain_error: return {"Error: " + outcome.text, true};
    }
    return {"Error: unreachable", true};
}

std::optional<Observation> Environment::step(PlayerId actor, const Action& action)
{
    std::optional<Observation> obs;
    if (const auto* call = std::get_if<ToolCall>(&action))
        obs = execute_tool(actor, *call);
    else if (const auto* msg = std::get_if<Message>(&action))
        obs = IncomingMessage {actor, msg->text};
    else
        obs = ToolResult {"Error: " + std::get<InvalidOutput>(action).reason, true};

    state_.append(Event {state_.history().size(), actor, action, obs});
    return obs;
}

void Environment::apply_init(std::span<const InitCall> calls)
{
    for (const auto& call: calls)
    {
        auto it = domain_->inits.find(call.name);
        if (it == domain_->inits.end())
            throw ConfigError("unknown init function '" + call.name + "'");
        it->second(state_.world(), call.args);
        preamble_.push_back(call);
    }
}

bool Environment::check_assertion(std::string_view function, const Json& args) const
{
    auto it = domain_->assertions.find(function);
    if (it == domain_->assertions.end())
        throw ConfigError("unknown assertion function '" + std::string(function) + "'");
    return it->second(state_, args);
}

void Environment::restore(const EnvSnapshot& snap)
{
    state_ = snap.state;
    preamble_ = snap.preamble;
}

} // namespace duet
