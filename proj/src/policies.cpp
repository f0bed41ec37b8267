// SPDX-License-Identifier: Apache-2.0
#include <duet/policies.hpp>

#include <random>

namespace duet
{

namespace
{

bool ident_char(char c)
{
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

const ToolResult* result_of(const Event& e)
{
    return e.observation ? std::get_if<ToolResult>(&*e.observation) : nullptr;
}

const Message* message_of(const Event& e)
{
    return std::get_if<Message>(&e.action);
}

std::string describe_request(const SolutionCall& c)
{
    std::string out = "Please use " + c.name + " on your phone";
    if (!c.args.empty())
    {
        out += " with";
        bool first = true;
        for (const auto& [k, v]: c.args.items())
        {
            out += std::string(first ? " " : ", ") + k + " " + (v.is_string() ? v.get<std::string>() : v.dump());
            first = false;
        }
    }
    return out + ", and tell me what you see.";
}

class OracleAgent final : public Policy
{
  public:
    OracleAgent(const CompositeTask& task, Mode mode): task_(task), mode_(mode) {}

    std::string id() const override { return "oracle_agent"; }

    Action decide(const PolicyView& view) override
    {
        const auto& script = task_.evaluation.expected_actions;
        const std::size_t done = progress(view.visible_history);
        if (done < script.size())
        {
            const auto& call = script[done].call;
            if (performs(call))
                return ToolCall {call.name, call.args};
            return Message {describe_request(call)};
        }
        if (mode_ == Mode::no_user)
            return Message {"All steps for this ticket are complete. " + std::string(kStopToken)};
        if (task_.has_transfer())
            return Message {"I have transferred you to a human agent, who will take it from here."};
        return Message {"Everything on my side is done. Your issue should now be resolved."};
    }

  private:
    bool performs(const SolutionCall& call) const { return mode_ == Mode::no_user || call.requestor == PlayerId::agent; }

    // Number of script items already completed, judged from the agent's own view.
    std::size_t progress(const std::vector<Event>& history) const
    {
        const auto& script = task_.evaluation.expected_actions;
        std::size_t i = 0;
        bool requested = false;
        for (const auto& e: history)
        {
            if (i >= script.size())
                break;
            const auto& call = script[i].call;
            if (performs(call))
            {
                const auto* tc = std::get_if<ToolCall>(&e.action);
                const auto* r = result_of(e);
                if (e.actor == PlayerId::agent && tc && tc->name == call.name && r && !r->is_error)
                    ++i;
                continue;
            }
            const auto* m = message_of(e);
            if (!m || !mentions_tool(m->text, call.name))
                continue;
            if (e.actor == PlayerId::agent)
                requested = true;
            else if (requested)
            {
                ++i;
                requested = false;
            }
        }
        return i;
    }

    CompositeTask task_;
    Mode mode_;
};

class OracleUser final : public Policy
{
  public:
    OracleUser(const CompositeTask& task, OracleUserOptions options): task_(task), options_(options) {}

    std::string id() const override
    {
        if (options_.compliant)
            return "compliance_user";
        return options_.hesitation > 0.0 ? "hesitant_user" : "oracle_user";
    }

    void attach_probe(GoalProbe probe) override { probe_ = std::move(probe); }

    Action decide(const PolicyView& view) override
    {
        const auto& history = view.visible_history;
        if (history.empty())
            return Message {opening()};
        const auto& last = history.back();

        if (last.actor == PlayerId::user)
        {
            // Our own tool call just returned: report it.
            const auto* tc = std::get_if<ToolCall>(&last.action);
            const auto* r = result_of(last);
            std::string text = "I used " + (tc ? tc->name : std::string("the tool")) + ". It shows:\n"
                               + (r ? r->payload : std::string());
            return Message {finish_if_solved(std::move(text))};
        }

        const auto* msg = message_of(last);
        const bool first_turn = std::none_of(history.begin(), history.end(),
                                             [](const Event& e) { return e.actor == PlayerId::user; });
        if (first_turn)
            return Message {opening()};
        if (!msg)
            return Message {finish_if_solved("Sorry, I did not follow that. What should I do?")};

        std::vector<std::string> names;
        for (const auto& spec: view.tool_specs)
            names.push_back(spec.name);
        if (auto tool = first_mentioned_tool(msg->text, names))
        {
            if (hesitates(history.size()))
                return Message {"Sorry, I'm not very confident with phone settings. Which setting was it again?"};
            if (auto args = args_for(*tool, view))
                return ToolCall {*tool, *args};
            return Message {"I'm not sure what " + *tool + " is supposed to do here. Could you explain what you need me to check?"};
        }
        return Message {finish_if_solved("It still doesn't seem to work. What should I try next?")};
    }

  private:
    std::string opening() const
    {
        const auto& s = task_.user_scenario;
        return "Hi. " + s.reason_for_call + " (" + s.known_info + ")";
    }

    std::string finish_if_solved(std::string text) const
    {
        if (!probe_ || !probe_())
            return text;
        const auto token = task_.has_transfer() ? kTransferToken : kStopToken;
        return text + "\nThank you, that solves it. " + std::string(token);
    }

    bool hesitates(std::size_t salt) const
    {
        if (options_.hesitation <= 0.0)
            return false;
        // A pure function of (seed, history length), so the same conversation always hesitates the same way.
        std::mt19937_64 rng(options_.seed ^ (salt * 0x9E3779B97F4A7C15ULL));
        return static_cast<double>(rng() >> 11) * 0x1.0p-53 < options_.hesitation;
    }

    std::optional<Json> args_for(const std::string& tool, const PolicyView& view) const
    {
        for (const auto& a: task_.evaluation.expected_actions)
            if (a.call.requestor == PlayerId::user && a.call.name == tool)
                return a.call.args;
        const auto spec = std::find_if(view.tool_specs.begin(), view.tool_specs.end(),
                                       [&](const ToolSpec& s) { return s.name == tool; });
        if (spec == view.tool_specs.end())
            return std::nullopt;
        const bool needs_args = std::any_of(spec->params.begin(), spec->params.end(), [](const ParamSpec& p) { return p.required; });
        if (options_.compliant || !needs_args)
            return Json::object();
        return std::nullopt;
    }

    CompositeTask task_;
    OracleUserOptions options_;
    GoalProbe probe_;
};

class NullAgent final : public Policy
{
  public:
    std::string id() const override { return "null_agent"; }
    Action decide(const PolicyView&) override { return Message {"I'm sorry, I can't help with that right now."}; }
};

class ScriptedPolicy final : public Policy
{
  public:
    ScriptedPolicy(std::string id, std::vector<Action> actions, Action fallback)
        : id_(std::move(id)), actions_(std::move(actions)), fallback_(std::move(fallback))
    {
    }

    std::string id() const override { return id_; }

    Action decide(const PolicyView&) override { return next_ < actions_.size() ? actions_[next_++] : fallback_; }

  private:
    std::string id_;
    std::vector<Action> actions_;
    Action fallback_;
    std::size_t next_ = 0;
};

} // namespace

bool mentions_tool(std::string_view text, std::string_view tool)
{
    if (tool.empty())
        return false;
    for (auto pos = text.find(tool); pos != std::string_view::npos; pos = text.find(tool, pos + 1))
    {
        const bool left = pos == 0 || !ident_char(text[pos - 1]);
        const auto end = pos + tool.size();
        const bool right = end == text.size() || !ident_char(text[end]);
        if (left && right)
            return true;
    }
    return false;
}

std::optional<std::string> first_mentioned_tool(std::string_view text, const std::vector<std::string>& names)
{
    std::optional<std::string> best;
    std::size_t best_pos = std::string_view::npos;
    for (const auto& name: names)
    {
        for (auto pos = text.find(name); pos != std::string_view::npos && pos < best_pos; pos = text.find(name, pos + 1))
        {
            const auto end = pos + name.size();
            if ((pos == 0 || !ident_char(text[pos - 1])) && (end == text.size() || !ident_char(text[end])))
            {
                best = name;
                best_pos = pos;
                break;
            }
        }
    }
    return best;
}

PolicyPtr oracle_agent(const CompositeTask& task, Mode mode)
{
    return std::make_shared<OracleAgent>(task, mode);
}

PolicyPtr oracle_user(const CompositeTask& task, OracleUserOptions options)
{
    return std::make_shared<OracleUser>(task, options);
}

PolicyPtr compliance_user(const CompositeTask& task)
{
    return std::make_shared<OracleUser>(task, OracleUserOptions {true, 0.0, 0});
}

PolicyPtr null_agent()
{
    return std::make_shared<NullAgent>();
}

PolicyPtr scripted_policy(std::string id, std::vector<Action> actions, Action fallback)
{
    return std::make_shared<ScriptedPolicy>(std::move(id), std::move(actions), std::move(fallback));
}

PolicyFactory make_policy_factory(const PolicyChoice& choice, Mode mode)
{
    auto check = [](const std::string& kind, std::initializer_list<const char*> allowed, const char* role) {
        for (const char* a: allowed)
            if (kind == a)
                return;
        throw ConfigError(std::string("unknown ") + role + " policy '" + kind + "'");
    };
    check(choice.agent, {"oracle", "null", "llm"}, "agent");
    check(choice.user, {"oracle", "compliance", "hesitant", "llm"}, "user");
    if ((choice.agent == "llm" || choice.user == "llm") && !choice.llm)
        throw ConfigError("llm policy selected without an llm configuration");

    auto usage = std::make_shared<LlmUsage>();
    return [choice, mode, usage](const CompositeTask& task, std::size_t, std::uint64_t seed) {
        PolicyPair p;
        if (choice.agent == "oracle")
            p.agent = oracle_agent(task, mode);
        else if (choice.agent == "null")
            p.agent = null_agent();
        else
            p.agent = llm_policy(*choice.llm, PlayerId::agent, usage);

        if (mode == Mode::no_user)
            return p;
        if (choice.user == "oracle")
            p.user = oracle_user(task);
        else if (choice.user == "compliance")
            p.user = compliance_user(task);
        else if (choice.user == "hesitant")
            p.user = oracle_user(task, {false, 0.3, seed});
        else
            p.user = llm_policy(*choice.llm, PlayerId::user, usage);
        return p;
    };
}

} // namespace duet
