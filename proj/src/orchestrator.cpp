// SPDX-License-Identifier: Apache-2.0
#include <duet/orchestrator.hpp>

#include <future>
#include <mutex>
#include <sstream>
#include <thread>

namespace duet
{

std::string_view to_string(Mode m)
{
    switch (m)
    {
        case Mode::standard: return "default";
        case Mode::no_user: return "no_user";
        case Mode::ground_truth: return "ground_truth";
    }
    return "default";
}

Mode mode_from_string(std::string_view s)
{
    for (auto m: kAllModes)
        if (to_string(m) == s)
            return m;
    throw ConfigError("unknown mode '" + std::string(s) + "'");
}

std::string_view to_string(StopReason r)
{
    switch (r)
    {
        case StopReason::user_stop: return "user_stop";
        case StopReason::user_transfer: return "user_transfer";
        case StopReason::agent_stop: return "agent_stop";
        case StopReason::max_steps: return "max_steps";
        case StopReason::error_limit: return "error_limit";
    }
    return "max_steps";
}

StopReason stop_reason_from_string(std::string_view s)
{
    for (auto r: {StopReason::user_stop, StopReason::user_transfer, StopReason::agent_stop, StopReason::max_steps,
                  StopReason::error_limit})
        if (to_string(r) == s)
            return r;
    throw ConfigError("unknown stop reason '" + std::string(s) + "'");
}

StopToken detect_stop(std::string_view text)
{
    if (text.find(kTransferToken) != std::string_view::npos)
        return StopToken::transfer;
    if (text.find(kStopToken) != std::string_view::npos)
        return StopToken::stop;
    return StopToken::none;
}

void RunConfig::validate() const
{
    if (max_steps == 0)
        throw ConfigError("max_steps must be positive");
    if (max_consecutive_errors == 0)
        throw ConfigError("max_consecutive_errors must be positive");
    if (trials_per_task == 0)
        throw ConfigError("trials_per_task must be positive");
    if (decision_timeout && decision_timeout->count() <= 0)
        throw ConfigError("decision_timeout must be positive");
}

Json run_config_to_json(const RunConfig& c)
{
    return {
        {"max_steps", c.max_steps},
        {"max_consecutive_errors", c.max_consecutive_errors},
        {"seed", c.seed},
        {"trials_per_task", c.trials_per_task},
        {"mode", to_string(c.mode)},
        {"decision_timeout_ms", c.decision_timeout ? Json(c.decision_timeout->count()) : Json(nullptr)},
    };
}

RunConfig run_config_from_json(const Json& j)
{
    RunConfig c;
    c.max_steps = j.value("max_steps", c.max_steps);
    c.max_consecutive_errors = j.value("max_consecutive_errors", c.max_consecutive_errors);
    c.seed = j.value("seed", c.seed);
    c.trials_per_task = j.value("trials_per_task", c.trials_per_task);
    c.mode = mode_from_string(j.value("mode", std::string("default")));
    if (j.contains("decision_timeout_ms") && !j.at("decision_timeout_ms").is_null())
        c.decision_timeout = std::chrono::milliseconds(j.at("decision_timeout_ms").get<std::int64_t>());
    return c;
}

std::vector<Event> visible_history(PlayerId role, const std::vector<Event>& history)
{
    std::vector<Event> out;
    for (const auto& e: history)
        if (e.actor == role || std::holds_alternative<Message>(e.action))
            out.push_back(e);
    return out;
}

namespace
{

std::string describe_call(const SolutionCall& c)
{
    std::string out = c.name + "(";
    bool first = true;
    for (const auto& [k, v]: c.args.items())
    {
        out += (first ? "" : ", ") + k + "=" + v.dump();
        first = false;
    }
    return out + ")";
}

} // namespace

std::string agent_instructions(const Domain& domain, const CompositeTask& task, Mode mode)
{
    std::ostringstream out;
    out << "<instructions>\n"
           "You are a customer service agent that helps the user according to the <policy> provided below.\n"
           "In each turn you can either:\n"
           "- Send a message to the user.\n"
           "- Make a tool call.\n"
           "You cannot do both at the same time.\n\n"
           "Try to be helpful and always follow the policy. Always make sure you generate valid JSON only.\n"
           "</instructions>\n"
        << "<policy>\n" << domain.agent_policy << "</policy>\n";
    if (mode == Mode::no_user)
        out << "<ticket>\n" << render_ticket(task) << "\n</ticket>\n"
            << "There is no customer on the line. You have access to the customer's phone tools as well as your own. "
               "Resolve the ticket yourself, then send a message containing "
            << kStopToken << " to finish.\n";
    if (mode == Mode::ground_truth)
    {
        out << "<solution>\nThe following tool calls resolve the issue (requestor: call):\n";
        for (std::size_t i = 0; i < task.evaluation.expected_actions.size(); ++i)
        {
            const auto& a = task.evaluation.expected_actions[i].call;
            out << i + 1 << ". " << to_string(a.requestor) << ": " << describe_call(a) << "\n";
        }
        out << "</solution>\n";
    }
    return out.str();
}

std::string user_instructions(const CompositeTask& task)
{
    std::ostringstream out;
    out << "You are playing a customer who contacts customer support about a problem with their phone. "
           "Stay in character and follow the scenario below.\n"
           "- Share information only when it is asked for or needed.\n"
           "- You can act on your phone only through your tools. Use them when the agent asks you to do something, "
           "and describe what you observe.\n"
           "- Never invent tool results, and never ask the agent to act on your phone for you.\n"
           "- When the scenario says the issue is resolved, end the conversation by sending "
        << kStopToken << ". If you are transferred to a human agent, send " << kTransferToken << ".\n\n"
        << "<scenario>\n" << render_user_instructions(task) << "\n</scenario>\n";
    return out.str();
}

PolicyView build_view(PlayerId role, const CompositeTask& task, Mode mode, const Environment& env)
{
    PolicyView v;
    v.role = role;
    v.instructions = role == PlayerId::agent ? agent_instructions(env.domain(), task, mode) : user_instructions(task);
    v.tool_specs = env.available_tools(role);
    v.visible_history = visible_history(role, env.state().history());
    return v;
}

Simulation::Simulation(CompositeTask task, DomainPtr domain, RunConfig config, std::size_t trial_index)
    : task_(std::move(task)), config_(config), trial_(trial_index), env_(std::move(domain))
{
    config_.validate();
    env_.apply_init(task_.init_actions);
    if (config_.mode == Mode::no_user)
        env_.grant_all_tools(PlayerId::agent);
    else
    {
        env_.step(PlayerId::agent, Message {std::string(kGreeting)});
        turn_ = PlayerId::user;
    }
}

PolicyView Simulation::view(PlayerId role) const
{
    return build_view(role, task_, config_.mode, env_);
}

bool Simulation::goal_reached() const
{
    return assertions_hold(env_, task_.evaluation.env_assertions);
}

GoalProbe Simulation::probe() const
{
    return [this] { return goal_reached(); };
}

Observation Simulation::submit(PlayerId actor, const Action& action)
{
    if (done())
        throw ContractViolation("simulation already finished");
    if (actor != turn_)
        throw ContractViolation("not your turn");
    if (config_.mode == Mode::no_user && actor == PlayerId::user)
        throw ContractViolation("no user in no_user mode");

    auto obs = *env_.step(actor, action);
    ++steps_;

    const auto* result = std::get_if<ToolResult>(&obs);
    const bool error = std::holds_alternative<InvalidOutput>(action) || (result && result->is_error);
    consecutive_errors_ = error ? consecutive_errors_ + 1 : 0;

    if (const auto* msg = std::get_if<Message>(&action))
    {
        if (actor == PlayerId::user)
        {
            switch (detect_stop(msg->text))
            {
                case StopToken::transfer: stop_ = StopReason::user_transfer; break;
                case StopToken::stop: stop_ = StopReason::user_stop; break;
                case StopToken::none: break;
            }
        }
        else if (config_.mode == Mode::no_user && msg->text.find(kStopToken) != std::string::npos)
            stop_ = StopReason::agent_stop;
        if (config_.mode != Mode::no_user)
            turn_ = other(actor);
    }
    if (!stop_ && consecutive_errors_ >= config_.max_consecutive_errors)
        stop_ = StopReason::error_limit;
    if (!stop_ && steps_ >= config_.max_steps)
        stop_ = StopReason::max_steps;
    return obs;
}

Trajectory Simulation::trajectory() const
{
    Trajectory t;
    t.task_id = task_.id;
    t.trial_index = trial_;
    t.mode = config_.mode;
    t.preamble = env_.preamble();
    t.events = env_.state().history();
    t.stop_reason = stop_.value_or(StopReason::max_steps);
    t.final_hashes = env_.hashes();
    return t;
}

Action request_decision(const PolicyPtr& policy, const PolicyView& view, std::optional<std::chrono::milliseconds> timeout)
{
    auto guarded = [](const PolicyPtr& p, const PolicyView& v) -> Action {
        try
        {
            return p->decide(v);
        }
        catch (const std::exception& e)
        {
            return InvalidOutput {"", std::string("policy failure: ") + e.what()};
        }
    };
    if (!timeout)
    {
        std::lock_guard lock(policy->decision_gate());
        return guarded(policy, view);
    }

    // The worker owns copies of everything it touches, so a timed-out call can finish in the background.
    auto promise = std::make_shared<std::promise<Action>>();
    auto future = promise->get_future();
    std::thread([promise, policy, view, guarded] {
        std::lock_guard lock(policy->decision_gate());
        promise->set_value(guarded(policy, view));
    }).detach();
    if (future.wait_for(*timeout) == std::future_status::ready)
        return future.get();
    return InvalidOutput {"", "decision timed out after " + std::to_string(timeout->count()) + " ms"};
}

void drive(Simulation& sim, const PolicyPtr& agent, const PolicyPtr& user)
{
    const auto probe = sim.probe();
    agent->attach_probe(probe);
    if (user)
        user->attach_probe(probe);
    while (!sim.done())
    {
        const auto actor = sim.current_actor();
        const auto& policy = actor == PlayerId::agent ? agent : user;
        if (!policy)
            throw ConfigError("no policy for " + std::string(to_string(actor)));
        sim.submit(actor, request_decision(policy, sim.view(actor), sim.config().decision_timeout));
    }
}

SimulationResult run_simulation(const CompositeTask& task, const PolicyPtr& agent, const PolicyPtr& user,
                                const DomainPtr& domain, const RunConfig& config, std::size_t trial_index)
{
    Simulation sim(task, domain, config, trial_index);
    drive(sim, agent, user);
    return {sim.trajectory(), sim.env().state()};
}

std::uint64_t trial_seed(std::uint64_t run_seed, std::string_view task_id, std::size_t trial)
{
    // FNV-1a over the task id, mixed with seed and trial through splitmix64.
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c: task_id)
    {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::uint64_t z = h ^ (run_seed * 0x9E3779B97F4A7C15ULL) ^ (static_cast<std::uint64_t>(trial) + 0x632BE59BD9B4E019ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::vector<SimulationResult> run_trials(const CompositeTask& task, const PolicyFactory& factory, const DomainPtr& domain,
                                         const RunConfig& config)
{
    config.validate();
    std::vector<SimulationResult> out;
    for (std::size_t trial = 0; trial < config.trials_per_task; ++trial)
    {
        auto policies = factory(task, trial, trial_seed(config.seed, task.id, trial));
        out.push_back(run_simulation(task, policies.agent, policies.user, domain, config, trial));
    }
    return out;
}

std::vector<SimulationResult> run_suite_serial(const std::vector<CompositeTask>& tasks, const PolicyFactory& factory,
                                               const DomainPtr& domain, const RunConfig& config)
{
    std::vector<SimulationResult> out;
    for (const auto& task: tasks)
        for (auto& r: run_trials(task, factory, domain, config))
            out.push_back(std::move(r));
    return out;
}

std::vector<SimulationResult> run_suite(const std::vector<CompositeTask>& tasks, const PolicyFactory& factory,
                                        const DomainPtr& domain, const RunConfig& config)
{
    config.validate();
    const auto trials = config.trials_per_task;
    const auto n = static_cast<std::int64_t>(tasks.size() * trials);
    std::vector<std::optional<SimulationResult>> slots(static_cast<std::size_t>(n));
    std::exception_ptr failure;
    std::mutex failure_mutex;
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i)
    {
        const auto idx = static_cast<std::size_t>(i);
        const auto& task = tasks[idx / trials];
        const auto trial = idx % trials;
        try
        {
            auto policies = factory(task, trial, trial_seed(config.seed, task.id, trial));
            slots[idx] = run_simulation(task, policies.agent, policies.user, domain, config, trial);
        }
        catch (...)
        {
            std::lock_guard lock(failure_mutex);
            if (!failure)
                failure = std::current_exception();
        }
    }
    if (failure)
        std::rethrow_exception(failure);
    std::vector<SimulationResult> out;
    out.reserve(slots.size());
    for (auto& s: slots)
        out.push_back(std::move(*s));
    return out;
}

GlobalState replay(const CompositeTask& task, const Trajectory& trajectory, const DomainPtr& domain)
{
    Environment env(domain);
    env.apply_init(trajectory.preamble.empty() ? task.init_actions : trajectory.preamble);
    if (trajectory.mode == Mode::no_user)
        env.grant_all_tools(PlayerId::agent);
    for (const auto& e: trajectory.events)
        env.step(e.actor, e.action);
    return env.state();
}

} // namespace duet
