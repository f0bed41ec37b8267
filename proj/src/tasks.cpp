// SPDX-License-Identifier: Apache-2.0
#include <duet/tasks.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace duet
{

std::string_view to_string(Intent i)
{
    switch (i)
    {
        case Intent::service_issue: return "service_issue";
        case Intent::mobile_data_issue: return "mobile_data_issue";
        case Intent::mms_issue: return "mms_issue";
    }
    return "service_issue";
}

std::string_view to_string(Persona p)
{
    switch (p)
    {
        case Persona::none: return "None";
        case Persona::easy: return "Easy";
        case Persona::hard: return "Hard";
    }
    return "None";
}

Intent intent_from_string(std::string_view s)
{
    for (auto i: kAllIntents)
        if (to_string(i) == s)
            return i;
    throw ConfigError("unknown intent '" + std::string(s) + "'");
}

Persona persona_from_string(std::string_view s)
{
    for (auto p: kAllPersonas)
        if (to_string(p) == s)
            return p;
    throw ConfigError("unknown persona '" + std::string(s) + "'");
}

const std::string& persona_text(Persona p)
{
    static const std::string none;
    static const std::string easy =
        "As a 41-year-old office administrator, you use your cellphone daily for both work and personal tasks. "
        "While you're familiar with common phone functions, you wouldn't call yourself a tech enthusiast.\n\n"
        "Your technical skills are average - you handle standard smartphone features like calls, texts, email, and "
        "basic apps with ease. You understand the fundamental settings, but prefer clear, step-by-step guidance when "
        "trying something new.\n\n"
        "In interactions, you're naturally friendly and patient. When receiving help, you listen attentively and "
        "aren't afraid to ask questions. You make sure to confirm your understanding and provide detailed feedback on "
        "each instruction you receive.";
    static const std::string hard =
        "At 64 years old, you're a retired librarian who keeps your phone use simple - mainly for calls, texts, and "
        "capturing photos of your grandchildren. Technology in general makes you feel uneasy and overwhelmed.\n\n"
        "Your technical knowledge is quite limited. Step-by-step instructions often confuse you, and technical terms "
        "like \"VPN\" or \"APN\" might as well be a foreign language. You only share information when specifically "
        "asked.\n\n"
        "When dealing with technology, you tend to get flustered quickly. You need constant reassurance and often "
        "interrupt with anxious questions. Simple requests like \"reboot the phone\" can trigger worries about losing "
        "precious photos.";
    switch (p)
    {
        case Persona::none: return none;
        case Persona::easy: return easy;
        case Persona::hard: return hard;
    }
    return none;
}

bool CompositeTask::has_transfer() const
{
    return std::any_of(evaluation.expected_actions.begin(), evaluation.expected_actions.end(),
                       [](const ExpectedAction& a) { return a.call.name == "transfer_to_human"; });
}

std::uint64_t composition_count(const std::vector<SubtaskGroup>& groups)
{
    std::uint64_t product = 1;
    for (const auto& g: groups)
        product *= g.members.size() + 1;
    return product - 1;
}

CompositeTask assemble_plain(Intent intent, const std::vector<const AtomicSubtask*>& selection)
{
    CompositeTask task;
    task.intent = intent;
    task.id = "[" + std::string(to_string(intent)) + "]";
    for (std::size_t i = 0; i < selection.size(); ++i)
    {
        const auto* s = selection[i];
        task.id += (i ? "|" : "") + s->id;
        task.subtask_ids.push_back(s->id);
        task.init_actions.insert(task.init_actions.end(), s->init_calls.begin(), s->init_calls.end());
        for (const auto& call: s->solution_calls)
        {
            const auto n = task.evaluation.expected_actions.size();
            task.evaluation.expected_actions.push_back({call.name + "_" + std::to_string(n), call});
        }
        for (const auto& a: s->assertion_calls)
            if (std::find(task.evaluation.env_assertions.begin(), task.evaluation.env_assertions.end(), a)
                == task.evaluation.env_assertions.end())
                task.evaluation.env_assertions.push_back(a);
    }
    return task;
}

std::vector<CompositeTask> compose_tasks(const std::vector<SubtaskGroup>& groups, const CompositionConstraints& constraints,
                                         const TaskAssembler& assemble)
{
    if (groups.empty())
        throw ConfigError("compose_tasks: empty group list");
    for (std::size_t i = 0; i < groups.size(); ++i)
        for (std::size_t j = i + 1; j < groups.size(); ++j)
            if (groups[i].group_id == groups[j].group_id)
                throw ConfigError("compose_tasks: duplicate group id '" + groups[i].group_id + "'");

    std::vector<CompositeTask> out;
    const std::uint64_t total = composition_count(groups) + 1;
    std::vector<const AtomicSubtask*> selection;
    // Index 0 is the empty selection. Each index is read as a mixed-radix number, last group fastest;
    // digit 0 skips the group and digit k picks member k-1.
    for (std::uint64_t index = 1; index < total; ++index)
    {
        selection.assign(groups.size(), nullptr);
        std::uint64_t rest = index;
        for (std::size_t g = groups.size(); g-- > 0;)
        {
            const std::uint64_t radix = groups[g].members.size() + 1;
            if (const auto d = rest % radix; d > 0)
                selection[g] = &groups[g].members[d - 1];
            rest /= radix;
        }
        std::erase(selection, nullptr);
        if (selection.size() < constraints.min_subtasks || selection.size() > constraints.max_subtasks)
            continue;
        if (constraints.intent
            && std::any_of(selection.begin(), selection.end(), [&](const auto* s) { return s->intent != *constraints.intent; }))
            continue;
        if (constraints.compatible && !constraints.compatible(selection))
            continue;
        out.push_back(assemble(selection.front()->intent, selection));
    }
    return out;
}

bool assertions_hold(const Environment& env, const std::vector<AssertionCall>& assertions)
{
    return std::all_of(assertions.begin(), assertions.end(),
                       [&](const AssertionCall& a) { return env.check_assertion(a.function, a.args) == a.expected; });
}

std::optional<std::string> apply_solution_call(Environment& env, const SolutionCall& call)
{
    auto obs = env.step(call.requestor, ToolCall {call.name, call.args});
    const auto& result = std::get<ToolResult>(*obs);
    if (result.is_error)
        return call.name + ": " + result.payload;
    return std::nullopt;
}

VerificationReport verify_task(const CompositeTask& task, Environment& env)
{
    VerificationReport report;
    report.task_id = task.id;
    const auto pristine = env.snapshot();
    const auto& actions = task.evaluation.expected_actions;
    const auto& assertions = task.evaluation.env_assertions;

    // Applies init plus the first n solution calls and reports whether the task is solved.
    auto solved_after = [&](std::size_t n) -> std::optional<bool> {
        env.restore(pristine);
        env.apply_init(task.init_actions);
        for (std::size_t i = 0; i < n; ++i)
            if (auto err = apply_solution_call(env, actions[i].call))
            {
                report.diagnostic = "solution call " + std::to_string(i) + " failed: " + *err;
                return std::nullopt;
            }
        return assertions_hold(env, assertions);
    };

    try
    {
        auto at_init = solved_after(0);
        report.unsolved_after_init = at_init && !*at_init;
        bool ok = report.unsolved_after_init && !assertions.empty();
        if (assertions.empty())
            report.diagnostic = "task has no assertions";
        for (std::size_t n = 1; ok && n < actions.size(); ++n)
        {
            auto r = solved_after(n);
            if (!r)
            {
                ok = false;
                break;
            }
            report.prefix_results.push_back(*r);
            if (*r)
            {
                report.diagnostic = "solved after strict prefix of length " + std::to_string(n);
                ok = false;
            }
        }
        if (ok)
        {
            auto all = solved_after(actions.size());
            report.solved_after_all = all && *all;
            if (all && !*all)
                report.diagnostic = "unsolved after all solution calls";
            ok = report.solved_after_all;
        }
        else if (!report.unsolved_after_init && report.diagnostic.empty())
            report.diagnostic = "already solved after init";
        report.verdict = ok ? Verdict::pass : Verdict::fail;
    }
    catch (const std::exception& e)
    {
        report.verdict = Verdict::fail;
        report.diagnostic = e.what();
    }
    env.restore(pristine);
    return report;
}

std::vector<VerificationReport> verify_all_serial(const std::vector<CompositeTask>& tasks, const DomainPtr& domain)
{
    std::vector<VerificationReport> out;
    out.reserve(tasks.size());
    for (const auto& t: tasks)
    {
        Environment env(domain);
        out.push_back(verify_task(t, env));
    }
    return out;
}

std::vector<VerificationReport> verify_all(const std::vector<CompositeTask>& tasks, const DomainPtr& domain)
{
    std::vector<VerificationReport> out(tasks.size());
    const auto n = static_cast<std::int64_t>(tasks.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i)
    {
        Environment env(domain);
        out[static_cast<std::size_t>(i)] = verify_task(tasks[static_cast<std::size_t>(i)], env);
    }
    return out;
}

std::uint64_t uniform_below(std::uint64_t bound, std::mt19937_64& rng)
{
    if (bound == 0)
        throw ContractViolation("uniform_below: bound must be positive");
    const std::uint64_t threshold = (0 - bound) % bound;
    while (true)
    {
        const std::uint64_t r = rng();
        if (r >= threshold)
            return r % bound;
    }
}

namespace
{

bool suite_order(const CompositeTask& a, const CompositeTask& b)
{
    return std::tuple(a.intent, a.n_subtasks(), a.id) < std::tuple(b.intent, b.n_subtasks(), b.id);
}

} // namespace

std::vector<CompositeTask> sample_balanced(const std::vector<CompositeTask>& tasks, const Quotas& quotas, std::uint64_t seed)
{
    std::map<QuotaKey, std::vector<const CompositeTask*>> cells;
    for (const auto& t: tasks)
        cells[{t.intent, t.n_subtasks()}].push_back(&t);

    std::mt19937_64 rng(seed);
    std::vector<CompositeTask> out;
    for (const auto& [key, quota]: quotas)
    {
        auto& pool = cells[key];
        if (quota > pool.size())
            throw ConfigError("insufficient supply for cell (" + std::string(to_string(key.first)) + ", "
                              + std::to_string(key.second) + "): quota " + std::to_string(quota) + ", supply "
                              + std::to_string(pool.size()));
        std::sort(pool.begin(), pool.end(), [](const auto* a, const auto* b) { return a->id < b->id; });
        // Partial Fisher-Yates: the first `quota` slots become the sample.
        for (std::size_t i = 0; i < quota; ++i)
        {
            const auto j = i + uniform_below(pool.size() - i, rng);
            std::swap(pool[i], pool[j]);
            out.push_back(*pool[i]);
        }
    }
    std::sort(out.begin(), out.end(), suite_order);
    return out;
}

std::vector<CompositeTask> assign_personas(std::vector<CompositeTask> tasks, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    for (auto& t: tasks)
    {
        t.persona = kAllPersonas[uniform_below(std::size(kAllPersonas), rng)];
        t.user_scenario.persona_text = persona_text(t.persona);
    }
    return tasks;
}

std::string render_ticket(const CompositeTask& task)
{
    return task.ticket;
}

std::string render_user_instructions(const CompositeTask& task)
{
    const auto& s = task.user_scenario;
    std::ostringstream out;
    out << "Domain: " << s.domain << "\n"
        << "Reason for call:\n    " << s.reason_for_call << "\n"
        << "Known info:\n    " << s.known_info << "\n"
        << "Unknown info:\n    " << s.unknown_info.value_or("") << "\n"
        << "Task instructions:\n    " << s.task_instructions;
    if (!s.persona_text.empty())
        out << "\n\nPersona:\n" << s.persona_text;
    return out.str();
}

namespace
{

std::string render_args_md(const Json& args, const std::string& indent)
{
    if (args.empty())
        return " {}\n";
    std::string out = "\n";
    for (const auto& [k, v]: args.items())
        out += indent + "- " + k + ": " + (v.is_string() ? v.get<std::string>() : v.dump()) + "\n";
    return out;
}

} // namespace

std::string render_task_markdown(const CompositeTask& task)
{
    const auto& s = task.user_scenario;
    std::ostringstream out;
    out << "# Task Details\n\n## ID\n" << task.id << "\n\n"
        << "## Description\n- **Purpose**: " << task.purpose << "\n\n"
        << "## User Scenario\n";
    if (!s.persona_text.empty())
        out << "- **Persona**: " << to_string(task.persona) << "\n";
    out << "- **Instructions**:\n"
        << "  - **Domain**: " << s.domain << "\n"
        << "  - **Reason for call**: " << s.reason_for_call << "\n"
        << "  - **Known info**: " << s.known_info << "\n"
        << "  - **Unknown info**: " << s.unknown_info.value_or("null") << "\n"
        << "  - **Task instructions**: " << s.task_instructions << "\n\n"
        << "## Ticket\n" << task.ticket << "\n\n"
        << "## Initial State\n- **Initialization Data**: null\n- **Initialization Actions**:\n";
    for (std::size_t i = 0; i < task.init_actions.size(); ++i)
    {
        const auto& a = task.init_actions[i];
        out << "  " << i + 1 << ". **Action**: " << a.name << "\n"
            << "     - **Env Type**: " << to_string(a.env) << "\n"
            << "     - **Arguments**:" << render_args_md(a.args, "       ");
    }
    out << "\n## Evaluation Criteria\n### Actions\n";
    for (std::size_t i = 0; i < task.evaluation.expected_actions.size(); ++i)
    {
        const auto& a = task.evaluation.expected_actions[i];
        out << i + 1 << ". **Action ID**: " << a.action_id << "\n"
            << "   - **Requestor**: " << to_string(a.call.requestor) << "\n"
            << "   - **Name**: " << a.call.name << "\n"
            << "   - **Arguments**:" << render_args_md(a.call.args, "     ") << "\n";
    }
    out << "### Environment Assertions\n";
    for (const auto& a: task.evaluation.env_assertions)
        out << "- **Env Type**: " << to_string(a.env) << "\n"
            << "- **Function**: " << a.function << "\n"
            << "- **Arguments**:" << render_args_md(a.args, "  ") << "- **Assert Value**: " << (a.expected ? "true" : "false")
            << "\n\n";
    return out.str();
}

namespace
{

using OJson = nlohmann::ordered_json;

OJson to_ojson(const Json& j)
{
    return OJson::parse(j.dump());
}

} // namespace

OJson task_to_json(const CompositeTask& task)
{
    const auto& s = task.user_scenario;
    const auto& ev = task.evaluation;
    OJson j;
    j["ID"] = task.id;
    j["Description"] = {{"Purpose", task.purpose},
                        {"Intent", to_string(task.intent)},
                        {"Persona", to_string(task.persona)},
                        {"Subtasks", task.subtask_ids}};
    j["User Scenario"] = {
        {"Persona", s.persona_text.empty() ? OJson(nullptr) : OJson(s.persona_text)},
        {"Instructions",
         {{"Domain", s.domain},
          {"Reason for call", s.reason_for_call},
          {"Known info", s.known_info},
          {"Unknown info", s.unknown_info ? OJson(*s.unknown_info) : OJson(nullptr)},
          {"Task instructions", s.task_instructions}}},
    };
    j["Ticket"] = task.ticket;

    OJson inits = OJson::array();
    for (const auto& a: task.init_actions)
        inits.push_back({{"Action", a.name}, {"Env Type", to_string(a.env)}, {"Arguments", to_ojson(a.args)}});
    j["Initial State"] = {{"Initialization Data", nullptr}, {"Initialization Actions", inits}};

    OJson actions = OJson::array();
    for (const auto& a: ev.expected_actions)
    {
        OJson entry = {{"Action ID", a.action_id},
                       {"Requestor", to_string(a.call.requestor)},
                       {"Name", a.call.name},
                       {"Arguments", to_ojson(a.call.args)}};
        if (a.call.compare_args)
            entry["Compare Args"] = *a.call.compare_args;
        actions.push_back(entry);
    }
    OJson assertions = OJson::array();
    for (const auto& a: ev.env_assertions)
        assertions.push_back({{"Env Type", to_string(a.env)},
                              {"Function", a.function},
                              {"Arguments", to_ojson(a.args)},
                              {"Assert Value", a.expected}});
    OJson criteria;
    criteria["Actions"] = actions;
    criteria["Environment Assertions"] = assertions;
    criteria["Communicate Info"] = ev.communication_checks;
    criteria["NL Assertions"] = ev.nl_assertions;
    criteria["Match Actions"] = ev.match_actions;
    criteria["Expected Hashes"] =
        ev.expected_hashes ? OJson {{"agent", ev.expected_hashes->agent}, {"user", ev.expected_hashes->user}} : OJson(nullptr);
    j["Evaluation Criteria"] = criteria;
    return j;
}

CompositeTask task_from_json(const Json& j)
{
    try
    {
        CompositeTask t;
        t.id = j.at("ID").get<std::string>();
        const auto& d = j.at("Description");
        t.purpose = d.at("Purpose").get<std::string>();
        t.intent = intent_from_string(d.at("Intent").get<std::string>());
        t.persona = persona_from_string(d.value("Persona", std::string("None")));
        t.subtask_ids = d.at("Subtasks").get<std::vector<std::string>>();

        const auto& us = j.at("User Scenario");
        const auto& in = us.at("Instructions");
        t.user_scenario.domain = in.at("Domain").get<std::string>();
        t.user_scenario.reason_for_call = in.at("Reason for call").get<std::string>();
        t.user_scenario.known_info = in.at("Known info").get<std::string>();
        if (in.contains("Unknown info") && !in.at("Unknown info").is_null())
            t.user_scenario.unknown_info = in.at("Unknown info").get<std::string>();
        t.user_scenario.task_instructions = in.at("Task instructions").get<std::string>();
        if (us.contains("Persona") && !us.at("Persona").is_null())
            t.user_scenario.persona_text = us.at("Persona").get<std::string>();
        t.ticket = j.at("Ticket").get<std::string>();

        for (const auto& a: j.at("Initial State").at("Initialization Actions"))
            t.init_actions.push_back({a.at("Action").get<std::string>(), player_from_string(a.at("Env Type").get<std::string>()),
                                      a.value("Arguments", Json::object())});

        const auto& c = j.at("Evaluation Criteria");
        for (const auto& a: c.at("Actions"))
        {
            ExpectedAction ea;
            ea.action_id = a.at("Action ID").get<std::string>();
            ea.call.requestor = player_from_string(a.at("Requestor").get<std::string>());
            ea.call.name = a.at("Name").get<std::string>();
            ea.call.args = a.value("Arguments", Json::object());
            if (a.contains("Compare Args"))
                ea.call.compare_args = a.at("Compare Args").get<std::vector<std::string>>();
            t.evaluation.expected_actions.push_back(std::move(ea));
        }
        for (const auto& a: c.at("Environment Assertions"))
            t.evaluation.env_assertions.push_back({player_from_string(a.at("Env Type").get<std::string>()),
                                                   a.at("Function").get<std::string>(), a.value("Arguments", Json::object()),
                                                   a.value("Assert Value", true)});
        t.evaluation.communication_checks = c.value("Communicate Info", std::vector<std::string> {});
        t.evaluation.nl_assertions = c.value("NL Assertions", std::vector<std::string> {});
        t.evaluation.match_actions = c.value("Match Actions", false);
        if (c.contains("Expected Hashes") && !c.at("Expected Hashes").is_null())
            t.evaluation.expected_hashes =
                WorldHashes {c.at("Expected Hashes").at("agent").get<std::string>(), c.at("Expected Hashes").at("user").get<std::string>()};
        return t;
    }
    catch (const Json::exception& e)
    {
        throw ConfigError(std::string("malformed task: ") + e.what());
    }
}

std::vector<CompositeTask> load_tasks(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open task file '" + path + "'");
    Json doc;
    try
    {
        doc = Json::parse(in);
    }
    catch (const Json::exception& e)
    {
        throw ConfigError("task file '" + path + "' is not valid JSON: " + e.what());
    }
    std::vector<CompositeTask> out;
    for (const auto& t: doc.at("tasks"))
        out.push_back(task_from_json(t));
    return out;
}

void save_tasks(const std::string& path, const std::vector<CompositeTask>& tasks)
{
    OJson doc;
    doc["tasks"] = OJson::array();
    for (const auto& t: tasks)
        doc["tasks"].push_back(task_to_json(t));
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot write task file '" + path + "'");
    out << doc.dump(2) << "\n";
}

} // namespace duet
