// SPDX-License-Identifier: Apache-2.0
#include <duet/evaluation.hpp>

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

namespace duet
{

std::string_view to_string(CriterionKind k)
{
    switch (k)
    {
        case CriterionKind::db_check: return "db_check";
        case CriterionKind::env_assertion: return "env_assertion";
        case CriterionKind::action_match: return "action_match";
        case CriterionKind::communication: return "communication";
        case CriterionKind::nl_assertion: return "nl_assertion";
    }
    return "env_assertion";
}

CriterionKind criterion_kind_from_string(std::string_view s)
{
    for (auto k: {CriterionKind::db_check, CriterionKind::env_assertion, CriterionKind::action_match,
                  CriterionKind::communication, CriterionKind::nl_assertion})
        if (to_string(k) == s)
            return k;
    throw ConfigError("unknown criterion kind '" + std::string(s) + "'");
}

Json record_to_json(const TrialRecord& r)
{
    Json criteria = Json::array();
    for (const auto& c: r.criteria)
        criteria.push_back({{"kind", to_string(c.kind)},
                            {"id", c.id},
                            {"passed", c.passed},
                            {"detail", c.detail},
                            {"errored", c.errored}});
    return {
        {"task_id", r.task_id},
        {"trial", r.trial_index},
        {"mode", to_string(r.mode)},
        {"reward", r.reward},
        {"criteria", criteria},
        {"stop_reason", to_string(r.stop_reason)},
        {"step_count", r.step_count},
        {"flagged", r.flagged},
    };
}

TrialRecord record_from_json(const Json& j)
{
    TrialRecord r;
    r.task_id = j.at("task_id").get<std::string>();
    r.trial_index = j.at("trial").get<std::size_t>();
    r.mode = mode_from_string(j.at("mode").get<std::string>());
    r.reward = j.at("reward").get<int>();
    for (const auto& c: j.at("criteria"))
        r.criteria.push_back({criterion_kind_from_string(c.at("kind").get<std::string>()), c.at("id").get<std::string>(),
                              c.at("passed").get<bool>(), c.at("detail").get<std::string>(), c.value("errored", false)});
    r.stop_reason = stop_reason_from_string(j.at("stop_reason").get<std::string>());
    r.step_count = j.at("step_count").get<std::size_t>();
    r.flagged = j.value("flagged", false);
    return r;
}

Judge constant_judge(bool verdict)
{
    return {verdict ? "stub:true" : "stub:false",
            [verdict](const std::string&, const std::string&) -> std::optional<bool> { return verdict; }};
}

std::vector<CriterionResult> check_env_assertions(const GlobalState& final_state, const std::vector<AssertionCall>& assertions,
                                                  const Domain& domain)
{
    std::vector<CriterionResult> out;
    for (const auto& a: assertions)
    {
        auto it = domain.assertions.find(a.function);
        if (it == domain.assertions.end())
            throw ConfigError("unknown assertion function '" + a.function + "'");
        const bool value = it->second(final_state, a.args);
        out.push_back({CriterionKind::env_assertion, a.function + a.args.dump(), value == a.expected,
                       "got " + std::string(value ? "true" : "false") + ", expected " + (a.expected ? "true" : "false")});
    }
    return out;
}

bool action_matches(const Event& event, const SolutionCall& expected)
{
    const auto* call = std::get_if<ToolCall>(&event.action);
    if (!call || event.actor != expected.requestor || call->name != expected.name)
        return false;
    for (const auto& [key, value]: call->args.items())
        if (!expected.args.contains(key))
            return false;
    if (expected.compare_args)
    {
        for (const auto& key: *expected.compare_args)
            if (!call->args.contains(key) || !expected.args.contains(key) || call->args.at(key) != expected.args.at(key))
                return false;
        return true;
    }
    for (const auto& [key, value]: expected.args.items())
        if (!call->args.contains(key) || call->args.at(key) != value)
            return false;
    return true;
}

CriterionResult check_actions(const std::vector<Event>& events, const std::vector<ExpectedAction>& expected)
{
    std::vector<std::string> missing;
    for (const auto& e: expected)
        if (std::none_of(events.begin(), events.end(), [&](const Event& ev) { return action_matches(ev, e.call); }))
            missing.push_back(e.action_id);
    CriterionResult r {CriterionKind::action_match, "actions", missing.empty(), {}};
    if (!missing.empty())
    {
        r.detail = "missing:";
        for (const auto& m: missing)
            r.detail += " " + m;
    }
    return r;
}

CriterionResult check_db(const WorldState& final_world, const std::optional<WorldHashes>& expected)
{
    if (!expected)
        throw ConfigError("db_check requires expected hashes");
    const auto actual = world_hashes(final_world);
    const bool ok = actual == *expected;
    return {CriterionKind::db_check, "db", ok, ok ? "" : "agent " + actual.agent + ", user " + actual.user};
}

std::string normalize_info(std::string_view text)
{
    std::string out;
    bool pending_space = false;
    for (std::size_t i = 0; i < text.size(); ++i)
    {
        const auto c = static_cast<unsigned char>(text[i]);
        if (c == ',' || c == '$')
            continue;
        // Multi-byte currency signs: euro (E2 82 AC), pound (C2 A3), yen (C2 A5).
        if (c == 0xE2 && i + 2 < text.size() && static_cast<unsigned char>(text[i + 1]) == 0x82
            && static_cast<unsigned char>(text[i + 2]) == 0xAC)
        {
            i += 2;
            continue;
        }
        if (c == 0xC2 && i + 1 < text.size()
            && (static_cast<unsigned char>(text[i + 1]) == 0xA3 || static_cast<unsigned char>(text[i + 1]) == 0xA5))
        {
            ++i;
            continue;
        }
        if (std::isspace(c))
        {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space)
            out += ' ';
        pending_space = false;
        out += static_cast<char>(std::tolower(c));
    }
    return out;
}

CriterionResult check_communication(const std::vector<Event>& events, const std::vector<std::string>& required)
{
    std::string said;
    for (const auto& e: events)
        if (const auto* m = std::get_if<Message>(&e.action); m && e.actor == PlayerId::agent)
            said += m->text + "\n";
    said = normalize_info(said);
    std::vector<std::string> missing;
    for (const auto& info: required)
        if (said.find(normalize_info(info)) == std::string::npos)
            missing.push_back(info);
    CriterionResult r {CriterionKind::communication, "communicate_info", missing.empty(), {}};
    for (const auto& m: missing)
        r.detail += (r.detail.empty() ? "missing: " : ", ") + m;
    return r;
}

std::string render_transcript(const std::vector<Event>& events)
{
    std::string out;
    for (const auto& e: events)
    {
        const std::string who(to_string(e.actor));
        if (const auto* m = std::get_if<Message>(&e.action))
            out += who + ": " + m->text + "\n";
        else if (const auto* c = std::get_if<ToolCall>(&e.action))
        {
            out += who + " calls " + c->name + c->args.dump() + "\n";
            if (e.observation)
                if (const auto* r = std::get_if<ToolResult>(&*e.observation))
                    out += "tool: " + r->payload + "\n";
        }
    }
    return out;
}

std::vector<CriterionResult> check_nl_assertions(const std::vector<Event>& events, const std::vector<std::string>& statements,
                                                 const Judge* judge)
{
    std::vector<CriterionResult> out;
    if (statements.empty())
        return out;
    const auto transcript = render_transcript(events);
    for (const auto& s: statements)
    {
        std::optional<bool> verdict;
        if (judge && judge->fn)
            verdict = judge->fn(transcript, s);
        if (!verdict)
            out.push_back({CriterionKind::nl_assertion, s, false, "judge unavailable", true});
        else
            out.push_back({CriterionKind::nl_assertion, s, *verdict, "judge " + judge->id});
    }
    return out;
}

TrialRecord compute_reward(const CompositeTask& task, const Trajectory& trajectory, const GlobalState& final_state,
                           const Domain& domain, const EvalOptions& options)
{
    TrialRecord r;
    r.task_id = task.id;
    r.trial_index = trajectory.trial_index;
    r.mode = trajectory.mode;
    r.stop_reason = trajectory.stop_reason;
    r.step_count = trajectory.events.size();

    const auto& ev = task.evaluation;
    const auto& events = trajectory.events;
    auto& c = r.criteria;
    if (ev.expected_hashes)
        c.push_back(check_db(final_state.world(), ev.expected_hashes));
    for (auto& a: check_env_assertions(final_state, ev.env_assertions, domain))
        c.push_back(std::move(a));
    if (options.match_actions.value_or(ev.match_actions))
        c.push_back(check_actions(events, ev.expected_actions));
    if (!ev.communication_checks.empty())
        c.push_back(check_communication(events, ev.communication_checks));
    for (auto& n: check_nl_assertions(events, ev.nl_assertions, options.judge))
        c.push_back(std::move(n));

    r.flagged = std::any_of(c.begin(), c.end(), [](const CriterionResult& x) { return x.errored; });
    r.reward = std::all_of(c.begin(), c.end(), [](const CriterionResult& x) { return x.passed && !x.errored; }) ? 1 : 0;
    return r;
}

double pass_hat_k_task(std::size_t c, std::size_t n, std::size_t k)
{
    if (k == 0 || k > n)
        throw std::invalid_argument("pass^k needs 1 <= k <= n (k=" + std::to_string(k) + ", n=" + std::to_string(n) + ")");
    if (c > n)
        throw std::invalid_argument("successes exceed trials");
    if (c < k)
        return 0.0;
    // C(c,k)/C(n,k) = prod_{i<k} (c-i)/(n-i)
    double v = 1.0;
    for (std::size_t i = 0; i < k; ++i)
        v *= static_cast<double>(c - i) / static_cast<double>(n - i);
    return v;
}

double pass_hat_k(const std::vector<TaskCounts>& counts, std::size_t k)
{
    if (counts.empty())
        throw std::invalid_argument("pass^k over zero tasks");
    double sum = 0.0;
    for (const auto& t: counts)
        sum += pass_hat_k_task(t.successes, t.trials, k);
    return sum / static_cast<double>(counts.size());
}

std::vector<TaskCounts> count_successes(const std::vector<TrialRecord>& records)
{
    std::vector<TaskCounts> out;
    std::map<std::string, std::size_t> index;
    for (const auto& r: records)
    {
        auto [it, inserted] = index.try_emplace(r.task_id, out.size());
        if (inserted)
            out.push_back({r.task_id, 0, 0});
        auto& t = out[it->second];
        ++t.trials;
        t.successes += r.reward == 1 ? 1 : 0;
    }
    return out;
}

PassKCurve pass_k_curve(const std::vector<TrialRecord>& records)
{
    PassKCurve curve;
    curve.counts = count_successes(records);
    if (curve.counts.empty())
        return curve;
    std::size_t kmax = SIZE_MAX;
    for (const auto& t: curve.counts)
        kmax = std::min(kmax, t.trials);
    for (std::size_t k = 1; k <= kmax; ++k)
        curve.values.push_back(pass_hat_k(curve.counts, k));
    return curve;
}

std::string action_bin(const CompositeTask& task)
{
    if (task.has_transfer())
        return "transfer";
    const auto n = task.n_actions();
    if (n <= 2)
        return "1-2";
    if (n <= 4)
        return "3-4";
    if (n <= 7)
        return "5-7";
    return "8+";
}

std::vector<BreakdownTable> breakdown_tables(const std::vector<TrialRecord>& records, const std::vector<CompositeTask>& tasks)
{
    std::map<std::string, const CompositeTask*> by_id;
    for (const auto& t: tasks)
        by_id[t.id] = &t;

    // mode -> records
    std::map<std::string, std::vector<const TrialRecord*>> per_mode;
    for (const auto& r: records)
    {
        if (!by_id.contains(r.task_id))
            throw ConfigError("record for unknown task '" + r.task_id + "'");
        per_mode[std::string(to_string(r.mode))].push_back(&r);
    }

    using Key = std::function<std::string(const CompositeTask&)>;
    struct Dimension
    {
        std::string name;
        Key key;
        std::vector<std::string> bins; // fixed bins emitted even when empty
    };
    std::vector<std::string> intents, personas, action_bins(std::begin(kActionBins), std::end(kActionBins));
    for (auto i: kAllIntents)
        intents.emplace_back(to_string(i));
    for (auto p: kAllPersonas)
        personas.emplace_back(to_string(p));
    const std::vector<Dimension> dims {
        {"mode", [](const CompositeTask&) { return std::string("all"); }, {"all"}},
        {"intent", [](const CompositeTask& t) { return std::string(to_string(t.intent)); }, intents},
        {"persona", [](const CompositeTask& t) { return std::string(to_string(t.persona)); }, personas},
        {"action_bin", [](const CompositeTask& t) { return action_bin(t); }, action_bins},
        {"subtask_count", [](const CompositeTask& t) { return std::to_string(t.n_subtasks()); }, {}},
    };

    std::vector<BreakdownTable> out;
    for (const auto& dim: dims)
    {
        BreakdownTable table {dim.name, {}};
        for (const auto& [mode, recs]: per_mode)
        {
            std::map<std::string, std::vector<TrialRecord>> binned;
            std::set<std::string> mode_tasks;
            for (const auto* r: recs)
            {
                binned[dim.key(*by_id.at(r->task_id))].push_back(*r);
                mode_tasks.insert(r->task_id);
            }
            std::vector<std::string> bins = dim.bins;
            for (const auto& [bin, _]: binned)
                if (std::find(bins.begin(), bins.end(), bin) == bins.end())
                    bins.push_back(bin);
            if (dim.name == "subtask_count")
                std::sort(bins.begin(), bins.end(), [](const auto& a, const auto& b) { return std::stoul(a) < std::stoul(b); });
            for (const auto& bin: bins)
            {
                BreakdownRow row {mode, bin, 0, 0.0, {}};
                if (auto it = binned.find(bin); it != binned.end())
                {
                    auto curve = pass_k_curve(it->second);
                    row.n_tasks = curve.counts.size();
                    row.pass_k = std::move(curve.values);
                }
                row.proportion = mode_tasks.empty() ? 0.0 : static_cast<double>(row.n_tasks) / static_cast<double>(mode_tasks.size());
                table.rows.push_back(std::move(row));
            }
        }
        out.push_back(std::move(table));
    }
    return out;
}

Json breakdown_to_json(const std::vector<BreakdownTable>& tables)
{
    Json out = Json::object();
    for (const auto& t: tables)
    {
        Json rows = Json::array();
        for (const auto& r: t.rows)
            rows.push_back({{"mode", r.mode}, {"bin", r.bin}, {"n_tasks", r.n_tasks}, {"proportion", r.proportion}, {"pass_k", r.pass_k}});
        out[t.dimension] = rows;
    }
    return out;
}

} // namespace duet
