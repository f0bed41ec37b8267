// SPDX-License-Identifier: Apache-2.0
#include <duet/cli.hpp>
#include <duet/serve.hpp>
#include <duet/telecom.hpp>

#include <CLI11.hpp>

#include <csignal>
#include <iostream>

namespace duet
{

namespace fs = std::filesystem;

DomainPtr domain_by_name(std::string_view name)
{
    if (name == "telecom")
        return telecom::make_domain();
    throw ConfigError("unknown domain '" + std::string(name) + "'");
}

namespace
{

class Mismatch : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

class Failed : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

void print_json(const Json& j)
{
    std::cout << j.dump(2) << std::endl;
}

// Options shared by several subcommands; empty strings mean "not given".
struct Common
{
    std::string config;
    std::string domain;
    std::string tasks;
    std::string out;
    std::string mode;
    std::optional<std::size_t> trials;
    std::optional<std::uint64_t> seed;
};

struct Settings
{
    std::string domain = "telecom";
    RunConfig run;
    PolicyChoice policies;
    std::string tasks;
    std::string out = "duet-store";
};

Settings resolve(const Common& c, const std::string& agent, const std::string& user)
{
    Settings s;
    if (!c.config.empty())
    {
        const auto j = Json::parse(read_file(c.config), nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw ConfigError("config file " + c.config + " is not a JSON object");
        s.domain = j.value("domain", s.domain);
        if (j.contains("run"))
            s.run = run_config_from_json(j["run"]);
        if (j.contains("policies"))
        {
            s.policies.agent = j["policies"].value("agent", s.policies.agent);
            s.policies.user = j["policies"].value("user", s.policies.user);
        }
        if (j.contains("llm"))
            s.policies.llm = llm_config_from_json(j["llm"]);
        s.tasks = j.value("tasks", s.tasks);
        s.out = j.value("out", s.out);
    }
    if (!c.domain.empty())
        s.domain = c.domain;
    if (!c.mode.empty())
        s.run.mode = mode_from_string(c.mode);
    if (c.trials)
        s.run.trials_per_task = *c.trials;
    if (c.seed)
        s.run.seed = *c.seed;
    if (!c.tasks.empty())
        s.tasks = c.tasks;
    if (!c.out.empty())
        s.out = c.out;
    if (!agent.empty())
        s.policies.agent = agent;
    if (!user.empty())
        s.policies.user = user;
    s.run.validate();
    return s;
}

std::vector<CompositeTask> tasks_or_default(const Settings& s, bool universe)
{
    if (!s.tasks.empty())
        return load_tasks(s.tasks);
    if (s.domain != "telecom")
        throw ConfigError("no built-in tasks for domain '" + s.domain + "'");
    return universe ? telecom::compose_all() : telecom::default_suite(0);
}

void write_or_print(const std::string& path, const std::string& content)
{
    if (path.empty() || path == "-")
        std::cout << content;
    else
        write_file(path, content);
}

const CompositeTask& find_task(const std::vector<CompositeTask>& tasks, const std::string& id)
{
    for (const auto& t: tasks)
        if (t.id == id)
            return t;
    throw ConfigError("task '" + id + "' not found");
}

struct ReplayOutcome
{
    GlobalState state;
    bool hashes_match = false;
    bool events_match = false;
};

ReplayOutcome replay_checked(const CompositeTask& task, const Trajectory& t, const DomainPtr& domain)
{
    ReplayOutcome o;
    o.state = replay(task, t, domain);
    o.hashes_match = world_hashes(o.state.world()) == t.final_hashes;
    o.events_match = o.state.history() == t.events;
    return o;
}

std::vector<TrialRecord> evaluate_run(const RunStore& store, const std::string& run_id, const DomainPtr& domain,
                                      std::optional<bool> match_actions, std::size_t& mismatches)
{
    const auto tasks = store.load_run_tasks(run_id);
    std::vector<TrialRecord> records;
    EvalOptions options;
    options.match_actions = match_actions;
    for (const auto& name: store.list_trajectories(run_id))
    {
        const auto t = store.load_trajectory(run_id, name);
        const auto& task = find_task(tasks, t.task_id);
        const auto o = replay_checked(task, t, domain);
        auto r = compute_reward(task, t, o.state, *domain, options);
        if (!o.hashes_match || !o.events_match)
        {
            ++mismatches;
            r.flagged = true;
        }
        records.push_back(std::move(r));
    }
    return records;
}

Json passk_summary(const std::vector<TrialRecord>& records)
{
    const auto curve = pass_k_curve(records);
    Json out = Json::array();
    for (std::size_t k = 0; k < curve.values.size(); ++k)
        out.push_back({{"k", k + 1}, {"pass_hat_k", curve.values[k]}});
    return out;
}

std::string breakdown_csv(const std::vector<BreakdownTable>& tables)
{
    std::size_t kmax = 0;
    for (const auto& t: tables)
        for (const auto& r: t.rows)
            kmax = std::max(kmax, r.pass_k.size());
    std::string out = "dimension,mode,bin,n_tasks,proportion";
    for (std::size_t k = 1; k <= kmax; ++k)
        out += ",pass^" + std::to_string(k);
    out += "\n";
    for (const auto& t: tables)
        for (const auto& r: t.rows)
        {
            out += t.dimension + "," + r.mode + "," + r.bin + "," + std::to_string(r.n_tasks) + "," + std::to_string(r.proportion);
            for (std::size_t k = 0; k < kmax; ++k)
                out += "," + (k < r.pass_k.size() ? std::to_string(r.pass_k[k]) : std::string());
            out += "\n";
        }
    return out;
}

ApiServer* g_server = nullptr;

extern "C" void on_signal(int)
{
    if (g_server)
        g_server->stop();
}

} // namespace

int run_cli(int argc, char** argv)
{
    CLI::App app {"Dual-control agent evaluation engine"};
    app.require_subcommand(1);
    Common c;
    std::string agent, user, run_id, format, file, host = "127.0.0.1", trajectory_path;
    std::optional<std::size_t> max_steps;
    std::size_t min_subtasks = 1;
    int port = 8080;
    bool match_actions = false, serial = false;

    auto common = [&](CLI::App* sub, bool run_options) {
        sub->add_option("--config", c.config, "JSON configuration file");
        sub->add_option("--domain", c.domain, "Domain name (telecom)");
        sub->add_option("--tasks", c.tasks, "Task file ({\"tasks\": [...]})");
        sub->add_option("--out", c.out, "Output file or store root");
        sub->add_option("--seed", c.seed, "Random seed");
        if (run_options)
        {
            sub->add_option("--mode", c.mode, "default | no_user | ground_truth");
            sub->add_option("--trials", c.trials, "Trials per task");
        }
    };

    auto* generate = app.add_subcommand("generate", "Compose the full task universe");
    common(generate, false);
    generate->add_option("--min-subtasks", min_subtasks, "Smallest composite size");

    auto* verify = app.add_subcommand("verify", "Verify tasks; nonzero exit on any failure");
    common(verify, false);

    auto* sample = app.add_subcommand("sample", "Sample the balanced suite and assign personas");
    common(sample, false);

    auto* run = app.add_subcommand("run", "Run trials and store trajectories with a manifest");
    common(run, true);
    run->add_option("--agent,--policy", agent, "Agent policy: oracle | null | llm");
    run->add_option("--user", user, "User policy: oracle | compliance | hesitant | llm");
    run->add_option("--max-steps", max_steps, "Step cap per simulation");
    run->add_option("--run-id", run_id, "Run id (default: derived from the configuration)");
    run->add_flag("--serial", serial, "Run trials on one thread");

    auto* evaluate = app.add_subcommand("evaluate", "Recompute rewards and pass^k for a stored run");
    common(evaluate, false);
    evaluate->add_option("--run", run_id, "Run id")->required();
    evaluate->add_flag("--match-actions", match_actions, "Also require expected actions");

    auto* replay_cmd = app.add_subcommand("replay", "Re-execute stored trajectories and confirm final hashes");
    common(replay_cmd, false);
    replay_cmd->add_option("--run", run_id, "Run id (replays all of its trajectories)");
    replay_cmd->add_option("trajectory", trajectory_path, "Trajectory file inside a run directory");

    auto* export_cmd = app.add_subcommand("export", "Write breakdown tables");
    common(export_cmd, false);
    export_cmd->add_option("--run", run_id, "Run id")->required();
    export_cmd->add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
    export_cmd->add_option("--file", file, "Output file (default stdout)");

    auto* serve = app.add_subcommand("serve", "Start the HTTP API");
    common(serve, false);
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--port", port, "Port");

    const char* command = "duet";
    try
    {
        app.parse(argc, argv);
        command = app.get_subcommands().front()->get_name().c_str();
        auto s = resolve(c, agent, user);
        if (max_steps)
            s.run.max_steps = *max_steps;
        s.run.validate();

        if (generate->parsed())
        {
            if (s.domain != "telecom")
                throw ConfigError("no task generator for domain '" + s.domain + "'");
            const auto tasks = telecom::compose_all(min_subtasks);
            save_tasks(s.out == "duet-store" ? "tasks.json" : s.out, tasks);
            print_json({{"tasks", tasks.size()}});
            return kExitOk;
        }

        const auto domain = domain_by_name(s.domain);

        if (verify->parsed())
        {
            const auto tasks = tasks_or_default(s, true);
            const auto reports = verify_all(tasks, domain);
            Json all = Json::array();
            std::size_t failed = 0;
            for (const auto& r: reports)
            {
                failed += r.verdict == Verdict::fail ? 1 : 0;
                all.push_back({{"task_id", r.task_id},
                               {"verdict", r.verdict == Verdict::pass ? "pass" : "fail"},
                               {"unsolved_after_init", r.unsolved_after_init},
                               {"prefix_results", r.prefix_results},
                               {"solved_after_all", r.solved_after_all},
                               {"diagnostic", r.diagnostic}});
            }
            if (!c.out.empty())
                write_file(c.out, Json {{"reports", all}}.dump(2) + "\n");
            print_json({{"tasks", reports.size()}, {"passed", reports.size() - failed}, {"failed", failed}});
            if (failed)
                throw Failed(std::to_string(failed) + " task(s) failed verification");
            return kExitOk;
        }

        if (sample->parsed())
        {
            const auto universe = tasks_or_default(s, true);
            const auto suite = assign_personas(sample_balanced(universe, telecom::suite_quotas(), s.run.seed), s.run.seed);
            save_tasks(s.out == "duet-store" ? "suite.json" : s.out, suite);
            print_json({{"tasks", suite.size()}});
            return kExitOk;
        }

        if (run->parsed())
        {
            const auto tasks = tasks_or_default(s, false);
            RunStore store(s.out);
            const auto factory = make_policy_factory(s.policies, s.run.mode);
            const auto results = serial ? run_suite_serial(tasks, factory, domain, s.run) : run_suite(tasks, factory, domain, s.run);

            RunManifest m;
            m.timestamp = utc_timestamp();
            m.domain = s.domain;
            m.config = s.run;
            m.agent_policy = s.policies.agent;
            m.user_policy = s.run.mode == Mode::no_user ? "none" : s.policies.user;
            if (s.policies.llm)
                m.llm = llm_config_to_json(*s.policies.llm);
            m.fixture_digest = fixture_digest(*domain);
            m.tasks_digest = tasks_digest(tasks);
            m.code_version = std::string(code_version());
            for (const auto& t: tasks)
                m.task_ids.push_back(t.id);
            m.run_id = run_id.empty() ? derive_run_id(m) : run_id;
            const auto dir = store.write_run(m, tasks, results);

            std::vector<TrialRecord> records;
            for (std::size_t i = 0; i < results.size(); ++i)
                records.push_back(compute_reward(tasks[i / s.run.trials_per_task], results[i].trajectory, results[i].final_state, *domain));
            store.write_results(m.run_id, records, tasks);
            std::size_t rewarded = 0;
            for (const auto& r: records)
                rewarded += static_cast<std::size_t>(r.reward);
            print_json({{"run_id", m.run_id}, {"dir", dir.string()}, {"trials", records.size()}, {"rewarded", rewarded}, {"pass_k", passk_summary(records)}});
            return kExitOk;
        }

        if (evaluate->parsed())
        {
            RunStore store(s.out);
            std::size_t mismatches = 0;
            const auto records = evaluate_run(store, run_id, domain, match_actions ? std::optional<bool>(true) : std::nullopt, mismatches);
            store.write_results(run_id, records, store.load_run_tasks(run_id));
            print_json({{"run_id", run_id}, {"trials", records.size()}, {"replay_mismatches", mismatches}, {"pass_k", passk_summary(records)}});
            if (mismatches)
                throw Mismatch(std::to_string(mismatches) + " trajectory(ies) do not replay to their recorded state");
            return kExitOk;
        }

        if (replay_cmd->parsed())
        {
            std::vector<std::pair<std::string, Trajectory>> items;
            std::vector<CompositeTask> tasks;
            if (!trajectory_path.empty())
            {
                const fs::path p(trajectory_path);
                const auto run_dir = p.parent_path().parent_path();
                tasks = !c.tasks.empty() ? load_tasks(c.tasks) : load_tasks((run_dir / "tasks.json").string());
                items.emplace_back(p.filename().string(), trajectory_from_jsonl(read_file(p)));
            }
            else if (!run_id.empty())
            {
                RunStore store(s.out);
                tasks = store.load_run_tasks(run_id);
                for (const auto& name: store.list_trajectories(run_id))
                    items.emplace_back(name, store.load_trajectory(run_id, name));
            }
            else
                throw ConfigError("replay needs a trajectory file or --run");

            Json report = Json::array();
            std::size_t mismatches = 0;
            for (const auto& [name, t]: items)
            {
                const auto o = replay_checked(find_task(tasks, t.task_id), t, domain);
                const auto actual = world_hashes(o.state.world());
                const bool ok = o.hashes_match && o.events_match;
                mismatches += ok ? 0 : 1;
                report.push_back({{"trajectory", name},
                                  {"ok", ok},
                                  {"hashes_match", o.hashes_match},
                                  {"events_match", o.events_match},
                                  {"recorded", {{"agent", t.final_hashes.agent}, {"user", t.final_hashes.user}}},
                                  {"replayed", {{"agent", actual.agent}, {"user", actual.user}}}});
            }
            print_json({{"replayed", items.size()}, {"mismatches", mismatches}, {"trajectories", report}});
            if (mismatches)
                throw Mismatch("hash mismatch in " + std::to_string(mismatches) + " trajectory(ies)");
            return kExitOk;
        }

        if (export_cmd->parsed())
        {
            RunStore store(s.out);
            const auto tables = breakdown_tables(store.load_results(run_id), store.load_run_tasks(run_id));
            if (format == "json")
                write_or_print(file, breakdown_to_json(tables).dump(2) + "\n");
            else
                write_or_print(file, breakdown_csv(tables));
            return kExitOk;
        }

        if (serve->parsed())
        {
            auto store = std::make_shared<RunStore>(s.out);
            auto sessions = std::make_shared<SessionManager>(tasks_or_default(s, false), domain, s.run, store);
            ApiServer server(sessions, store);
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cerr << "serving on http://" << host << ":" << port << std::endl;
            server.listen(host, port);
            g_server = nullptr;
            sessions->shutdown();
            return kExitOk;
        }
        return kExitConfig;
    }
    catch (const CLI::ParseError& e)
    {
        return app.exit(e);
    }
    catch (const Failed& e)
    {
        std::cerr << Json {{"error", {{"command", command}, {"kind", "verification_failed"}, {"message", e.what()}}}}.dump() << std::endl;
        return kExitFailed;
    }
    catch (const Mismatch& e)
    {
        std::cerr << Json {{"error", {{"command", command}, {"kind", "replay_mismatch"}, {"message", e.what()}}}}.dump() << std::endl;
        return kExitMismatch;
    }
    catch (const std::exception& e)
    {
        std::cerr << Json {{"error", {{"command", command}, {"kind", "config"}, {"message", e.what()}}}}.dump() << std::endl;
        return kExitConfig;
    }
}

} // namespace duet
