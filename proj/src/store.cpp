// SPDX-License-Identifier: Apache-2.0
#include <duet/store.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#ifndef DUET_VERSION
#define DUET_VERSION "0.0.0"
#endif

namespace duet
{

namespace fs = std::filesystem;

std::string_view code_version()
{
    return DUET_VERSION;
}

std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm {};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string fixture_digest(const Domain& domain)
{
    return state_hash(Json {{"agent", domain.seed.agent_db}, {"user", domain.seed.user_db}});
}

std::string tasks_digest(const std::vector<CompositeTask>& tasks)
{
    Json all = Json::array();
    for (const auto& t: tasks)
        all.push_back(Json::parse(task_to_json(t).dump()));
    return state_hash(all);
}

Json manifest_to_json(const RunManifest& m)
{
    return {
        {"schema", kManifestSchema},
        {"run_id", m.run_id},
        {"timestamp", m.timestamp},
        {"domain", m.domain},
        {"mode", to_string(m.config.mode)},
        {"config", run_config_to_json(m.config)},
        {"policies", {{"agent", m.agent_policy}, {"user", m.user_policy}}},
        {"llm", m.llm},
        {"fixture_digest", m.fixture_digest},
        {"tasks_digest", m.tasks_digest},
        {"hash_algorithm", m.hash_algorithm},
        {"code_version", m.code_version},
        {"task_ids", m.task_ids},
    };
}

RunManifest manifest_from_json(const Json& j)
{
    if (j.value("schema", "") != kManifestSchema)
        throw EncodingError("unsupported manifest schema");
    RunManifest m;
    m.run_id = j.at("run_id").get<std::string>();
    m.timestamp = j.at("timestamp").get<std::string>();
    m.domain = j.at("domain").get<std::string>();
    m.config = run_config_from_json(j.at("config"));
    m.agent_policy = j.at("policies").at("agent").get<std::string>();
    m.user_policy = j.at("policies").at("user").get<std::string>();
    m.llm = j.value("llm", Json(nullptr));
    m.fixture_digest = j.at("fixture_digest").get<std::string>();
    m.tasks_digest = j.at("tasks_digest").get<std::string>();
    m.hash_algorithm = j.at("hash_algorithm").get<std::string>();
    m.code_version = j.at("code_version").get<std::string>();
    m.task_ids = j.at("task_ids").get<std::vector<std::string>>();
    return m;
}

std::string derive_run_id(const RunManifest& m)
{
    auto j = manifest_to_json(m);
    j.erase("run_id");
    j.erase("timestamp");
    j.erase("task_ids");
    return std::string(to_string(m.config.mode)) + "-s" + std::to_string(m.config.seed) + "-" + state_hash(j).substr(0, 10);
}

namespace
{

Json init_to_json(const InitCall& c)
{
    return {{"name", c.name}, {"env", to_string(c.env)}, {"args", c.args}};
}

InitCall init_from_json(const Json& j)
{
    return {j.at("name").get<std::string>(), player_from_string(j.at("env").get<std::string>()), j.at("args")};
}

} // namespace

std::string trajectory_to_jsonl(const Trajectory& t, std::string_view run_id)
{
    Json preamble = Json::array();
    for (const auto& c: t.preamble)
        preamble.push_back(init_to_json(c));
    std::string out;
    out += Json {{"type", "header"},
                 {"schema", kTrajectorySchema},
                 {"run_id", run_id},
                 {"task_id", t.task_id},
                 {"trial", t.trial_index},
                 {"mode", to_string(t.mode)},
                 {"preamble", preamble}}
               .dump();
    out += '\n';
    for (const auto& e: t.events)
    {
        auto j = event_to_json(e);
        j["type"] = "event";
        out += j.dump();
        out += '\n';
    }
    out += Json {{"type", "footer"},
                 {"n_events", t.events.size()},
                 {"stop_reason", to_string(t.stop_reason)},
                 {"final_hashes", {{"agent", t.final_hashes.agent}, {"user", t.final_hashes.user}}}}
               .dump();
    out += '\n';
    return out;
}

Trajectory trajectory_from_jsonl(std::string_view text, std::string* run_id)
{
    std::vector<Json> lines;
    std::size_t start = 0;
    while (start < text.size())
    {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos)
            end = text.size();
        const auto line = text.substr(start, end - start);
        start = end + 1;
        if (line.empty())
            continue;
        auto j = Json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw EncodingError("trajectory line " + std::to_string(lines.size() + 1) + " is not a JSON object");
        lines.push_back(std::move(j));
    }
    if (lines.size() < 2 || lines.front().value("type", "") != "header" || lines.back().value("type", "") != "footer")
        throw EncodingError("trajectory must start with a header line and end with a footer line");
    const auto& h = lines.front();
    if (h.value("schema", "") != kTrajectorySchema)
        throw EncodingError("unsupported trajectory schema");
    try
    {
        Trajectory t;
        t.task_id = h.at("task_id").get<std::string>();
        t.trial_index = h.at("trial").get<std::size_t>();
        t.mode = mode_from_string(h.at("mode").get<std::string>());
        for (const auto& c: h.at("preamble"))
            t.preamble.push_back(init_from_json(c));
        for (std::size_t i = 1; i + 1 < lines.size(); ++i)
        {
            if (lines[i].value("type", "") != "event")
                throw EncodingError("unexpected line type at line " + std::to_string(i + 1));
            auto e = event_from_json(lines[i]);
            if (e.index != t.events.size())
                throw EncodingError("event index " + std::to_string(e.index) + " out of order");
            t.events.push_back(std::move(e));
        }
        const auto& f = lines.back();
        if (f.at("n_events").get<std::size_t>() != t.events.size())
            throw EncodingError("footer event count does not match");
        t.stop_reason = stop_reason_from_string(f.at("stop_reason").get<std::string>());
        t.final_hashes = {f.at("final_hashes").at("agent").get<std::string>(), f.at("final_hashes").at("user").get<std::string>()};
        if (run_id)
            *run_id = h.value("run_id", "");
        return t;
    }
    catch (const Json::exception& e)
    {
        throw EncodingError(std::string("malformed trajectory: ") + e.what());
    }
    catch (const ConfigError& e)
    {
        throw EncodingError(std::string("malformed trajectory: ") + e.what());
    }
}

std::string trajectory_file_name(std::size_t ordinal, std::size_t trial)
{
    char buf[48];
    std::snprintf(buf, sizeof buf, "%04zu-%zu.jsonl", ordinal, trial);
    return buf;
}

namespace
{

std::string csv_field(std::string_view s)
{
    if (s.find_first_of(",\"\n") == std::string_view::npos)
        return std::string(s);
    std::string out = "\"";
    for (char c: s)
    {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

} // namespace

std::string records_to_csv(const std::vector<TrialRecord>& records)
{
    std::string out = "task_id,trial,mode,reward,stop_reason,step_count,flagged,failed_criteria\n";
    for (const auto& r: records)
    {
        std::string failed;
        for (const auto& c: r.criteria)
            if (!c.passed)
                failed += (failed.empty() ? "" : ";") + std::string(to_string(c.kind)) + ":" + c.id;
        out += csv_field(r.task_id) + "," + std::to_string(r.trial_index) + "," + std::string(to_string(r.mode)) + ","
               + std::to_string(r.reward) + "," + std::string(to_string(r.stop_reason)) + "," + std::to_string(r.step_count)
               + "," + (r.flagged ? "1" : "0") + "," + csv_field(failed) + "\n";
    }
    return out;
}

Json passk_to_json(const PassKCurve& curve)
{
    Json values = Json::array();
    for (std::size_t k = 0; k < curve.values.size(); ++k)
        values.push_back({{"k", k + 1}, {"pass_hat_k", curve.values[k]}});
    Json tasks = Json::array();
    for (const auto& t: curve.counts)
        tasks.push_back({{"task_id", t.task_id}, {"successes", t.successes}, {"trials", t.trials}});
    return {{"curve", values}, {"tasks", tasks}};
}

std::string read_file(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in)
        throw ConfigError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, std::string_view content)
{
    if (p.has_parent_path())
        fs::create_directories(p.parent_path());
    auto tmp = p;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw ConfigError("cannot write " + p.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out)
            throw ConfigError("write failed for " + p.string());
    }
    fs::rename(tmp, p);
}

RunStore::RunStore(fs::path root): root_(std::move(root))
{
    fs::create_directories(root_ / "runs");
}

fs::path RunStore::run_dir(std::string_view run_id) const
{
    if (run_id.empty() || run_id.find('/') != std::string_view::npos || run_id.find("..") != std::string_view::npos)
        throw ConfigError("invalid run id '" + std::string(run_id) + "'");
    return root_ / "runs" / std::string(run_id);
}

fs::path RunStore::sessions_dir() const
{
    return root_ / "sessions";
}

fs::path RunStore::write_run(const RunManifest& manifest, const std::vector<CompositeTask>& tasks,
                             const std::vector<SimulationResult>& results)
{
    const auto trials = manifest.config.trials_per_task;
    if (results.size() != tasks.size() * trials)
        throw ContractViolation("result count does not match tasks x trials");
    const auto dir = run_dir(manifest.run_id);
    // create_directory returns false when the directory already exists: runs are never overwritten.
    fs::create_directories(dir.parent_path());
    if (!fs::create_directory(dir))
        throw ConfigError("run '" + manifest.run_id + "' already exists in " + root_.string());
    write_file(dir / "manifest.json", manifest_to_json(manifest).dump(2) + "\n");
    save_tasks((dir / "tasks.json").string(), tasks);
    for (std::size_t i = 0; i < results.size(); ++i)
        write_file(dir / "trajectories" / trajectory_file_name(i / trials, i % trials),
                   trajectory_to_jsonl(results[i].trajectory, manifest.run_id));
    return dir;
}

void RunStore::write_results(std::string_view run_id, const std::vector<TrialRecord>& records, const std::vector<CompositeTask>& tasks)
{
    const auto dir = run_dir(run_id);
    std::string lines;
    for (const auto& r: records)
        lines += record_to_json(r).dump() + "\n";
    write_file(dir / "results.jsonl", lines);
    write_file(dir / "results.csv", records_to_csv(records));
    write_file(dir / "passk.json", passk_to_json(pass_k_curve(records)).dump(2) + "\n");
    write_file(dir / "breakdown.json", breakdown_to_json(breakdown_tables(records, tasks)).dump(2) + "\n");
}

std::vector<std::string> RunStore::list_runs() const
{
    std::vector<std::string> out;
    for (const auto& entry: fs::directory_iterator(root_ / "runs"))
        if (entry.is_directory() && fs::exists(entry.path() / "manifest.json"))
            out.push_back(entry.path().filename().string());
    std::sort(out.begin(), out.end());
    return out;
}

RunManifest RunStore::load_manifest(std::string_view run_id) const
{
    return manifest_from_json(Json::parse(read_file(run_dir(run_id) / "manifest.json")));
}

std::vector<CompositeTask> RunStore::load_run_tasks(std::string_view run_id) const
{
    return load_tasks((run_dir(run_id) / "tasks.json").string());
}

std::vector<std::string> RunStore::list_trajectories(std::string_view run_id) const
{
    std::vector<std::string> out;
    const auto dir = run_dir(run_id) / "trajectories";
    if (!fs::exists(dir))
        return out;
    for (const auto& entry: fs::directory_iterator(dir))
        if (entry.path().extension() == ".jsonl")
            out.push_back(entry.path().filename().string());
    std::sort(out.begin(), out.end());
    return out;
}

Trajectory RunStore::load_trajectory(std::string_view run_id, std::string_view name) const
{
    if (name.find('/') != std::string_view::npos || name.find("..") != std::string_view::npos)
        throw ConfigError("invalid trajectory name");
    return trajectory_from_jsonl(read_file(run_dir(run_id) / "trajectories" / std::string(name)));
}

std::vector<TrialRecord> RunStore::load_results(std::string_view run_id) const
{
    std::vector<TrialRecord> out;
    std::istringstream in(read_file(run_dir(run_id) / "results.jsonl"));
    for (std::string line; std::getline(in, line);)
        if (!line.empty())
            out.push_back(record_from_json(Json::parse(line)));
    return out;
}

} // namespace duet
