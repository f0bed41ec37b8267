// SPDX-License-Identifier: Apache-2.0
#include <duet/serve.hpp>

#include <httplib.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

namespace duet
{

Json intervention_to_json(const InterventionRecord& r)
{
    return {
        {"session_id", r.session_id},
        {"parent_session", r.parent_session},
        {"event_index", r.event_index},
        {"replacement", r.replacement ? action_to_json(*r.replacement) : Json(nullptr)},
        {"note", r.note},
    };
}

InterventionRecord intervention_from_json(const Json& j)
{
    InterventionRecord r;
    r.session_id = j.at("session_id").get<std::string>();
    r.parent_session = j.at("parent_session").get<std::string>();
    r.event_index = j.at("event_index").get<std::size_t>();
    if (!j.at("replacement").is_null())
        r.replacement = action_from_json(j.at("replacement"));
    r.note = j.value("note", "");
    return r;
}

struct SessionManager::Session
{
    std::string id;
    std::string parent;
    SessionOptions options;
    std::unique_ptr<Simulation> sim;
    PolicyPtr opponent;
    bool closed = false;
    std::uint64_t version = 1;
    mutable std::mutex m;
    mutable std::condition_variable cv;
};

SessionManager::SessionManager(std::vector<CompositeTask> tasks, DomainPtr domain, RunConfig base, std::shared_ptr<RunStore> store)
    : tasks_(std::move(tasks)), domain_(std::move(domain)), base_(base), store_(std::move(store))
{
    base_.validate();
}

SessionManager::~SessionManager()
{
    shutdown();
}

const CompositeTask& SessionManager::task(std::string_view id) const
{
    for (const auto& t: tasks_)
        if (t.id == id)
            return t;
    throw NotFound("unknown task '" + std::string(id) + "'");
}

std::shared_ptr<SessionManager::Session> SessionManager::find(const std::string& id) const
{
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end())
        throw NotFound("unknown session '" + id + "'");
    return it->second;
}

std::shared_ptr<SessionManager::Session> SessionManager::create(const SessionOptions& options, const std::string& parent)
{
    const auto& t = task(options.task_id);
    if (options.mode == Mode::no_user && options.human_role == PlayerId::user)
        throw ConfigError("no_user mode has no user to play");

    auto s = std::make_shared<Session>();
    s->parent = parent;
    s->options = options;
    auto config = base_;
    config.mode = options.mode;
    s->sim = std::make_unique<Simulation>(t, domain_, config);

    if (options.human_role == PlayerId::user)
    {
        if (options.opponent == "oracle")
            s->opponent = oracle_agent(t, options.mode);
        else if (options.opponent == "null")
            s->opponent = null_agent();
        else
            throw ConfigError("unknown agent opponent '" + options.opponent + "'");
    }
    else if (options.mode != Mode::no_user)
    {
        if (options.opponent == "oracle")
            s->opponent = oracle_user(t);
        else if (options.opponent == "compliance")
            s->opponent = compliance_user(t);
        else
            throw ConfigError("unknown user opponent '" + options.opponent + "'");
    }
    if (s->opponent)
        s->opponent->attach_probe(s->sim->probe());

    std::lock_guard lock(mutex_);
    char buf[32];
    std::snprintf(buf, sizeof buf, "sess-%04llu", static_cast<unsigned long long>(next_id_++));
    s->id = buf;
    sessions_[s->id] = s;
    return s;
}

void SessionManager::advance(Session& s)
{
    auto& sim = *s.sim;
    while (!sim.done() && sim.current_actor() != s.options.human_role && s.opponent)
    {
        const auto actor = sim.current_actor();
        sim.submit(actor, request_decision(s.opponent, sim.view(actor), sim.config().decision_timeout));
    }
}

void SessionManager::checkpoint(const Session& s) const
{
    if (!store_)
        return;
    const auto dir = store_->sessions_dir() / s.id;
    write_file(dir / "trajectory.jsonl", trajectory_to_jsonl(s.sim->trajectory(), s.id));
    const Json meta = {
        {"session_id", s.id},
        {"parent_session", s.parent},
        {"task_id", s.options.task_id},
        {"mode", to_string(s.options.mode)},
        {"human_role", to_string(s.options.human_role)},
        {"opponent", s.options.opponent},
        {"closed", s.closed},
    };
    write_file(dir / "session.json", meta.dump(2) + "\n");
}

Json SessionManager::state_locked(const Session& s) const
{
    const auto& sim = *s.sim;
    const auto role = s.options.human_role;
    const auto view = sim.view(role);
    Json history = Json::array();
    for (const auto& e: view.visible_history)
        history.push_back(event_to_json(e));
    Json tools = Json::array();
    for (const auto& spec: view.tool_specs)
        tools.push_back(to_tool_declaration(spec));

    const auto record = compute_reward(sim.task(), sim.trajectory(), sim.env().state(), *domain_);
    Json criteria = Json::array();
    for (const auto& c: record.criteria)
        criteria.push_back({{"kind", to_string(c.kind)}, {"id", c.id}, {"passed", c.passed}, {"detail", c.detail}});

    const bool done = sim.done();
    return {
        {"session_id", s.id},
        {"parent_session", s.parent.empty() ? Json(nullptr) : Json(s.parent)},
        {"task_id", sim.task().id},
        {"mode", to_string(s.options.mode)},
        {"human_role", to_string(role)},
        {"turn", to_string(sim.current_actor())},
        {"your_turn", !done && !s.closed && sim.current_actor() == role},
        {"done", done},
        {"closed", s.closed},
        {"stop_reason", done ? Json(to_string(*sim.stop_reason())) : Json(nullptr)},
        {"steps", sim.steps()},
        {"version", s.version},
        {"view", {{"role", to_string(role)}, {"instructions", view.instructions}, {"tools", tools}, {"history", history}}},
        {"criteria", criteria},
        {"reward", record.reward},
    };
}

std::string SessionManager::start(const SessionOptions& options)
{
    auto s = create(options, "");
    std::lock_guard lock(s->m);
    advance(*s);
    checkpoint(*s);
    return s->id;
}

std::vector<std::string> SessionManager::list() const
{
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [id, _]: sessions_)
        out.push_back(id);
    return out;
}

Json SessionManager::state(const std::string& session_id) const
{
    auto s = find(session_id);
    std::lock_guard lock(s->m);
    return state_locked(*s);
}

Json SessionManager::act(const std::string& session_id, const Action& action)
{
    if (std::holds_alternative<InvalidOutput>(action))
        throw ConfigError("a human action must be a message or a tool call");
    auto s = find(session_id);
    Json state;
    {
        std::lock_guard lock(s->m);
        if (s->closed)
            throw TurnError("session is closed");
        if (s->sim->done())
            throw TurnError("session is finished");
        if (s->sim->current_actor() != s->options.human_role)
            throw TurnError("not your turn");
        s->sim->submit(s->options.human_role, action);
        advance(*s);
        ++s->version;
        checkpoint(*s);
        state = state_locked(*s);
    }
    s->cv.notify_all();
    return state;
}

std::string SessionManager::rewind(const std::string& session_id, std::size_t index, std::optional<Action> replacement, std::string note)
{
    auto src = find(session_id);
    std::vector<Event> events;
    SessionOptions options;
    {
        std::lock_guard lock(src->m);
        events = src->sim->trajectory().events;
        options = src->options;
    }

    auto fork = create(options, session_id);
    std::lock_guard lock(fork->m);
    auto& sim = *fork->sim;
    try
    {
        const auto initial = sim.trajectory().events.size();
        if (index < initial || index > events.size())
            throw ConfigError("rewind index " + std::to_string(index) + " outside [" + std::to_string(initial) + ", "
                              + std::to_string(events.size()) + "]");
        for (std::size_t i = initial; i < index; ++i)
            sim.submit(events[i].actor, events[i].action);
        if (replacement)
        {
            const auto actor = index < events.size() ? events[index].actor : sim.current_actor();
            if (sim.done() || sim.current_actor() != actor)
                throw TurnError("not your turn");
            sim.submit(actor, *replacement);
        }
        advance(*fork);
    }
    catch (...)
    {
        std::lock_guard mlock(mutex_);
        sessions_.erase(fork->id);
        throw;
    }

    InterventionRecord record {fork->id, session_id, index, std::move(replacement), std::move(note)};
    {
        std::lock_guard mlock(mutex_);
        interventions_.push_back(record);
        if (store_)
        {
            std::filesystem::create_directories(store_->sessions_dir());
            std::ofstream out(store_->sessions_dir() / "interventions.jsonl", std::ios::app);
            out << intervention_to_json(record).dump() << '\n';
        }
    }
    checkpoint(*fork);
    return fork->id;
}

Json SessionManager::end(const std::string& session_id)
{
    auto s = find(session_id);
    Json state;
    {
        std::lock_guard lock(s->m);
        if (!s->closed)
        {
            s->closed = true;
            ++s->version;
            checkpoint(*s);
        }
        state = state_locked(*s);
    }
    s->cv.notify_all();
    return state;
}

std::vector<InterventionRecord> SessionManager::interventions() const
{
    std::lock_guard lock(mutex_);
    return interventions_;
}

Trajectory SessionManager::trajectory(const std::string& session_id) const
{
    auto s = find(session_id);
    std::lock_guard lock(s->m);
    return s->sim->trajectory();
}

TrialRecord SessionManager::evaluate(const std::string& session_id) const
{
    auto s = find(session_id);
    std::lock_guard lock(s->m);
    return compute_reward(s->sim->task(), s->sim->trajectory(), s->sim->env().state(), *domain_);
}

std::uint64_t SessionManager::wait_change(const std::string& session_id, std::uint64_t seen, std::chrono::milliseconds timeout) const
{
    auto s = find(session_id);
    std::unique_lock lock(s->m);
    s->cv.wait_for(lock, timeout, [&] { return s->version > seen || s->closed || shutting_down_.load(); });
    return s->version;
}

bool SessionManager::closed(const std::string& session_id) const
{
    auto s = find(session_id);
    std::lock_guard lock(s->m);
    return s->closed;
}

void SessionManager::shutdown()
{
    shutting_down_ = true;
    std::vector<std::shared_ptr<Session>> all;
    {
        std::lock_guard lock(mutex_);
        for (const auto& [_, s]: sessions_)
            all.push_back(s);
    }
    for (const auto& s: all)
    {
        std::lock_guard lock(s->m);
        s->cv.notify_all();
    }
}

// ---------------------------------------------------------------------------

struct ApiServer::Impl
{
    std::shared_ptr<SessionManager> sessions;
    std::shared_ptr<RunStore> store;
    httplib::Server server;
    std::thread thread;
    std::atomic<bool> stopping {false};

    void routes();
};

namespace
{

void reply(httplib::Response& res, const Json& body, int status = 200)
{
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, std::string_view kind, std::string_view message)
{
    reply(res, {{"error", {{"kind", kind}, {"message", message}}}}, status);
}

template <typename F>
auto guarded(F f)
{
    return [f](const httplib::Request& req, httplib::Response& res) {
        try
        {
            f(req, res);
        }
        catch (const NotFound& e)
        {
            reply_error(res, 404, "not_found", e.what());
        }
        catch (const TurnError& e)
        {
            reply_error(res, 409, "not_your_turn", e.what());
        }
        catch (const ConfigError& e)
        {
            reply_error(res, 400, "bad_request", e.what());
        }
        catch (const EncodingError& e)
        {
            reply_error(res, 400, "bad_request", e.what());
        }
        catch (const Json::exception& e)
        {
            reply_error(res, 400, "bad_request", e.what());
        }
        catch (const std::exception& e)
        {
            reply_error(res, 500, "internal", e.what());
        }
    };
}

Json body_of(const httplib::Request& req)
{
    if (req.body.empty())
        return Json::object();
    auto j = Json::parse(req.body, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw ConfigError("request body must be a JSON object");
    return j;
}

} // namespace

void ApiServer::Impl::routes()
{
    using httplib::Request;
    using httplib::Response;

    server.Get("/api/runs", guarded([this](const Request&, Response& res) {
                   Json runs = Json::array();
                   if (store)
                       for (const auto& id: store->list_runs())
                           runs.push_back(manifest_to_json(store->load_manifest(id)));
                   reply(res, {{"runs", runs}});
               }));

    auto require_run = [this](const std::string& id) {
        if (!store || !std::filesystem::exists(store->run_dir(id) / "manifest.json"))
            throw NotFound("unknown run '" + id + "'");
    };

    server.Get(R"(/api/runs/([^/]+))", guarded([this, require_run](const Request& req, Response& res) {
                   require_run(req.matches[1]);
                   reply(res, manifest_to_json(store->load_manifest(req.matches[1].str())));
               }));

    server.Get(R"(/api/runs/([^/]+)/trajectories)", guarded([this, require_run](const Request& req, Response& res) {
                   require_run(req.matches[1]);
                   reply(res, {{"trajectories", store->list_trajectories(req.matches[1].str())}});
               }));

    server.Get(R"(/api/runs/([^/]+)/trajectories/([^/]+))", guarded([this, require_run](const Request& req, Response& res) {
                   const std::string run = req.matches[1];
                   const std::string name = req.matches[2];
                   require_run(run);
                   const auto names = store->list_trajectories(run);
                   if (std::find(names.begin(), names.end(), name) == names.end())
                       throw NotFound("unknown trajectory '" + name + "'");
                   const auto text = read_file(store->run_dir(run) / "trajectories" / name);
                   trajectory_from_jsonl(text); // validates
                   Json header, footer, events = Json::array();
                   std::istringstream in(text);
                   for (std::string line; std::getline(in, line);)
                   {
                       if (line.empty())
                           continue;
                       auto j = Json::parse(line);
                       const auto type = j.value("type", "");
                       if (type == "header")
                           header = j;
                       else if (type == "footer")
                           footer = j;
                       else
                           events.push_back(j);
                   }
                   reply(res, {{"header", header}, {"events", events}, {"footer", footer}});
               }));

    server.Get(R"(/api/runs/([^/]+)/results)", guarded([this, require_run](const Request& req, Response& res) {
                   require_run(req.matches[1]);
                   if (!std::filesystem::exists(store->run_dir(req.matches[1].str()) / "results.jsonl"))
                       throw NotFound("run has no results yet");
                   Json records = Json::array();
                   for (const auto& r: store->load_results(req.matches[1].str()))
                       records.push_back(record_to_json(r));
                   reply(res, {{"records", records}});
               }));

    server.Get("/api/tasks", guarded([this](const Request&, Response& res) {
                   Json tasks = Json::array();
                   for (const auto& t: sessions->tasks())
                       tasks.push_back({{"id", t.id},
                                        {"intent", to_string(t.intent)},
                                        {"persona", to_string(t.persona)},
                                        {"n_subtasks", t.n_subtasks()},
                                        {"n_actions", t.n_actions()}});
                   reply(res, {{"tasks", tasks}});
               }));

    server.Get(R"(/api/tasks/(.+))", guarded([this](const Request& req, Response& res) {
                   const auto id = httplib::detail::decode_url(req.matches[1].str(), false);
                   res.status = 200;
                   res.set_content(task_to_json(sessions->task(id)).dump(), "application/json");
               }));

    server.Get("/api/sessions", guarded([this](const Request&, Response& res) { reply(res, {{"sessions", sessions->list()}}); }));

    server.Post("/api/sessions", guarded([this](const Request& req, Response& res) {
                    const auto body = body_of(req);
                    SessionOptions o;
                    o.task_id = body.at("task_id").get<std::string>();
                    o.mode = mode_from_string(body.value("mode", "default"));
                    o.human_role = player_from_string(body.value("human_role", "user"));
                    o.opponent = body.value("opponent", "oracle");
                    const auto id = sessions->start(o);
                    reply(res, sessions->state(id), 201);
                }));

    server.Get(R"(/api/sessions/([^/]+))", guarded([this](const Request& req, Response& res) {
                   reply(res, sessions->state(req.matches[1]));
               }));

    server.Post(R"(/api/sessions/([^/]+)/actions)", guarded([this](const Request& req, Response& res) {
                    const auto body = body_of(req);
                    reply(res, sessions->act(req.matches[1], action_from_json(body.at("action"))));
                }));

    server.Post(R"(/api/sessions/([^/]+)/rewind)", guarded([this](const Request& req, Response& res) {
                    const auto body = body_of(req);
                    std::optional<Action> replacement;
                    if (body.contains("replacement") && !body["replacement"].is_null())
                        replacement = action_from_json(body["replacement"]);
                    const auto id = sessions->rewind(req.matches[1], body.at("index").get<std::size_t>(), std::move(replacement),
                                                     body.value("note", ""));
                    reply(res, sessions->state(id), 201);
                }));

    server.Post(R"(/api/sessions/([^/]+)/end)", guarded([this](const Request& req, Response& res) {
                    reply(res, sessions->end(req.matches[1]));
                }));

    server.Get("/api/interventions", guarded([this](const Request&, Response& res) {
                   Json all = Json::array();
                   for (const auto& r: sessions->interventions())
                       all.push_back(intervention_to_json(r));
                   reply(res, {{"interventions", all}});
               }));

    server.Get(R"(/api/sessions/([^/]+)/events)", guarded([this](const Request& req, Response& res) {
                   const std::string id = req.matches[1];
                   (void)sessions->state(id); // unknown session -> 404 before streaming
                   res.set_header("Cache-Control", "no-cache");
                   auto seen = std::make_shared<std::uint64_t>(0);
                   auto idle = std::make_shared<int>(0);
                   auto mgr = sessions;
                   res.set_chunked_content_provider("text/event-stream", [this, mgr, id, seen, idle](std::size_t, httplib::DataSink& sink) {
                       if (stopping)
                       {
                           sink.done();
                           return true;
                       }
                       const auto version = mgr->wait_change(id, *seen, std::chrono::milliseconds(250));
                       if (version > *seen)
                       {
                           const auto state = mgr->state(id);
                           const auto frame = "event: state\ndata: " + state.dump() + "\n\n";
                           if (!sink.write(frame.data(), frame.size()))
                               return false;
                           *seen = state.at("version").get<std::uint64_t>();
                           *idle = 0;
                           if (state.at("closed").get<bool>())
                               sink.done();
                           return true;
                       }
                       if (++*idle >= 60)
                       {
                           *idle = 0;
                           static constexpr std::string_view ping = ": keep-alive\n\n";
                           return sink.write(ping.data(), ping.size());
                       }
                       return true;
                   });
               }));
}

ApiServer::ApiServer(std::shared_ptr<SessionManager> sessions, std::shared_ptr<RunStore> store): impl_(std::make_unique<Impl>())
{
    impl_->sessions = std::move(sessions);
    impl_->store = std::move(store);
    impl_->routes();
}

ApiServer::~ApiServer()
{
    stop();
}

int ApiServer::start(const std::string& host, int port)
{
    int bound = port;
    if (port == 0)
        bound = impl_->server.bind_to_any_port(host);
    else if (!impl_->server.bind_to_port(host, port))
        bound = -1;
    if (bound <= 0)
        throw ConfigError("cannot bind " + host + ":" + std::to_string(port));
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return bound;
}

void ApiServer::listen(const std::string& host, int port)
{
    if (!impl_->server.listen(host, port))
        throw ConfigError("cannot listen on " + host + ":" + std::to_string(port));
}

void ApiServer::stop()
{
    if (!impl_)
        return;
    impl_->stopping = true;
    impl_->server.stop();
    if (impl_->thread.joinable())
        impl_->thread.join();
}

} // namespace duet
