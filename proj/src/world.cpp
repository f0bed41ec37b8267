// SPDX-License-Identifier: Apache-2.0
#include <duet/world.hpp>

#include <array>
#include <charconv>
#include <cmath>

#include <openssl/evp.h>

namespace duet
{

std::string_view to_string(PlayerId p)
{
    return p == PlayerId::agent ? "agent" : "user";
}

PlayerId player_from_string(std::string_view s)
{
    if (s == "agent" || s == "assistant")
        return PlayerId::agent;
    if (s == "user")
        return PlayerId::user;
    throw ConfigError("unknown player '" + std::string(s) + "'");
}

std::optional<PlayerId> observer_of(const Event& e)
{
    if (!e.observation)
        return std::nullopt;
    if (std::holds_alternative<IncomingMessage>(*e.observation))
        return other(e.actor);
    return e.actor;
}

void GlobalState::append(Event e)
{
    if (e.index != history_.size())
        throw ContractViolation("event index " + std::to_string(e.index) + " does not extend history of length "
                                + std::to_string(history_.size()));
    history_.push_back(std::move(e));
}

namespace
{

void write_number(std::string& out, double v)
{
    if (!std::isfinite(v))
        throw EncodingError("non-finite number has no canonical form");
    if (v == 0.0)
        v = 0.0; // folds -0
    std::array<char, 64> buf {};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc {})
        throw EncodingError("number formatting failed");
    out.append(buf.data(), end);
}

void write_canonical(std::string& out, const Json& v)
{
    switch (v.type())
    {
        case Json::value_t::null: out += "null"; break;
        case Json::value_t::boolean: out += v.get<bool>() ? "true" : "false"; break;
        case Json::value_t::number_integer: out += std::to_string(v.get<std::int64_t>()); break;
        case Json::value_t::number_unsigned: out += std::to_string(v.get<std::uint64_t>()); break;
        case Json::value_t::number_float: write_number(out, v.get<double>()); break;
        case Json::value_t::string: out += v.dump(); break;
        case Json::value_t::array:
        {
            out += '[';
            bool first = true;
            for (const auto& item: v)
            {
                if (!first)
                    out += ',';
                first = false;
                write_canonical(out, item);
            }
            out += ']';
            break;
        }
        case Json::value_t::object:
        {
            // nlohmann::json objects are std::map backed, so iteration is key-sorted.
            out += '{';
            bool first = true;
            for (const auto& [key, item]: v.items())
            {
                if (!first)
                    out += ',';
                first = false;
                out += Json(key).dump();
                out += ':';
                write_canonical(out, item);
            }
            out += '}';
            break;
        }
        case Json::value_t::binary:
        case Json::value_t::discarded: throw EncodingError("value kind has no canonical form");
    }
}

} // namespace

std::string canonical_serialize(const Json& db)
{
    std::string out;
    write_canonical(out, db);
    return out;
}

std::string state_hash(const Json& db)
{
    const auto bytes = canonical_serialize(db);
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest {};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
        throw EncodingError("sha256 digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i)
    {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

WorldHashes world_hashes(const WorldState& w)
{
    return {state_hash(w.agent_db), state_hash(w.user_db)};
}

Json action_to_json(const Action& a)
{
    return std::visit(
        [](const auto& v) -> Json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ToolCall>)
                return {{"kind", "tool_call"}, {"payload", {{"name", v.name}, {"args", v.args}}}};
            else if constexpr (std::is_same_v<T, Message>)
                return {{"kind", "message"}, {"payload", {{"text", v.text}}}};
            else
                return {{"kind", "invalid_output"}, {"payload", {{"raw", v.raw}, {"reason", v.reason}}}};
        },
        a);
}

Action action_from_json(const Json& j)
{
    const auto kind = j.at("kind").get<std::string>();
    const auto& p = j.at("payload");
    if (kind == "tool_call")
        return ToolCall {p.at("name").get<std::string>(), p.value("args", Json::object())};
    if (kind == "message")
        return Message {p.at("text").get<std::string>()};
    if (kind == "invalid_output")
        return InvalidOutput {p.value("raw", ""), p.value("reason", "")};
    throw ConfigError("unknown action kind '" + kind + "'");
}

Json event_to_json(const Event& e)
{
    Json j = action_to_json(e.action);
    j["index"] = e.index;
    j["actor"] = to_string(e.actor);
    if (!e.observation)
        j["observation"] = nullptr;
    else if (const auto* r = std::get_if<ToolResult>(&*e.observation))
        j["observation"] = {{"type", "tool_result"}, {"payload", r->payload}, {"is_error", r->is_error}};
    else
    {
        const auto& m = std::get<IncomingMessage>(*e.observation);
        j["observation"] = {{"type", "message"}, {"from", to_string(m.from)}, {"text", m.text}};
    }
    return j;
}

Event event_from_json(const Json& j)
{
    Event e;
    e.index = j.at("index").get<std::size_t>();
    e.actor = player_from_string(j.at("actor").get<std::string>());
    e.action = action_from_json(j);
    const auto& o = j.at("observation");
    if (!o.is_null())
    {
        if (o.at("type") == "tool_result")
            e.observation = ToolResult {o.at("payload").get<std::string>(), o.at("is_error").get<bool>()};
        else
            e.observation =
                IncomingMessage {player_from_string(o.at("from").get<std::string>()), o.at("text").get<std::string>()};
    }
    return e;
}

} // namespace duet
