// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <duet/tasks.hpp>

#include <map>
#include <random>

namespace duet::testing
{

// Plausible and implausible values per parameter name, so fuzzing reaches both success and error paths.
inline Json fuzz_value(const ParamSpec& p, std::mt19937_64& rng)
{
    static const std::map<std::string, std::vector<Json>> pools {
        {"phone_number", {"555-123-2002", "555-123-2001", "555-987-6543", "555-000-0000", ""}},
        {"customer_id", {"C1001", "C1002", "C1003", "C1004", "C9999"}},
        {"full_name", {"John Smith", "Jane Doe", ""}},
        {"date_of_birth", {"1985-06-15", "1990-01-01"}},
        {"id", {"C1001", "L1002", "D1002", "P1002", "B1003", "B1006", "Z42", ""}},
        {"line_id", {"L1001", "L1002", "L1003", "L1006", "L9999"}},
        {"action", {"resume", "suspend", "roaming", "refuel", "teleport"}},
        {"app_name", {"messaging", "camera", "browser", "unknown_app"}},
        {"permission", {"sms", "storage", "camera", "location"}},
        {"mode", {"4g_5g_preferred", "4g_only", "3g_only", "2g_only"}},
        {"pin", {"1234", "0000"}},
        {"ssid", {"HomeNetwork", "Cafe", ""}},
        {"reason", {"lost phone", ""}},
        {"summary", {"customer needs billing help"}},
    };
    if (auto it = pools.find(p.name); it != pools.end())
        return it->second[rng() % it->second.size()];
    switch (p.type)
    {
        case ParamType::number: return static_cast<double>(static_cast<int>(rng() % 9) - 2) / 2.0;
        case ParamType::integer: return static_cast<int>(rng() % 9) - 2;
        case ParamType::boolean: return rng() % 2 == 0;
        case ParamType::string: break;
    }
    return "x";
}

inline Json fuzz_args(const ToolSpec& spec, std::mt19937_64& rng)
{
    Json args = Json::object();
    for (const auto& p: spec.params)
    {
        const auto roll = rng() % 10;
        if (roll == 0)
            continue; // missing
        if (roll == 1)
        {
            args[p.name] = Json::array({1, 2}); // wrong type
            continue;
        }
        args[p.name] = fuzz_value(p, rng);
    }
    return args;
}

/// A random reachable state: a random composite's init plus a random prefix of its solution.
inline void randomize_state(Environment& env, const std::vector<CompositeTask>& universe, std::mt19937_64& rng)
{
    const auto& task = universe[rng() % universe.size()];
    env.apply_init(task.init_actions);
    const auto& actions = task.evaluation.expected_actions;
    const auto prefix = actions.empty() ? 0 : rng() % (actions.size() + 1);
    for (std::size_t i = 0; i < prefix; ++i)
        apply_solution_call(env, actions[i].call);
}

struct PurityFuzzResult
{
    std::size_t executions = 0;
    std::size_t hash_changes = 0;
    std::size_t errors = 0;
};

/// Runs `n` random (state, read tool) executions and counts database hash changes.
inline PurityFuzzResult read_purity_fuzz(const DomainPtr& domain, const std::vector<CompositeTask>& universe, std::size_t n,
                                         std::uint64_t seed)
{
    std::vector<const BoundTool*> reads;
    for (const auto& t: domain->tools.all())
        if (t.spec.kind == ToolKind::read)
            reads.push_back(&t);
    std::mt19937_64 rng(seed);
    PurityFuzzResult out;
    std::size_t done = 0;
    while (done < n)
    {
        Environment env(domain);
        randomize_state(env, universe, rng);
        // Several reads per state keep the fuzz cheap while varying tools and arguments.
        for (int i = 0; i < 8 && done < n; ++i, ++done)
        {
            const auto* tool = reads[rng() % reads.size()];
            const auto before = env.hashes();
            const auto r = env.execute_tool(tool->spec.owner, {tool->spec.name, fuzz_args(tool->spec, rng)});
            out.errors += r.is_error ? 1 : 0;
            out.hash_changes += env.hashes() == before ? 0 : 1;
            ++out.executions;
        }
    }
    return out;
}

} // namespace duet::testing
