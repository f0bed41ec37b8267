// SPDX-License-Identifier: Apache-2.0
#include <duet/evaluation.hpp>
#include <duet/policies.hpp>
#include <duet/telecom.hpp>

#include <benchmark/benchmark.h>

using namespace duet;

namespace
{

const std::vector<CompositeTask>& universe()
{
    static const auto all = telecom::compose_all();
    return all;
}

void BM_VerifyUniverseParallel(benchmark::State& state)
{
    const auto d = telecom::make_domain();
    for (auto _: state)
        benchmark::DoNotOptimize(verify_all(universe(), d));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * universe().size()));
}

void BM_VerifyUniverseSerial(benchmark::State& state)
{
    const auto d = telecom::make_domain();
    for (auto _: state)
        benchmark::DoNotOptimize(verify_all_serial(universe(), d));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * universe().size()));
}

void run_suite_bench(benchmark::State& state, bool parallel)
{
    const auto d = telecom::make_domain();
    const auto tasks = telecom::default_suite(0);
    RunConfig c;
    const auto f = make_policy_factory({}, c.mode);
    for (auto _: state)
        benchmark::DoNotOptimize(parallel ? run_suite(tasks, f, d, c) : run_suite_serial(tasks, f, d, c));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * tasks.size()));
}

void BM_OracleSuiteParallel(benchmark::State& state)
{
    run_suite_bench(state, true);
}

void BM_OracleSuiteSerial(benchmark::State& state)
{
    run_suite_bench(state, false);
}

void BM_StateHash(benchmark::State& state)
{
    const auto w = telecom::seed_world();
    for (auto _: state)
        benchmark::DoNotOptimize(world_hashes(w));
}

} // namespace

BENCHMARK(BM_VerifyUniverseParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_VerifyUniverseSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_OracleSuiteParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_OracleSuiteSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StateHash);

BENCHMARK_MAIN();
