#include "msim/blockdist.hpp"
#include "msim/redist.hpp"

#include <benchmark/benchmark.h>

namespace {

void BM_ReadPlan(benchmark::State& state) {
    const auto ns = static_cast<int>(state.range(0));
    const auto nd = static_cast<int>(state.range(1));
    const msim::Index n = 1'000'000;
    const auto sources = msim::block_partition(ns, n);
    const auto drains = msim::block_partition(nd, n);
    for (auto _ : state) {
        for (const auto& d : drains) {
            benchmark::DoNotOptimize(msim::compute_read_plan(d, sources));
        }
    }
    state.SetItemsProcessed(state.iterations() * nd);
}
BENCHMARK(BM_ReadPlan)->Args({16, 2})->Args({2, 16})->Args({160, 80})->Args({1024, 1000});

void BM_OraclePlan(benchmark::State& state) {
    const msim::Index n = state.range(0);
    const auto sources = msim::block_partition(16, n);
    const auto drain = msim::block_range(1, 4, n);
    for (auto _ : state) {
        benchmark::DoNotOptimize(msim::oracle_plan(drain, sources));
    }
}
BENCHMARK(BM_OraclePlan)->Arg(1'000)->Arg(100'000);

void BM_Reconfiguration(benchmark::State& state) {
    msim::ReconfigSpec spec;
    spec.ns = static_cast<int>(state.range(0));
    spec.nd = static_cast<int>(state.range(1));
    spec.method = static_cast<msim::Method>(state.range(2));
    spec.strategy = static_cast<msim::Strategy>(state.range(3));
    spec.data.elements = 65536;
    for (auto _ : state) {
        benchmark::DoNotOptimize(msim::run_reconfiguration(spec));
    }
}
BENCHMARK(BM_Reconfiguration)
    ->Args({2, 16, 0, 0})
    ->Args({16, 2, 0, 3})
    ->Args({2, 16, 2, 3})
    ->Args({16, 2, 1, 1})
    ->Unit(benchmark::kMicrosecond);

} // namespace

BENCHMARK_MAIN();
