#include "coop/lbm.hpp"
#include "coop/metrics.hpp"
#include "coop/sem.hpp"
#include "coop/simulate.hpp"

#include <benchmark/benchmark.h>

#include <map>

using namespace coop;

namespace {

const SimOutput& instance(Index n) {
  static std::map<Index, SimOutput> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, simulate_coop(three_block_config(n, 300.0, 1))).first;
  return it->second;
}

void BM_SemFit(benchmark::State& state) {
  const SimOutput& sim = instance(state.range(0));
  SemConfig cfg;
  cfg.restarts = 1;
  cfg.keep_trace = false;
  for (auto _ : state) benchmark::DoNotOptimize(run_sem(sim.r, 3, 3, cfg));
}
BENCHMARK(BM_SemFit)->Arg(40)->Arg(60)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_VemFit(benchmark::State& state) {
  const SimOutput& sim = instance(state.range(0));
  const BinaryMatrix v = observed_support(sim.r);
  const auto init = init_clustering(v, 3, 3, InitMethod::hierarchical, 0);
  for (auto _ : state) benchmark::DoNotOptimize(vem_fit(v, 3, 3, init.first, init.second));
}
BENCHMARK(BM_VemFit)->Arg(40)->Arg(60)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_EffortFixedPoint(benchmark::State& state) {
  const SimOutput& sim = instance(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fit_sampling_effort(sim.r, sim.m, 1e-8, 100));
}
BENCHMARK(BM_EffortFixedPoint)->Arg(60)->Arg(100)->Unit(benchmark::kMicrosecond);

void BM_Modularity(benchmark::State& state) {
  const SimOutput& sim = instance(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(bipartite_modularity(sim.m, 10, 0));
}
BENCHMARK(BM_Modularity)->Arg(60)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
