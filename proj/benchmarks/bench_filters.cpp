#include <benchmark/benchmark.h>

#include "regpf/filters.hpp"
#include "regpf/mcmc_init.hpp"

namespace {

using namespace regpf;

ParticleCloud daily_cloud(std::size_t n, Rng& rng) {
  std::normal_distribution<double> z;
  const auto truth = to_transformed(daily_params());
  std::vector<double> states(n);
  std::vector<SVParamsTransformed> params(n);
  for (std::size_t i = 0; i < n; ++i) {
    states[i] = -9.0 + 0.5 * z(rng);
    params[i] = {truth.alpha + 0.05 * z(rng), truth.psi + 0.2 * z(rng), truth.lambda + 0.2 * z(rng)};
  }
  return ParticleCloud::uniform(std::move(states), std::move(params));
}

void step(benchmark::State& state, Variant v) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const auto cloud = daily_cloud(n, rng);
  const auto cfg = FilterConfig::for_variant(v, n);
  for (auto _ : state) {
    auto out = filter_step(cloud, 0.01, cfg, rng);
    benchmark::DoNotOptimize(out.cloud.states.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_SisStep(benchmark::State& s) { step(s, Variant::sis); }
void BM_SirStep(benchmark::State& s) { step(s, Variant::sir); }
void BM_SirPStep(benchmark::State& s) { step(s, Variant::sir_p); }
void BM_ApfStep(benchmark::State& s) { step(s, Variant::apf); }

BENCHMARK(BM_SisStep)->Arg(2000)->Arg(10000);
BENCHMARK(BM_SirStep)->Arg(2000)->Arg(10000);
BENCHMARK(BM_SirPStep)->Arg(2000)->Arg(10000);
BENCHMARK(BM_ApfStep)->Arg(2000)->Arg(10000);

// One full sweep on a window of n observations.
void BM_GibbsSweep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto data = simulate(daily_params(), n, 7);
  auto chain = initial_state(data.y);
  Rng rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(gibbs_sweep(data.y, chain, rng));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GibbsSweep)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
