#include <benchmark/benchmark.h>

#include <filesystem>

#include "epikernel/branching.hpp"
#include "epikernel/data.hpp"
#include "epikernel/kernels.hpp"
#include "epikernel/model.hpp"
#include "epikernel/sampler.hpp"

namespace {

using namespace epikernel;

const Dataset& evros() {
  static const Dataset d =
      center_covariates(load_dataset(std::filesystem::path(EPIKERNEL_DATA_DIR) / "evros" / "manifest.json"));
  return d;
}

// Kernel term for every week of the Evros series.
void BM_AggregateKernelSeries(benchmark::State& state) {
  const auto& d = evros();
  const auto family = static_cast<KernelFamily>(state.range(0));
  ChangePoint cp;
  cp.t_change = 120.0;
  cp.pre = {2.0, 1.5, family == KernelFamily::C ? std::optional<double>(0.01) : std::nullopt};
  cp.post = {5.0, 2.0, cp.pre.r};
  for (auto _ : state) {
    double sum = 0.0;
    for (int w = 2; w <= d.n_weeks(); ++w) {
      sum += aggregate_kernel(d.distances, w, {family}, cp, d.counts[w - 1], d.counts[w - 2]);
    }
    benchmark::DoNotOptimize(sum);
  }
  state.SetItemsProcessed(state.iterations() * (d.n_weeks() - 1));
}
BENCHMARK(BM_AggregateKernelSeries)->DenseRange(0, 5);

void BM_ObservationLoglik(benchmark::State& state) {
  const auto& d = evros();
  const ModelSpec spec{KernelFamily::A, true};
  const auto s = ModelState::initial(d, spec);
  for (auto _ : state) benchmark::DoNotOptimize(observation_loglik(s, d, spec));
}
BENCHMARK(BM_ObservationLoglik);

// Full Metropolis-within-Gibbs sweeps on the Evros data, one chain.
void BM_SamplerSweeps(benchmark::State& state) {
  const auto& d = evros();
  McmcConfig cfg;
  cfg.total_iters = state.range(0);
  cfg.burn_in = cfg.total_iters - 10;
  cfg.thin = 10;
  cfg.chains = 1;
  for (auto _ : state) {
    auto draws = run_mcmc(d, PriorConfig{}, ModelSpec{KernelFamily::A, true}, cfg);
    benchmark::DoNotOptimize(draws.deviance.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SamplerSweeps)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_ExtinctionPoisson(benchmark::State& state) {
  double lambda = 1.01;
  for (auto _ : state) {
    benchmark::DoNotOptimize(extinction_poisson(lambda));
    lambda = lambda > 20.0 ? 1.01 : lambda * 1.01;
  }
}
BENCHMARK(BM_ExtinctionPoisson);

}  // namespace

BENCHMARK_MAIN();
