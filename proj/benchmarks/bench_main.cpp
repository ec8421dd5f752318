#include <benchmark/benchmark.h>

#include "nelson/analytic.hpp"
#include "nelson/density.hpp"
#include "nelson/diffusion.hpp"
#include "nelson/propagator.hpp"

using namespace nelson;

namespace {

SlitConfig nelson_cfg() { return SlitConfig{}; }

void BM_PropagatorStep(benchmark::State& state) {
  const Grid1D grid(-40.0, 40.0, static_cast<std::size_t>(state.range(0)));
  const auto c = nelson_cfg();
  auto f = sample_field(grid, 0.0, [&](double x) { return two_slit_psi(x, 0.0, c); });
  const FreePropagator step(grid, 1e-3);
  for (auto _ : state) {
    f = step.apply(f);
    benchmark::DoNotOptimize(f.values.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PropagatorStep)->RangeMultiplier(4)->Range(1024, 16384);

void BM_TwoSlitDrift(benchmark::State& state) {
  const auto c = nelson_cfg();
  double x = -10.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(two_slit_drift_forward(x, 1.0, c));
    x = x > 10.0 ? -10.0 : x + 1e-3;
  }
}
BENCHMARK(BM_TwoSlitDrift);

void BM_Simulate(benchmark::State& state) {
  const Grid1D grid(-40.0, 40.0, 4096);
  const auto c = nelson_cfg();
  const auto rho = sample_field(grid, 0.0, [&](double x) { return two_slit_psi(x, 0.0, c); }).density();
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto init = sample_initial(rho, grid, n, 1);
  const auto spec = state.range(1) == 0 ? DriftSpec::one_slit(c) : DriftSpec::two_slit(c);
  SimulateOptions o;
  o.record_stride = 100;
  o.threads = 1;
  for (auto _ : state) {
    auto ens = simulate(spec, init, 0.0, 0.1, 1e-3, 1, o);
    benchmark::DoNotOptimize(ens.positions.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n) * 100);
}
BENCHMARK(BM_Simulate)->Args({10000, 0})->Args({10000, 1})->Unit(benchmark::kMillisecond);

void BM_HistogramEstimate(benchmark::State& state) {
  const Grid1D grid(-40.0, 40.0, 4096);
  const Grid1D bins(-40.0, 40.0, 256);
  const auto c = nelson_cfg();
  std::vector<double> d(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) d[i] = two_slit_density(grid.x(i), 5.0, c);
  const auto samples = sample_initial(d, grid, 200000, 3);
  for (auto _ : state) benchmark::DoNotOptimize(estimate(samples, bins).rho_hat.data());
}
BENCHMARK(BM_HistogramEstimate)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
