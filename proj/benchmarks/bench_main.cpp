#include <vector>

#include <benchmark/benchmark.h>

#include "hitspde/bessel.hpp"
#include "hitspde/pinned_string.hpp"
#include "hitspde/spde_solver.hpp"
#include "hitspde/zero_analysis.hpp"

using namespace hitspde;

namespace {

void StepperStep(benchmark::State& state, SolverConfig config) {
  const int nx = static_cast<int>(state.range(0));
  const GridSpec g = GridSpec::diffusive({0.0, 1.0}, nx, 1.0);
  const SpdeStepper stepper(g, config);
  std::vector<double> u = mean_bridge_profile(g);
  std::vector<double> noise(nx, 0.0);
  Rng rng(1);
  for (auto& z : noise) z = 1e-3 * standard_normal(rng);
  for (auto _ : state) {
    stepper.step(u, noise);
    benchmark::DoNotOptimize(u.data());
  }
  state.SetItemsProcessed(state.iterations() * nx);
}

void BM_ReflectedStep(benchmark::State& s) { StepperStep(s, SolverConfig::reflected()); }
void BM_ProjectedStep(benchmark::State& s) { StepperStep(s, SolverConfig::projected(5.0)); }
void BM_PenalizedStep(benchmark::State& s) { StepperStep(s, SolverConfig::penalized(5.0, 1e-3, 1e-3)); }
BENCHMARK(BM_ReflectedStep)->Arg(64)->Arg(256)->Arg(1024);
BENCHMARK(BM_ProjectedStep)->Arg(64)->Arg(256)->Arg(1024);
BENCHMARK(BM_PenalizedStep)->Arg(64)->Arg(256)->Arg(1024);

void BM_StringRun(benchmark::State& state) {
  const StringSpec spec = StringSpec::unit(static_cast<int>(state.range(0)), 0.5, 0.25, 1.0 / 32.0);
  const StringSimulator sim(spec);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    double acc = 0.0;
    sim.run(seed++, [&](int, std::span<const double> row) { acc += row[0]; });
    benchmark::DoNotOptimize(acc);
  }
}
BENCHMARK(BM_StringRun)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_BesselDensity(benchmark::State& state) {
  const BesselParams p(state.range(0) / 2.0);
  double y = 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(bessel_transition_density(p, 0.5, 0.7, y));
    y = y < 3.0 ? y + 0.01 : 0.1;
  }
}
BENCHMARK(BM_BesselDensity)->Arg(7)->Arg(10)->Arg(14);

void BM_ClusterCount(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::vector<double> row(n);
  Rng rng(2);
  for (auto& v : row) v = std::abs(0.1 * standard_normal(rng));
  ClusterConfig c;
  c.threshold = 0.02;
  for (auto _ : state) benchmark::DoNotOptimize(count_zero_clusters(row, c));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_ClusterCount)->Arg(64)->Arg(1024);

}  // namespace
BENCHMARK_MAIN();
