#include <benchmark/benchmark.h>

#include "npsurv/cond_power.hpp"
#include "npsurv/design.hpp"
#include "npsurv/harness.hpp"
#include "npsurv/mdir.hpp"
#include "npsurv/rng.hpp"
#include "npsurv/scenario.hpp"
#include "npsurv/spline.hpp"

using namespace npsurv;

namespace {

ScenarioSpec late_effect(std::size_t n_per_group) {
  ScenarioSpec s;
  s.rho_star = 2.0;
  s.theta = -0.47;
  s.n_per_group = n_per_group;
  return s;
}

SurvivalDataset trial(std::size_t n_per_group, std::uint64_t seed = 1) {
  CounterRng rng(seed, 0);
  return sample_trial(late_effect(n_per_group), rng);
}

void BM_MdirBootstrap(benchmark::State& state) {
  const auto snap = snapshot(trial(static_cast<std::size_t>(state.range(0))), 5.0);
  const std::vector<WeightSpec> specs{WeightSpec::fh(0, 0), WeightSpec::fh(1, 0), WeightSpec::fh(0, 1),
                                      WeightSpec::fh(1, 1)};
  const MdirBootstrap boot(snap, specs);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(boot.p_value(1000, rademacher_signs(++seed)).p_value);
  state.SetLabel("B=1000, 4 weights");
}
BENCHMARK(BM_MdirBootstrap)->Arg(200)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_SplineFit(benchmark::State& state) {
  const auto snap = snapshot(trial(500), 5.0);
  std::vector<ObservedRecord> control;
  for (const auto& r : snap.records)
    if (r.group == 0) control.push_back(r);
  const auto n_internal = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fit_spline(control, SplineScale::kOdds, n_internal).loglik());
}
BENCHMARK(BM_SplineFit)->Arg(0)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_SplineGrid(benchmark::State& state) {
  const auto snap = snapshot(trial(500), 5.0);
  for (auto _ : state) benchmark::DoNotOptimize(fit_grid(snap, SplineGrid{}).size());
}
BENCHMARK(BM_SplineGrid)->Unit(benchmark::kMillisecond);

void BM_DriftVariance(benchmark::State& state) {
  const auto a = scenario_assumptions(late_effect(500));
  const auto candidates = default_candidate_weights();
  for (auto _ : state) benchmark::DoNotOptimize(drift_variance(a, candidates, 8.0).drift[0]);
}
BENCHMARK(BM_DriftVariance)->Unit(benchmark::kMicrosecond);

void BM_TrialAllProcedures(benchmark::State& state) {
  const auto spec = late_effect(500);
  const auto design = make_design(0.025, BoundType::kObf, Combination::equal_weights(), spec.t1, spec.t2);
  const auto procs = standard_procedures(spec.rho_star, spec.gamma_star);
  const TrialOptions opts;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    const auto ds = trial(500, ++seed);
    benchmark::DoNotOptimize(run_procedures(ds, design, procs, opts, seed).size());
  }
  state.SetLabel("six procedures, n=500/group");
}
BENCHMARK(BM_TrialAllProcedures)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
