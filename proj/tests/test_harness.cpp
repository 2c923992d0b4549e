#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "npsurv/error.hpp"
#include "npsurv/harness.hpp"
#include "npsurv/rng.hpp"
#include "npsurv/scenario.hpp"

using namespace npsurv;

namespace {

TwoStageDesign obf() { return make_design(0.025, BoundType::kObf, Combination::equal_weights(), 5, 8); }

std::set<std::string> names(const std::vector<WeightSpec>& w) {
  std::set<std::string> out;
  for (const auto& s : w) out.insert(s.to_string());
  return out;
}

std::set<std::string> fh_names(std::initializer_list<std::pair<double, double>> p) {
  std::set<std::string> out;
  for (auto [r, g] : p) out.insert(WeightSpec::fh(r, g).to_string());
  return out;
}

ScenarioSpec small(double rho, double gamma, double theta, std::size_t n = 120) {
  ScenarioSpec s;
  s.rho_star = rho;
  s.gamma_star = gamma;
  s.theta = theta;
  s.n_per_group = n;
  return s;
}

StudyOptions quick(std::size_t reps, unsigned threads = 1) {
  StudyOptions o;
  o.replicates = reps;
  o.base_seed = 77;
  o.threads = threads;
  o.trial.bootstrap_B = 99;
  return o;
}

std::string csv(const std::vector<StudyCell>& cells) {
  std::ostringstream out;
  write_results_csv(out, cells);
  write_selection_csv(out, cells);
  write_spline_csv(out, cells);
  return out.str();
}

}  // namespace

TEST_CASE("procedure weight sets") {
  const auto all = standard_procedures(2, 0);
  REQUIRE(all.size() == 6);
  CHECK(names(make_procedure(ProcedureKind::kTsAd, 2, 0).candidate_weights).size() == 8);
  CHECK(names(make_procedure(ProcedureKind::kOsRestrMdir, 2, 0).mdir_weights) == fh_names({{0, 0}, {1, 0}}));
  CHECK(names(make_procedure(ProcedureKind::kOsRestrMdir, 0, 2).mdir_weights) == fh_names({{0, 0}, {0, 1}}));
  CHECK(names(make_procedure(ProcedureKind::kTsRestrAd, 2, 0).candidate_weights) ==
        fh_names({{0, 0}, {1, 0}, {2, 0}, {3, 0}}));
  CHECK(names(make_procedure(ProcedureKind::kTsRestrAd, 0, 2).candidate_weights) ==
        fh_names({{0, 0}, {0, 1}, {0, 2}, {0, 3}}));
  CHECK(names(make_procedure(ProcedureKind::kTsRestrAd, 0, 0).candidate_weights) ==
        fh_names({{0, 0}, {1, 0}, {1, 1}, {0, 1}}));
  CHECK(make_procedure(ProcedureKind::kTsOptFh, 0, 2).second == WeightSpec::fh(0, 2));
  CHECK(make_procedure(ProcedureKind::kTsLr, 0, 2).first.is_log_rank());

  CHECK(parse_procedure("TS-AD", 0, 0).kind == ProcedureKind::kTsAd);
  const auto fixed = parse_procedure("TS-fixed:fh:0,0/fh:1,1", 0, 0);
  CHECK(fixed.kind == ProcedureKind::kTsFixed);
  CHECK(fixed.second == WeightSpec::fh(1, 1));
  CHECK_THROWS_AS(parse_procedure("TS-magic", 0, 0), InvalidArgument);
}

TEST_CASE("interim rejection skips the spline step") {
  CounterRng rng(1, 0);
  const auto ds = sample_trial(small(0, 0, -1.2, 300), rng);
  TrialOptions opts;
  opts.bootstrap_B = 999;
  const auto r = run_two_stage_trial(ds, obf(), make_procedure(ProcedureKind::kTsAd, 0, 0), opts, 5);
  CHECK(r.decision == StageDecision::kRejectAtInterim);
  CHECK(r.p1 <= obf().alpha1);
  CHECK_FALSE(r.selected_spline.has_value());
  CHECK_FALSE(r.p2.has_value());
}

TEST_CASE("without a futility bound every non-rejected trial continues") {
  CounterRng rng(2, 0);
  const auto ds = sample_trial(small(0, 0, 0.0), rng);
  // a design that can never reject early forces the second stage
  TwoStageDesign d = obf();
  d.alpha1 = 0.0;
  TrialOptions opts;
  opts.bootstrap_B = 199;
  for (const auto& p : standard_procedures(0, 0)) {
    const auto r = run_two_stage_trial(ds, d, p, opts, 3);
    CHECK(r.decision != StageDecision::kFutilityStop);
    if (!p.one_stage()) {
      CHECK(r.p2.has_value());
      CHECK(r.combined_p.has_value());
      CHECK(*r.combined_p == doctest::Approx(combine(d.combination, r.p1, *r.p2)));
      CHECK(r.selected_weight.has_value());
    }
    if (p.adaptive()) {
      CHECK(r.selected_spline.has_value());
      CHECK(std::count(p.candidate_weights.begin(), p.candidate_weights.end(), *r.selected_weight) == 1);
    }
  }
  d.alpha0 = 0.3;
  bool saw_futility = false;
  for (std::uint64_t seed = 0; seed < 10 && !saw_futility; ++seed) {
    CounterRng g(100 + seed, 0);
    const auto r = run_two_stage_trial(sample_trial(small(0, 0, 0.0), g), d,
                                       make_procedure(ProcedureKind::kTsLr, 0, 0), opts, seed);
    saw_futility = r.decision == StageDecision::kFutilityStop;
    if (saw_futility) CHECK(r.p1 >= 0.3);
  }
  CHECK(saw_futility);
}

TEST_CASE("trials are reproducible and procedures do not interfere") {
  CounterRng rng(3, 0);
  const auto ds = sample_trial(small(2, 0, -0.6), rng);
  TrialOptions opts;
  opts.bootstrap_B = 199;
  const auto procs = standard_procedures(2, 0);
  const auto a = run_procedures(ds, obf(), procs, opts, 11);
  const auto b = run_procedures(ds, obf(), procs, opts, 11);
  for (std::size_t k = 0; k < procs.size(); ++k) {
    CHECK(a[k].p1 == b[k].p1);
    CHECK(a[k].p2 == b[k].p2);
    CHECK(a[k].decision == b[k].decision);
    const auto alone = run_two_stage_trial(ds, obf(), procs[k], opts, 11);
    CHECK(alone.p1 == a[k].p1);
    CHECK(alone.p2 == a[k].p2);
    CHECK(alone.selected_weight == a[k].selected_weight);
  }
}

TEST_CASE("study output does not depend on the thread count") {
  const auto procs = standard_procedures(0, 2);
  const auto s = small(0, 2, -0.4, 80);
  const auto one = simulate_power(s, -0.4, {0.5, 1.0}, obf(), procs, quick(12, 1));
  const auto three = simulate_power(s, -0.4, {0.5, 1.0}, obf(), procs, quick(12, 3));
  CHECK(csv(one) == csv(three));
}

TEST_CASE("study accounting") {
  const auto procs = standard_procedures(0, 0);
  const auto cell = simulate_type1(small(0, 0, 0.0, 80), obf(), procs, quick(20));
  for (const auto& sum : cell.summaries) {
    CHECK(sum.replicates == 20);
    std::size_t accepted = sum.replicates - sum.rejections - sum.futility_stops;
    CHECK(sum.futility_stops + accepted + sum.rejections == sum.replicates);
    CHECK(sum.early_rejections <= sum.rejections);
    std::size_t selected = 0;
    for (const auto& [w, n] : sum.selection) selected += n;
    if (sum.procedure == "TS-AD") CHECK(selected == sum.continued);
    CHECK(sum.power() == doctest::Approx(sum.rejections / 20.0));
    CHECK(sum.mc_halfwidth() >= 0.0);
  }
  CHECK_THROWS_AS(simulate_type1(small(0, 0, 0.0), obf(), procs, quick(0)), InvalidArgument);
}

TEST_CASE("report formats") {
  CHECK(format_number(0.123456789) == "0.123457");
  CHECK(format_number(2.0) == "2");
  CHECK(format_number(1.5e-7) == "1.5e-07");
  const auto cell = simulate_type1(small(0, 0, 0.0, 60), obf(), {make_procedure(ProcedureKind::kTsLr, 0, 0)}, quick(3));
  std::ostringstream r, sel, spl;
  write_results_csv(r, {cell});
  write_selection_csv(sel, {cell});
  write_spline_csv(spl, {cell});
  CHECK(r.str().rfind("scenario,rho_star,gamma_star,theta_multiple,procedure,n_per_group,replicates,power,"
                      "early_rejection_rate,mc_halfwidth\n",
                      0) == 0);
  CHECK(sel.str().find("candidate_rho,candidate_gamma,frequency") != std::string::npos);
  const std::string text = r.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
}

TEST_CASE("calibrated effect sizes") {
  const auto d = obf();
  const double t00 = calibrate_scenario(small(0, 0, 0.0, 500), d);
  const double t20 = calibrate_scenario(small(2, 0, 0.0, 500), d);
  CHECK(t00 < 0.0);
  // a late-separating effect needs a larger log hazard ratio
  CHECK(t20 < t00);
  auto s = small(0, 0, t00, 500);
  CHECK(overall_power(scenario_assumptions(s), d, WeightSpec::log_rank()) == doctest::Approx(0.5).epsilon(1e-3));
}
