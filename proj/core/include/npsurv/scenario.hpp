#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <vector>

#include "npsurv/cond_power.hpp"
#include "npsurv/rng.hpp"
#include "npsurv/survival.hpp"

namespace npsurv {

/// Simulation scenario: exponential control group and an experimental group
/// whose log hazard ratio is theta * F0(s)^rho* * S0(s)^gamma*, the local
/// alternative for which the Fleming-Harrington (rho*, gamma*) test is optimal.
struct ScenarioSpec {
  double control_rate = -std::log(0.7);
  double rho_star = 0.0;
  double gamma_star = 0.0;
  double theta = 0.0;
  double accrual = 6.0;
  double t1 = 5.0;
  double t2 = 8.0;
  std::size_t n_per_group = 500;
  Cdf dropout = Cdf::none();

  void validate() const;
};

double log_hazard_ratio(const ScenarioSpec& spec, double s);

/// Survival law of the experimental group. The cumulative hazard is tabulated
/// on a fixed grid and interpolated by cubic Hermite segments; beyond the grid
/// the hazard is treated as constant.
class ScenarioCurve final : public SurvivalCurve {
 public:
  explicit ScenarioCurve(const ScenarioSpec& spec);

  double survival(double s) const override;
  double density(double s) const override;
  double hazard(double s) const override;
  double cumulative_hazard(double s) const;
  /// Solves cumulative_hazard(s) = target.
  double inverse_cumulative_hazard(double target) const;

  static constexpr std::size_t kGridCells = 4096;

 private:
  double control_rate_;
  double rho_;
  double gamma_;
  double theta_;
  bool closed_form_;
  double step_ = 0.0;
  double s_max_ = 0.0;
  std::vector<double> cum_;  // cumulative hazard at the grid nodes
  std::vector<double> haz_;  // hazard at the grid nodes
};

/// Draws a trial time for the given group.
double sample_survival(const ScenarioSpec& spec, const ScenarioCurve& experimental, int group, CounterRng& rng);

/// n_per_group subjects per arm, control first, entries uniform on [0, accrual].
SurvivalDataset sample_trial(const ScenarioSpec& spec, const ScenarioCurve& experimental, CounterRng& rng);
SurvivalDataset sample_trial(const ScenarioSpec& spec, CounterRng& rng);

/// The scenario's true laws as planning assumptions (balanced allocation).
PlanningAssumptions scenario_assumptions(const ScenarioSpec& spec);

}  // namespace npsurv
