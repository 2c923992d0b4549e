#include "npsurv/scenario.hpp"

#include <algorithm>
#include <cmath>

#include "npsurv/error.hpp"
#include "npsurv/quadrature.hpp"

namespace npsurv {

void ScenarioSpec::validate() const {
  if (!(control_rate > 0.0)) throw InvalidArgument("control_rate must be positive");
  if (!(rho_star >= 0.0 && gamma_star >= 0.0)) throw InvalidArgument("rho_star and gamma_star must be nonnegative");
  if (!(theta <= 0.0)) throw InvalidArgument("theta must be <= 0");
  if (!(accrual > 0.0)) throw InvalidArgument("accrual must be positive");
  if (!(t1 > 0.0 && t2 > t1)) throw InvalidArgument("analysis times must satisfy 0 < t1 < t2");
  if (n_per_group == 0) throw InvalidArgument("n_per_group must be positive");
}

double log_hazard_ratio(const ScenarioSpec& spec, double s) {
  const double surv = s <= 0.0 ? 1.0 : std::exp(-spec.control_rate * s);
  return spec.theta * std::pow(1.0 - surv, spec.rho_star) * std::pow(surv, spec.gamma_star);
}

ScenarioCurve::ScenarioCurve(const ScenarioSpec& spec)
    : control_rate_(spec.control_rate),
      rho_(spec.rho_star),
      gamma_(spec.gamma_star),
      theta_(spec.theta),
      closed_form_(spec.theta == 0.0 || (spec.rho_star == 0.0 && spec.gamma_star == 0.0)) {
  if (!(control_rate_ > 0.0)) throw InvalidArgument("control_rate must be positive");
  if (closed_form_) return;
  // Control survival reaches 1e-14 at s_max; the log hazard ratio is constant
  // to machine precision beyond it.
  s_max_ = -std::log(1e-14) / control_rate_;
  step_ = s_max_ / static_cast<double>(kGridCells);
  cum_.resize(kGridCells + 1);
  haz_.resize(kGridCells + 1);
  auto h = [this](double s) { return hazard(s); };
  cum_[0] = 0.0;
  haz_[0] = hazard(0.0);
  for (std::size_t i = 1; i <= kGridCells; ++i) {
    const double a = step_ * static_cast<double>(i - 1), b = step_ * static_cast<double>(i);
    cum_[i] = cum_[i - 1] + gauss_legendre15(h, a, b);
    haz_[i] = hazard(b);
  }
}

double ScenarioCurve::hazard(double s) const {
  if (s < 0.0) return 0.0;
  if (closed_form_) return control_rate_ * std::exp(theta_);
  const double surv = std::exp(-control_rate_ * s);
  return control_rate_ * std::exp(theta_ * std::pow(1.0 - surv, rho_) * std::pow(surv, gamma_));
}

double ScenarioCurve::cumulative_hazard(double s) const {
  if (s <= 0.0) return 0.0;
  if (closed_form_) return control_rate_ * std::exp(theta_) * s;
  if (s >= s_max_) return cum_.back() + haz_.back() * (s - s_max_);
  const auto i = std::min(static_cast<std::size_t>(s / step_), kGridCells - 1);
  const double u = (s - step_ * static_cast<double>(i)) / step_;
  // Cubic Hermite on the cell with exact end slopes.
  const double u2 = u * u, u3 = u2 * u;
  return (2 * u3 - 3 * u2 + 1) * cum_[i] + (u3 - 2 * u2 + u) * step_ * haz_[i] + (-2 * u3 + 3 * u2) * cum_[i + 1] +
         (u3 - u2) * step_ * haz_[i + 1];
}

double ScenarioCurve::survival(double s) const { return std::exp(-cumulative_hazard(s)); }
double ScenarioCurve::density(double s) const { return s < 0.0 ? 0.0 : hazard(s) * survival(s); }

double ScenarioCurve::inverse_cumulative_hazard(double target) const {
  if (!(target > 0.0)) return 0.0;
  if (closed_form_) return target / (control_rate_ * std::exp(theta_));
  if (target >= cum_.back()) return s_max_ + (target - cum_.back()) / haz_.back();
  const auto it = std::upper_bound(cum_.begin(), cum_.end(), target);
  const auto i = static_cast<std::size_t>(it - cum_.begin()) - 1;
  double lo = step_ * static_cast<double>(i), hi = lo + step_;
  // Safeguarded Newton on the interpolant, which is monotone within the cell.
  double s = lo + step_ * (target - cum_[i]) / (cum_[i + 1] - cum_[i]);
  for (int it_n = 0; it_n < 60; ++it_n) {
    const double f = cumulative_hazard(s) - target;
    if (f > 0.0) hi = s; else lo = s;
    double next = s - f / hazard(s);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - s) <= 1e-14 * std::max(1.0, s)) return next;
    s = next;
  }
  return s;
}

double sample_survival(const ScenarioSpec& spec, const ScenarioCurve& experimental, int group, CounterRng& rng) {
  const double e = rng.exponential();
  if (group == 0) return e / spec.control_rate;
  return experimental.inverse_cumulative_hazard(e);
}

SurvivalDataset sample_trial(const ScenarioSpec& spec, const ScenarioCurve& experimental, CounterRng& rng) {
  spec.validate();
  std::vector<Subject> subjects;
  subjects.reserve(2 * spec.n_per_group);
  for (std::size_t i = 0; i < 2 * spec.n_per_group; ++i) {
    Subject s;
    s.id = std::to_string(i + 1);
    s.group = i < spec.n_per_group ? 0 : 1;
    s.entry = rng.uniform(0.0, spec.accrual);
    s.event_time = sample_survival(spec, experimental, s.group, rng);
    switch (spec.dropout.kind) {
      case Cdf::Kind::kNone: break;
      case Cdf::Kind::kUniform: s.dropout_time = rng.uniform(0.0, spec.dropout.param); break;
      case Cdf::Kind::kExponential: s.dropout_time = rng.exponential() / spec.dropout.param; break;
    }
    subjects.push_back(std::move(s));
  }
  return SurvivalDataset(std::move(subjects));
}

SurvivalDataset sample_trial(const ScenarioSpec& spec, CounterRng& rng) {
  return sample_trial(spec, ScenarioCurve(spec), rng);
}

PlanningAssumptions scenario_assumptions(const ScenarioSpec& spec) {
  spec.validate();
  PlanningAssumptions a;
  a.survival0 = std::make_shared<ExponentialCurve>(spec.control_rate);
  a.survival1 = std::make_shared<ScenarioCurve>(spec);
  a.recruitment = Cdf::uniform(spec.accrual);
  a.dropout = spec.dropout;
  a.allocation = 0.5;
  a.n = 2.0 * static_cast<double>(spec.n_per_group);
  return a;
}

}  // namespace npsurv
