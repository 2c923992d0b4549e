#include "npsurv/cond_power.hpp"

#include <algorithm>
#include <cmath>

#include "npsurv/error.hpp"
#include "npsurv/normal.hpp"
#include "npsurv/quadrature.hpp"

namespace npsurv {

namespace {

// Lower end of the log-time integration range, relative to log t. Integrands
// behave like s^a near 0 after the change of variables, so the cut-off error
// is negligible for any fitted shape a that is not close to 0.
constexpr double kLogSpan = 80.0;

double weight_at(const WeightSpec& spec, double pooled_surv, double pooled_surv_threshold) {
  return weight_from_survival(spec, pooled_surv, pooled_surv_threshold);
}

}  // namespace

std::vector<double> SplineCurve::kinks() const {
  std::vector<double> out;
  const auto& k = model_.knots();
  out.push_back(std::exp(k.lower));
  for (double x : k.internal) out.push_back(std::exp(x));
  out.push_back(std::exp(k.upper));
  return out;
}

ExponentialCurve::ExponentialCurve(double rate) : rate_(rate) {
  if (!(rate > 0.0)) throw InvalidArgument("exponential rate must be positive");
}
double ExponentialCurve::survival(double s) const { return s <= 0.0 ? 1.0 : std::exp(-rate_ * s); }
double ExponentialCurve::density(double s) const { return s < 0.0 ? 0.0 : rate_ * std::exp(-rate_ * s); }
double ExponentialCurve::hazard(double s) const { return s < 0.0 ? 0.0 : rate_; }

Cdf Cdf::uniform(double upper) {
  if (!(upper > 0.0)) throw InvalidArgument("uniform distribution needs a positive upper end");
  return {Kind::kUniform, upper};
}

Cdf Cdf::exponential(double rate) {
  if (!(rate > 0.0)) throw InvalidArgument("exponential rate must be positive");
  return {Kind::kExponential, rate};
}

double Cdf::operator()(double x) const {
  if (x <= 0.0) return 0.0;
  switch (kind) {
    case Kind::kNone: return 0.0;
    case Kind::kUniform: return std::min(1.0, x / param);
    case Kind::kExponential: return -std::expm1(-param * x);
  }
  return 0.0;
}

std::vector<double> Cdf::kinks() const {
  if (kind == Kind::kUniform) return {param};
  return {};
}

void PlanningAssumptions::validate() const {
  if (!survival0 || !survival1) throw InvalidArgument("planning assumptions need both survival curves");
  if (!(allocation > 0.0 && allocation < 1.0)) throw InvalidArgument("allocation must lie in (0, 1)");
  if (!(n > 0.0)) throw InvalidArgument("planned sample size must be positive");
}

double at_risk_prob(const PlanningAssumptions& a, int group, double t, double s) {
  if (s < 0.0) return 0.0;
  const double pz = group == 1 ? a.allocation : 1.0 - a.allocation;
  const auto& curve = group == 1 ? *a.survival1 : *a.survival0;
  return pz * a.recruitment(std::max(0.0, t - s)) * (1.0 - a.dropout(s)) * curve.survival(s);
}

double limit_weight(const PlanningAssumptions& a, const WeightSpec& spec, double s) {
  const double r = a.allocation;
  auto pooled = [&](double u) { return (1.0 - r) * a.survival0->survival(u) + r * a.survival1->survival(u); };
  const double thr = spec.family == WeightFamily::kModest ? pooled(spec.s_star) : 1.0;
  return weight_at(spec, pooled(s), thr);
}

DriftVariance drift_variance(const PlanningAssumptions& a, std::span<const WeightSpec> specs, double t,
                             VarianceForm form) {
  a.validate();
  const std::size_t m = specs.size();
  DriftVariance out{std::vector<double>(m, 0.0), std::vector<double>(m, 0.0)};
  if (m == 0 || !(t > 0.0)) return out;

  const double r = a.allocation;
  std::vector<double> thresholds(m, 1.0);
  for (std::size_t l = 0; l < m; ++l) {
    if (specs[l].family == WeightFamily::kModest) {
      const double s = specs[l].s_star;
      thresholds[l] = (1.0 - r) * a.survival0->survival(s) + r * a.survival1->survival(s);
    }
  }

  // Breakpoints in trial time, mapped to log time below.
  std::vector<double> kinks = a.survival0->kinks();
  for (double k : a.survival1->kinks()) kinks.push_back(k);
  for (double k : a.recruitment.kinks()) kinks.push_back(t - k);
  for (double k : a.dropout.kinks()) kinks.push_back(k);
  for (const auto& spec : specs) {
    if (spec.family == WeightFamily::kModest) kinks.push_back(spec.s_star);
  }
  std::vector<double> log_kinks;
  for (double k : kinks) {
    if (k > 0.0 && k < t) log_kinks.push_back(std::log(k));
  }

  auto integrand = [&](double u, std::span<double> f) {
    const double s = std::exp(u);
    const double g = a.recruitment(std::max(0.0, t - s)) * (1.0 - a.dropout(s));
    const double s0 = a.survival0->survival(s), s1 = a.survival1->survival(s);
    const double pi0 = (1.0 - r) * g * s0, pi1 = r * g * s1;
    const double tot = pi0 + pi1;
    if (!(tot > 0.0)) {
      std::fill(f.begin(), f.end(), 0.0);
      return;
    }
    const double ratio = pi0 * pi1 / tot;
    const double dlam = a.survival0->hazard(s) - a.survival1->hazard(s);
    const double mix_density = (1.0 - r) * a.survival0->density(s) + r * a.survival1->density(s);
    const double var_factor = form == VarianceForm::kEstimatorLimit ? ratio / tot * g * mix_density
                                                                     : ratio * ratio * g * mix_density;
    const double pooled = (1.0 - r) * s0 + r * s1;
    for (std::size_t l = 0; l < m; ++l) {
      const double q = weight_at(specs[l], pooled, thresholds[l]);
      f[l] = q * ratio * dlam * s;
      f[m + l] = q * q * var_factor * s;
    }
  };
  QuadratureOptions opts;
  opts.rel_tol = 1e-8;
  opts.abs_tol = 1e-15;
  const auto v = integrate(integrand, 2 * m, std::log(t) - kLogSpan, std::log(t), log_kinks, opts);
  for (std::size_t l = 0; l < m; ++l) {
    out.drift[l] = v[l];
    out.variance[l] = v[m + l];
  }
  return out;
}

double drift(const PlanningAssumptions& a, const WeightSpec& spec, double t) {
  return drift_variance(a, std::span<const WeightSpec>(&spec, 1), t).drift[0];
}

double variance_proxy(const PlanningAssumptions& a, const WeightSpec& spec, double t, VarianceForm form) {
  return drift_variance(a, std::span<const WeightSpec>(&spec, 1), t, form).variance[0];
}

double power_given_error(double conditional_error, double mean) {
  if (conditional_error <= 0.0) return 0.0;
  if (conditional_error >= 1.0) return 1.0;
  return normal::sf(normal::upper_quantile(conditional_error) - mean);
}

CpReport select_weight(const PlanningAssumptions& a, std::span<const WeightSpec> candidates,
                       const TwoStageDesign& design, double p1, VarianceForm form) {
  if (candidates.empty()) throw InvalidArgument("select_weight needs at least one candidate");
  CpReport report;
  report.conditional_error = conditional_error(design, p1);
  const auto first = drift_variance(a, candidates, design.t1, form);
  const auto second = drift_variance(a, candidates, design.t2, form);
  const double root_n = std::sqrt(a.n);
  for (std::size_t l = 0; l < candidates.size(); ++l) {
    CpCandidate c;
    c.spec = candidates[l];
    c.drift_increment = second.drift[l] - first.drift[l];
    const double dvar = second.variance[l] - first.variance[l];
    if (!(dvar > 0.0)) {
      throw EstimationError("no second-stage information under the planning assumptions for " +
                            candidates[l].to_string());
    }
    c.sd_increment = std::sqrt(dvar);
    c.standardized_drift = root_n * c.drift_increment / c.sd_increment;
    c.conditional_power = power_given_error(report.conditional_error, c.standardized_drift);
    if (l > 0 && c.standardized_drift > report.candidates[report.selected].standardized_drift) report.selected = l;
    report.candidates.push_back(c);
  }
  return report;
}

double conditional_power(const PlanningAssumptions& a, const WeightSpec& spec, const TwoStageDesign& design,
                         double p1, VarianceForm form) {
  return select_weight(a, std::span<const WeightSpec>(&spec, 1), design, p1, form).candidates[0].conditional_power;
}

StageMeans stage_means(const PlanningAssumptions& a, const WeightSpec& spec, const TwoStageDesign& design,
                       VarianceForm form) {
  const WeightSpec one[] = {spec};
  const auto first = drift_variance(a, one, design.t1, form);
  const auto second = drift_variance(a, one, design.t2, form);
  const double root_n = std::sqrt(a.n);
  StageMeans m;
  if (first.variance[0] > 0.0) m.mu1 = root_n * first.drift[0] / std::sqrt(first.variance[0]);
  const double dvar = second.variance[0] - first.variance[0];
  if (!(dvar > 0.0)) throw EstimationError("no second-stage information under the planning assumptions");
  m.mu2 = root_n * (second.drift[0] - first.drift[0]) / std::sqrt(dvar);
  return m;
}

double overall_power(const TwoStageDesign& design, const StageMeans& means) {
  design.validate();
  const double b1 = normal::upper_quantile(design.alpha1);
  const double early = normal::sf(b1 - means.mu1);
  const double hi = std::min(b1, means.mu1 + 40.0);
  double lo = means.mu1 - 40.0;
  if (design.alpha0 < 1.0) lo = std::max(lo, normal::upper_quantile(design.alpha0));
  if (!(hi > lo)) return early;
  const auto& comb = design.combination;
  std::vector<double> kinks{means.mu1};
  std::function<double(double)> f;
  if (comb.type == CombinationType::kInverseNormal && comb.w2 > 0.0) {
    const double b2 = normal::upper_quantile(design.c);
    if (comb.w1 > 0.0) kinks.push_back(b2 / comb.w1);
    f = [&](double z) { return normal::pdf(z - means.mu1) * normal::sf((b2 - comb.w1 * z) / comb.w2 - means.mu2); };
  } else {
    f = [&](double z) {
      const double p1 = normal::sf(z);
      if (!(p1 > design.alpha1 && p1 <= design.alpha0)) return 0.0;
      return normal::pdf(z - means.mu1) * power_given_error(conditional_error(design, p1), means.mu2);
    };
  }
  QuadratureOptions opts;
  opts.rel_tol = 1e-10;
  opts.abs_tol = 1e-14;
  return early + integrate(f, lo, hi, kinks, opts);
}

double overall_power(const PlanningAssumptions& a, const TwoStageDesign& design, const WeightSpec& spec,
                     VarianceForm form) {
  return overall_power(design, stage_means(a, spec, design, form));
}

double calibrate_theta(const std::function<PlanningAssumptions(double)>& family, const TwoStageDesign& design,
                       const WeightSpec& spec, double target, VarianceForm form) {
  if (!(target > design.alpha && target < 1.0)) {
    throw InvalidArgument("target power must lie between the level and 1");
  }
  auto power = [&](double theta) { return overall_power(family(theta), design, spec, form); };
  double hi = 0.0, lo = -0.05;
  double p_lo = power(lo);
  while (p_lo < target) {
    hi = lo;
    lo *= 2.0;
    if (lo < -50.0) throw NumericalError("calibrate_theta: target power not reached for theta >= -50");
    p_lo = power(lo);
  }
  double theta = lo;
  for (int i = 0; i < 200; ++i) {
    theta = 0.5 * (lo + hi);
    const double p = power(theta);
    if (std::abs(p - target) <= 1e-7 || hi - lo < 1e-12) break;
    (p < target ? hi : lo) = theta;
  }
  return theta;
}

}  // namespace npsurv
