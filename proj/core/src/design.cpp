#include "npsurv/design.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "npsurv/error.hpp"
#include "npsurv/normal.hpp"
#include "npsurv/quadrature.hpp"

namespace npsurv {

namespace {

constexpr double kPMin = 1e-15;
constexpr double kPMax = 1.0 - 1e-15;

double clamp_p(double p) { return std::clamp(p, kPMin, kPMax); }

void check_weights(double w1, double w2) {
  if (!(w1 >= 0.0 && w2 >= 0.0) || std::abs(w1 * w1 + w2 * w2 - 1.0) > 1e-6) {
    throw InvalidArgument("combination weights must be nonnegative with w1^2 + w2^2 = 1");
  }
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
}

// Solves two_stage_rejection(ratio * b, b) = alpha for b.
Bounds solve_bounds(double alpha, double w1, double w2, double ratio) {
  check_alpha(alpha);
  check_weights(w1, w2);
  auto level = [&](double b) { return two_stage_rejection(ratio * b, b, w1, w2); };
  double lo = -10.0, hi = 40.0;
  if (!(level(lo) > alpha && level(hi) < alpha)) throw NumericalError("bound search failed to bracket the level");
  for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++i) {
    const double mid = 0.5 * (lo + hi);
    (level(mid) > alpha ? lo : hi) = mid;
  }
  const double b = 0.5 * (lo + hi);
  return {normal::sf(ratio * b), normal::sf(b)};
}

}  // namespace

Combination Combination::inverse_normal(double w1, double w2) {
  check_weights(w1, w2);
  return {CombinationType::kInverseNormal, w1, w2};
}

Combination Combination::fisher() { return {CombinationType::kFisher, 0.0, 0.0}; }

std::string_view to_string(BoundType type) {
  switch (type) {
    case BoundType::kObf: return "obf";
    case BoundType::kPocock: return "pocock";
    case BoundType::kExplicit: return "explicit";
  }
  return "?";
}

BoundType parse_bound_type(std::string_view text) {
  if (text == "obf") return BoundType::kObf;
  if (text == "pocock") return BoundType::kPocock;
  if (text == "explicit") return BoundType::kExplicit;
  throw InvalidArgument("unknown bound type '" + std::string(text) + "'");
}

void TwoStageDesign::validate() const {
  check_alpha(alpha);
  if (!(alpha1 >= 0.0 && alpha1 <= alpha0 && alpha0 <= 1.0)) {
    throw InvalidArgument("design bounds must satisfy 0 <= alpha1 <= alpha0 <= 1");
  }
  if (alpha1 > alpha) throw InvalidArgument("interim bound alpha1 exceeds the overall level");
  if (!(c >= 0.0 && c <= 1.0)) throw InvalidArgument("critical value c must lie in [0, 1]");
  if (combination.type == CombinationType::kInverseNormal) check_weights(combination.w1, combination.w2);
  if (!(t1 > 0.0 && t2 > t1)) throw InvalidArgument("analysis times must satisfy 0 < t1 < t2");
}

TwoStageDesign make_design(double alpha, BoundType type, Combination combination, double t1, double t2) {
  if (combination.type != CombinationType::kInverseNormal) {
    throw InvalidArgument("OBF and Pocock bounds are defined for the inverse normal combination");
  }
  TwoStageDesign d;
  d.alpha = alpha;
  d.combination = combination;
  d.bound_type = type;
  d.t1 = t1;
  d.t2 = t2;
  Bounds b;
  switch (type) {
    case BoundType::kObf: b = obf_bounds(alpha, combination.w1, combination.w2); break;
    case BoundType::kPocock: b = pocock_bounds(alpha, combination.w1, combination.w2); break;
    case BoundType::kExplicit: throw InvalidArgument("explicit bounds need alpha1 and c");
  }
  d.alpha1 = b.alpha1;
  d.c = b.c;
  d.validate();
  return d;
}

double combine(const Combination& comb, double p1, double p2) {
  p1 = clamp_p(p1);
  p2 = clamp_p(p2);
  if (comb.type == CombinationType::kFisher) return p1 * p2;
  return normal::sf(comb.w1 * normal::upper_quantile(p1) + comb.w2 * normal::upper_quantile(p2));
}

double two_stage_rejection(double b1, double b2, double w1, double w2) {
  double second = 0.0;
  if (w2 == 0.0) {
    if (w1 > 0.0) second = std::max(0.0, normal::cdf(b1) - normal::cdf(b2 / w1));
  } else {
    auto f = [&](double z) { return normal::pdf(z) * normal::sf((b2 - w1 * z) / w2); };
    const double lo = -40.0;
    if (b1 > lo) {
      std::vector<double> kinks{0.0};
      if (w1 > 0.0) kinks.push_back(b2 / w1);
      QuadratureOptions opts;
      opts.rel_tol = 1e-13;
      opts.abs_tol = 1e-17;
      second = integrate(f, lo, b1, kinks, opts);
    }
  }
  return normal::sf(b1) + second;
}

Bounds obf_bounds(double alpha, double w1, double w2) {
  if (w1 == 0.0) throw InvalidArgument("O'Brien-Fleming bounds need w1 > 0");
  return solve_bounds(alpha, w1, w2, 1.0 / w1);
}

Bounds pocock_bounds(double alpha, double w1, double w2) { return solve_bounds(alpha, w1, w2, 1.0); }

double conditional_error(const TwoStageDesign& design, double p1) {
  if (!(p1 > design.alpha1 && p1 <= design.alpha0)) {
    throw InvalidArgument("conditional error needs p1 in the continuation region (alpha1, alpha0]");
  }
  const auto& comb = design.combination;
  if (comb.type == CombinationType::kFisher) return std::min(1.0, design.c / p1);
  if (design.c <= 0.0) return 0.0;
  if (comb.w2 == 0.0) return combine(comb, p1, 0.5) <= design.c ? 1.0 : 0.0;
  const double num = normal::upper_quantile(design.c) - comb.w1 * normal::upper_quantile(clamp_p(p1));
  return normal::sf(num / comb.w2);
}

double level_check(const TwoStageDesign& design) {
  design.validate();
  const double lo = design.alpha1, hi = design.alpha0;
  if (!(hi > lo)) return design.alpha1;
  auto f = [&](double p1) { return conditional_error(design, p1); };
  std::vector<double> kinks;
  if (design.combination.type == CombinationType::kFisher) kinks.push_back(design.c);
  QuadratureOptions opts;
  opts.rel_tol = 1e-12;
  opts.abs_tol = 1e-16;
  return design.alpha1 + integrate(f, lo, hi, kinks, opts);
}

std::string_view to_string(StageDecision d) {
  switch (d) {
    case StageDecision::kRejectAtInterim: return "reject_at_interim";
    case StageDecision::kFutilityStop: return "futility_stop";
    case StageDecision::kContinue: return "continue";
    case StageDecision::kRejectAtFinal: return "reject_at_final";
    case StageDecision::kAcceptAtFinal: return "accept_at_final";
  }
  return "?";
}

StageDecision parse_decision(std::string_view text) {
  for (auto d : {StageDecision::kRejectAtInterim, StageDecision::kFutilityStop, StageDecision::kContinue,
                 StageDecision::kRejectAtFinal, StageDecision::kAcceptAtFinal}) {
    if (to_string(d) == text) return d;
  }
  throw InvalidArgument("unknown decision '" + std::string(text) + "'");
}

bool rejects(StageDecision d) {
  return d == StageDecision::kRejectAtInterim || d == StageDecision::kRejectAtFinal;
}

StageDecision decide(const TwoStageDesign& design, double p1, std::optional<double> p2) {
  if (p1 <= design.alpha1) return StageDecision::kRejectAtInterim;
  if (design.alpha0 < 1.0 && p1 >= design.alpha0) return StageDecision::kFutilityStop;
  if (!p2) return StageDecision::kContinue;
  return combine(design.combination, p1, *p2) <= design.c ? StageDecision::kRejectAtFinal
                                                          : StageDecision::kAcceptAtFinal;
}

}  // namespace npsurv
