#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace npsurv {

enum class CombinationType { kInverseNormal, kFisher };

/// C(p1, p2). Inverse normal: 1 - Phi(w1 z(p1) + w2 z(p2)) with z(p) = Phi^{-1}(1 - p);
/// Fisher: p1 * p2.
struct Combination {
  CombinationType type = CombinationType::kInverseNormal;
  double w1 = 0.70710678118654752;
  double w2 = 0.70710678118654752;

  static Combination inverse_normal(double w1, double w2);
  static Combination equal_weights() { return inverse_normal(0.70710678118654752, 0.70710678118654752); }
  static Combination fisher();
};

enum class BoundType { kObf, kPocock, kExplicit };

std::string_view to_string(BoundType type);
BoundType parse_bound_type(std::string_view text);

struct Bounds {
  double alpha1 = 0.0;
  double c = 0.0;
};

/// Two-stage adaptive design: reject at the interim look if p1 <= alpha1,
/// stop for futility if p1 >= alpha0 (only when alpha0 < 1), and reject at
/// the final look if C(p1, p2) <= c.
struct TwoStageDesign {
  double alpha = 0.025;
  double alpha0 = 1.0;
  double alpha1 = 0.0;
  double c = 0.0;
  Combination combination;
  BoundType bound_type = BoundType::kExplicit;
  double t1 = 5.0;
  double t2 = 8.0;

  /// Throws InvalidArgument on inconsistent fields.
  void validate() const;
};

/// Inverse-normal design with bounds of the requested type and no futility bound.
TwoStageDesign make_design(double alpha, BoundType type, Combination combination, double t1, double t2);

/// p-values are clamped into [1e-15, 1 - 1e-15] first.
double combine(const Combination& comb, double p1, double p2);

/// Boundaries for the inverse-normal combination without futility stop.
/// O'Brien-Fleming: z-bounds b / w1 and b; Pocock: b and b.
Bounds obf_bounds(double alpha, double w1, double w2);
Bounds pocock_bounds(double alpha, double w1, double w2);

/// P[Z1 >= b1] + P[Z1 < b1, w1 Z1 + w2 Z2 >= b2] for independent standard normals.
double two_stage_rejection(double b1, double b2, double w1, double w2);

/// alpha1 + integral over (alpha1, alpha0) of the conditional error.
double level_check(const TwoStageDesign& design);

/// Largest p2 that still rejects given p1. Requires p1 in the continuation
/// region (alpha1, alpha0].
double conditional_error(const TwoStageDesign& design, double p1);

enum class StageDecision { kRejectAtInterim, kFutilityStop, kContinue, kRejectAtFinal, kAcceptAtFinal };

std::string_view to_string(StageDecision d);
StageDecision parse_decision(std::string_view text);
bool rejects(StageDecision d);

StageDecision decide(const TwoStageDesign& design, double p1, std::optional<double> p2 = std::nullopt);

}  // namespace npsurv
