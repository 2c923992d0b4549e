#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "npsurv/design.hpp"
#include "npsurv/spline.hpp"
#include "npsurv/weights.hpp"

namespace npsurv {

/// A smooth planning-time survival law in trial time.
class SurvivalCurve {
 public:
  virtual ~SurvivalCurve() = default;
  virtual double survival(double s) const = 0;
  virtual double density(double s) const = 0;
  virtual double hazard(double s) const = 0;
  /// Trial times where derivatives may jump; used as quadrature breakpoints.
  virtual std::vector<double> kinks() const { return {}; }
};

class SplineCurve final : public SurvivalCurve {
 public:
  explicit SplineCurve(SplineModel model) : model_(std::move(model)) {}
  double survival(double s) const override { return model_.survival(s); }
  double density(double s) const override { return model_.density(s); }
  double hazard(double s) const override { return model_.hazard(s); }
  std::vector<double> kinks() const override;
  const SplineModel& model() const { return model_; }

 private:
  SplineModel model_;
};

class ExponentialCurve final : public SurvivalCurve {
 public:
  explicit ExponentialCurve(double rate);
  double survival(double s) const override;
  double density(double s) const override;
  double hazard(double s) const override;

 private:
  double rate_;
};

/// Distribution function of a nonnegative time: none (mass at infinity),
/// uniform on [0, a] or exponential.
struct Cdf {
  enum class Kind { kNone, kUniform, kExponential };
  Kind kind = Kind::kNone;
  double param = 0.0;

  static Cdf none() { return {}; }
  static Cdf uniform(double upper);
  static Cdf exponential(double rate);

  double operator()(double x) const;
  std::vector<double> kinks() const;
};

struct PlanningAssumptions {
  std::shared_ptr<const SurvivalCurve> survival0;
  std::shared_ptr<const SurvivalCurve> survival1;
  Cdf recruitment = Cdf::uniform(6.0);  // calendar time
  Cdf dropout = Cdf::none();             // trial time
  double allocation = 0.5;               // P[Z = 1]
  double n = 1000.0;                     // planned total sample size

  void validate() const;
};

/// Variance integrand of sigma-tilde^2. kEstimatorLimit is the limit of the
/// covariance estimator, pi0 pi1 / (pi0 + pi1)^2 times the event density;
/// kAsPrinted squares the full ratio pi0 pi1 / (pi0 + pi1).
enum class VarianceForm { kEstimatorLimit, kAsPrinted };

/// pi_k(t, s): probability of being in group k and at risk s time units
/// after entry at calendar time t.
double at_risk_prob(const PlanningAssumptions& a, int group, double t, double s);

/// The weight's large-sample limit, with the pooled survival
/// (1 - r) S0 + r S1 in place of the Kaplan-Meier curve.
double limit_weight(const PlanningAssumptions& a, const WeightSpec& spec, double s);

struct DriftVariance {
  std::vector<double> drift;
  std::vector<double> variance;
};

/// xi(t) and sigma^2(t) for several weights with one quadrature pass.
DriftVariance drift_variance(const PlanningAssumptions& a, std::span<const WeightSpec> specs, double t,
                             VarianceForm form = VarianceForm::kEstimatorLimit);

double drift(const PlanningAssumptions& a, const WeightSpec& spec, double t);
double variance_proxy(const PlanningAssumptions& a, const WeightSpec& spec, double t,
                      VarianceForm form = VarianceForm::kEstimatorLimit);

struct CpCandidate {
  WeightSpec spec;
  double drift_increment = 0.0;
  double sd_increment = 0.0;
  double conditional_power = 0.0;
  /// sqrt(n) * drift_increment / sd_increment, the quantity maximised.
  double standardized_drift = 0.0;
};

struct CpReport {
  std::vector<CpCandidate> candidates;
  std::size_t selected = 0;
  double conditional_error = 0.0;

  const WeightSpec& selected_spec() const { return candidates.at(selected).spec; }
};

/// 1 - Phi(Phi^{-1}(1 - alpha2) - mean) for a second-stage statistic ~ N(mean, 1).
double power_given_error(double conditional_error, double mean);

double conditional_power(const PlanningAssumptions& a, const WeightSpec& spec, const TwoStageDesign& design,
                         double p1, VarianceForm form = VarianceForm::kEstimatorLimit);

/// Conditional power of every candidate; the selected one has the largest
/// standardized drift increment, ties going to the first listed.
CpReport select_weight(const PlanningAssumptions& a, std::span<const WeightSpec> candidates,
                       const TwoStageDesign& design, double p1,
                       VarianceForm form = VarianceForm::kEstimatorLimit);

/// Means of the stage-wise statistics of a fixed-weight two-stage test.
struct StageMeans {
  double mu1 = 0.0;
  double mu2 = 0.0;
};
StageMeans stage_means(const PlanningAssumptions& a, const WeightSpec& spec, const TwoStageDesign& design,
                       VarianceForm form = VarianceForm::kEstimatorLimit);

/// P[reject] for stage statistics Z1 ~ N(mu1, 1), Z2 ~ N(mu2, 1) independent,
/// with p_k = 1 - Phi(Z_k).
double overall_power(const TwoStageDesign& design, const StageMeans& means);
double overall_power(const PlanningAssumptions& a, const TwoStageDesign& design, const WeightSpec& spec,
                     VarianceForm form = VarianceForm::kEstimatorLimit);

/// Effect size theta <= 0 at which the two-stage test with `spec` reaches the
/// target power. `family(theta)` builds the assumptions for a given theta.
/// Power is assumed to increase as theta decreases.
double calibrate_theta(const std::function<PlanningAssumptions(double)>& family, const TwoStageDesign& design,
                       const WeightSpec& spec, double target,
                       VarianceForm form = VarianceForm::kEstimatorLimit);

}  // namespace npsurv
