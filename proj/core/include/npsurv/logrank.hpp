#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "npsurv/survival.hpp"
#include "npsurv/weights.hpp"

namespace npsurv {

/// Non-standardized weighted log-rank statistic and its variance estimate.
///
/// Sign convention: each event contributes Q(s) * (Y1(s)/Y(s) - Z_i), i.e.
/// expected minus observed events in group 1. Positive values therefore point
/// towards longer survival in group 1, the direction of the one-sided
/// alternative tested throughout the library.
struct WlrResult {
  double statistic = 0.0;
  double variance = 0.0;
  double standardized = 0.0;  // 0 when the variance is 0
  std::size_t events_used = 0;
};

struct IncrementResult {
  double z = 0.0;
  double p2 = 1.0;
};

/// Event-wise ingredients of every weighted log-rank statistic on one
/// snapshot: risk sets before removals and the pooled Kaplan-Meier curve.
class LogRankData {
 public:
  struct Event {
    std::size_t subject;
    double time;
    int group;
    double at_risk;
    double at_risk1;
  };

  /// Throws EstimationError when the snapshot holds subjects of one group only.
  explicit LogRankData(const Snapshot& snap);

  const std::vector<Event>& events() const { return events_; }
  std::size_t n_total() const { return n_total_; }
  const StepFunction& pooled_km() const { return km_; }

  /// Q-hat at each event time.
  std::vector<double> weights(const WeightSpec& spec) const;
  /// Per-event summands Q(X_i) (Y1/Y - Z_i) of the unscaled statistic.
  std::vector<double> contributions(const WeightSpec& spec) const;

  /// Statistic vector n^{-1/2} sum_i c_i for each spec.
  Eigen::VectorXd statistics(std::span<const WeightSpec> specs) const;
  /// Covariance estimate n^{-1} sum Q_l Q_k (Y1/Y)(1 - Y1/Y).
  Eigen::MatrixXd covariance(std::span<const WeightSpec> specs) const;

 private:
  std::vector<Event> events_;
  std::size_t n_total_ = 0;
  StepFunction km_{1.0, {}, {}};
};

WlrResult wlr_statistic(const Snapshot& snap, const WeightSpec& spec);

Eigen::MatrixXd covariance_matrix(const Snapshot& snap, std::span<const WeightSpec> specs);

/// Standardized calendar-time increment between two snapshots of one dataset.
/// Weights and risk sets are re-evaluated on each snapshot. Throws
/// EstimationError when the variance does not increase.
IncrementResult standardized_increment(const Snapshot& first, const Snapshot& second,
                                       const WeightSpec& spec);

}  // namespace npsurv
