#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "npsurv/logrank.hpp"
#include "npsurv/survival.hpp"
#include "npsurv/weights.hpp"

namespace npsurv {

inline constexpr double kDefaultPinvTolerance = 1e-10;
inline constexpr std::size_t kMaxMdirWeights = 6;

/// Moore-Penrose inverse of a symmetric matrix through its eigendecomposition.
/// Eigenvalues at or below rel_tol * (largest eigenvalue) are treated as zero.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m, double rel_tol = kDefaultPinvTolerance);

struct MdirStatistic {
  double statistic = 0.0;                   // W >= 0
  std::vector<std::size_t> achieving_subset;  // indices into the weight list
};

struct MdirResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t bootstrap_reps = 0;
  std::vector<std::size_t> achieving_subset;
};

/// The one-sided Wald maximum for a fixed covariance estimate. Pseudo-inverses
/// of all 2^m - 1 principal submatrices are computed once so the statistic can
/// be re-evaluated cheaply for bootstrap vectors.
class MdirKernel {
 public:
  MdirKernel() = default;
  explicit MdirKernel(const Eigen::MatrixXd& sigma, double rel_tol = kDefaultPinvTolerance);

  std::size_t dimension() const { return dim_; }
  MdirStatistic evaluate(std::span<const double> t) const;
  double value(std::span<const double> t) const;

 private:
  struct Subset {
    std::uint32_t mask;
    std::vector<std::size_t> index;
    std::vector<double> pinv;  // row-major |index| x |index|
  };
  double subset_value(const Subset& s, std::span<const double> t, bool& admissible) const;

  std::size_t dim_ = 0;
  std::vector<Subset> subsets_;
};

MdirStatistic mdir_statistic(const Snapshot& snap, std::span<const WeightSpec> specs);

/// Fills one sign per event (aligned with LogRankData::events()) for bootstrap
/// replicate b.
using SignSource = std::function<void(std::uint64_t b, std::span<const LogRankData::Event> events,
                                      std::span<double> signs)>;

/// Observed statistic plus everything needed to resample it.
class MdirBootstrap {
 public:
  MdirBootstrap(const Snapshot& snap, std::span<const WeightSpec> specs,
                double rel_tol = kDefaultPinvTolerance);

  const MdirStatistic& observed() const { return observed_; }
  const Eigen::MatrixXd& covariance() const { return sigma_; }
  const Eigen::VectorXd& statistics() const { return stats_; }
  std::size_t event_count() const { return events_.size(); }

  /// W* for one sign vector.
  double resampled(std::span<const double> signs) const;

  /// p = (1 + #{b : W*_b >= W}) / (B + 1) over replicates b = 0..B-1.
  /// Replicates are split into contiguous blocks when threads > 1; the count
  /// is an integer sum, so the result does not depend on `threads`.
  MdirResult p_value(std::size_t replicates, const SignSource& signs, unsigned threads = 1) const;

 private:
  std::vector<LogRankData::Event> events_;
  std::vector<double> contrib_;  // event-major: contrib_[e * m + l]
  std::size_t m_ = 0;
  double scale_ = 0.0;
  Eigen::MatrixXd sigma_;
  Eigen::VectorXd stats_;
  MdirKernel kernel_;
  MdirStatistic observed_;
};

/// Rademacher sign source keyed by (seed, replicate, subject index).
SignSource rademacher_signs(std::uint64_t seed);

/// Wild bootstrap p-value of the one-sided mdir statistic.
MdirResult wild_bootstrap_pvalue(const Snapshot& snap, std::span<const WeightSpec> specs,
                                 std::size_t replicates, std::uint64_t seed, unsigned threads = 1);

/// True when a bootstrap value counts as at least as extreme as the observed
/// one. Values within 1e-12 relative are treated as ties and counted.
inline bool at_least_as_extreme(double resampled, double observed) {
  return resampled >= observed - 1e-12 * std::abs(observed);
}

}  // namespace npsurv
