#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace npsurv {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// One trial participant. Times after `entry` are trial times; `entry` itself
/// is calendar time.
struct Subject {
  std::string id;
  double entry = 0.0;
  double event_time = kInf;
  double dropout_time = kInf;
  int group = 0;
};

/// The raw trial panel. Construction validates every subject.
class SurvivalDataset {
 public:
  SurvivalDataset() = default;
  explicit SurvivalDataset(std::vector<Subject> subjects);

  const std::vector<Subject>& subjects() const { return subjects_; }
  std::size_t size() const { return subjects_.size(); }
  bool empty() const { return subjects_.empty(); }
  std::size_t group_size(int group) const;

 private:
  std::vector<Subject> subjects_;
};

/// A subject's observation at a given analysis date.
struct ObservedRecord {
  std::size_t subject;  // index into the dataset
  double time;          // X_i(t)
  bool event;           // delta_i(t)
  int group;
};

/// The dataset as visible at calendar time `calendar_time`: records of entered
/// subjects sorted by observed time, events ahead of censorings on ties.
struct Snapshot {
  double calendar_time = 0.0;
  std::size_t n_total = 0;  // subjects in the underlying dataset
  std::vector<ObservedRecord> records;

  std::size_t group_count(int group) const;
  std::size_t event_count() const;
};

Snapshot snapshot(const SurvivalDataset& dataset, double calendar_time);

/// Builds a snapshot directly from observed (time, event, group) triples, all
/// treated as entered. Used for per-group fitting and tests.
Snapshot snapshot_from_records(std::vector<ObservedRecord> records, std::size_t n_total = 0);

enum class GroupSelector { kControl = 0, kExperimental = 1, kPooled = 2 };

/// Right-continuous step function on [0, inf).
class StepFunction {
 public:
  StepFunction(double initial_value, std::vector<double> jump_times, std::vector<double> values);

  /// Value at s (right-continuous).
  double operator()(double s) const;
  /// Left limit lim_{u -> s-}.
  double left_limit(double s) const;

  double initial_value() const { return initial_; }
  const std::vector<double>& jump_times() const { return times_; }
  const std::vector<double>& values() const { return values_; }

 private:
  double initial_;
  std::vector<double> times_;
  std::vector<double> values_;
};

/// Product-limit estimate. Throws EstimationError if the selected group is empty.
StepFunction kaplan_meier(const Snapshot& snap, GroupSelector group = GroupSelector::kPooled);
/// Cumulative hazard estimate, jumps d/Y at event times.
StepFunction nelson_aalen(const Snapshot& snap, GroupSelector group = GroupSelector::kPooled);

/// Number at risk just before s (observed time >= s) in the selected group.
std::size_t at_risk(const Snapshot& snap, double s, GroupSelector group = GroupSelector::kPooled);

}  // namespace npsurv
