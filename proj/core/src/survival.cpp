#include "npsurv/survival.hpp"

#include <algorithm>
#include <cmath>

#include "npsurv/error.hpp"

namespace npsurv {

namespace {

bool selected(int group, GroupSelector sel) {
  return sel == GroupSelector::kPooled || group == static_cast<int>(sel);
}

void sort_records(std::vector<ObservedRecord>& records) {
  std::sort(records.begin(), records.end(), [](const ObservedRecord& a, const ObservedRecord& b) {
    if (a.time != b.time) return a.time < b.time;
    if (a.event != b.event) return a.event;
    return a.subject < b.subject;
  });
}

void require_group(const Snapshot& snap, GroupSelector sel) {
  const bool any = std::any_of(snap.records.begin(), snap.records.end(),
                               [&](const ObservedRecord& r) { return selected(r.group, sel); });
  if (!any) throw EstimationError("no subjects in the selected group: no estimable curve");
}

// Walks distinct event times, calling f(time, events, at_risk).
template <class F>
void for_each_event_time(const Snapshot& snap, GroupSelector sel, F&& f) {
  std::size_t risk = 0;
  for (const auto& r : snap.records) risk += selected(r.group, sel);
  const auto& recs = snap.records;
  std::size_t k = 0;
  while (k < recs.size()) {
    const double t = recs[k].time;
    std::size_t d = 0, removed = 0;
    while (k < recs.size() && recs[k].time == t) {
      if (selected(recs[k].group, sel)) {
        d += recs[k].event;
        ++removed;
      }
      ++k;
    }
    if (d > 0) f(t, d, risk);
    risk -= removed;
  }
}

}  // namespace

SurvivalDataset::SurvivalDataset(std::vector<Subject> subjects) : subjects_(std::move(subjects)) {
  for (std::size_t i = 0; i < subjects_.size(); ++i) {
    const auto& s = subjects_[i];
    const std::string where = "subject " + std::to_string(i) + " (" + s.id + "): ";
    if (!(s.entry >= 0.0) || std::isinf(s.entry)) throw InvalidArgument(where + "entry must be finite and >= 0");
    if (!(s.event_time > 0.0)) throw InvalidArgument(where + "event time must be > 0");
    if (!(s.dropout_time > 0.0)) throw InvalidArgument(where + "dropout time must be > 0");
    if (s.group != 0 && s.group != 1) throw InvalidArgument(where + "group must be 0 or 1");
  }
}

std::size_t SurvivalDataset::group_size(int group) const {
  return static_cast<std::size_t>(std::count_if(
      subjects_.begin(), subjects_.end(), [group](const Subject& s) { return s.group == group; }));
}

std::size_t Snapshot::group_count(int group) const {
  return static_cast<std::size_t>(std::count_if(
      records.begin(), records.end(), [group](const ObservedRecord& r) { return r.group == group; }));
}

std::size_t Snapshot::event_count() const {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [](const ObservedRecord& r) { return r.event; }));
}

Snapshot snapshot(const SurvivalDataset& dataset, double calendar_time) {
  if (!(calendar_time >= 0.0)) throw InvalidArgument("snapshot: calendar time must be >= 0");
  Snapshot snap;
  snap.calendar_time = calendar_time;
  snap.n_total = dataset.size();
  const auto& subjects = dataset.subjects();
  snap.records.reserve(subjects.size());
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    const Subject& s = subjects[i];
    if (!(s.entry < calendar_time)) continue;  // zero exposure
    const double admin = calendar_time - s.entry;
    const double censor = std::min(s.dropout_time, admin);
    const bool event = s.event_time <= censor;
    snap.records.push_back({i, event ? s.event_time : censor, event, s.group});
  }
  sort_records(snap.records);
  return snap;
}

Snapshot snapshot_from_records(std::vector<ObservedRecord> records, std::size_t n_total) {
  Snapshot snap;
  snap.calendar_time = kInf;
  snap.n_total = std::max(n_total, records.size());
  snap.records = std::move(records);
  sort_records(snap.records);
  return snap;
}

StepFunction::StepFunction(double initial_value, std::vector<double> jump_times,
                           std::vector<double> values)
    : initial_(initial_value), times_(std::move(jump_times)), values_(std::move(values)) {
  if (times_.size() != values_.size()) throw InvalidArgument("StepFunction: size mismatch");
  for (std::size_t k = 1; k < times_.size(); ++k) {
    if (!(times_[k] > times_[k - 1])) throw InvalidArgument("StepFunction: jump times must increase");
  }
}

double StepFunction::operator()(double s) const {
  const auto it = std::upper_bound(times_.begin(), times_.end(), s);
  if (it == times_.begin()) return initial_;
  return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

double StepFunction::left_limit(double s) const {
  const auto it = std::lower_bound(times_.begin(), times_.end(), s);
  if (it == times_.begin()) return initial_;
  return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

StepFunction kaplan_meier(const Snapshot& snap, GroupSelector group) {
  require_group(snap, group);
  std::vector<double> times, values;
  double surv = 1.0;
  for_each_event_time(snap, group, [&](double t, std::size_t d, std::size_t y) {
    surv *= 1.0 - static_cast<double>(d) / static_cast<double>(y);
    times.push_back(t);
    values.push_back(surv);
  });
  return StepFunction(1.0, std::move(times), std::move(values));
}

StepFunction nelson_aalen(const Snapshot& snap, GroupSelector group) {
  require_group(snap, group);
  std::vector<double> times, values;
  double cum = 0.0;
  for_each_event_time(snap, group, [&](double t, std::size_t d, std::size_t y) {
    cum += static_cast<double>(d) / static_cast<double>(y);
    times.push_back(t);
    values.push_back(cum);
  });
  return StepFunction(0.0, std::move(times), std::move(values));
}

std::size_t at_risk(const Snapshot& snap, double s, GroupSelector group) {
  return static_cast<std::size_t>(
      std::count_if(snap.records.begin(), snap.records.end(),
                    [&](const ObservedRecord& r) { return r.time >= s && selected(r.group, group); }));
}

}  // namespace npsurv
