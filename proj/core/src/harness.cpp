#include "npsurv/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include "npsurv/error.hpp"
#include "npsurv/logrank.hpp"
#include "npsurv/mdir.hpp"
#include "npsurv/normal.hpp"
#include "npsurv/rng.hpp"

namespace npsurv {

namespace {

enum Purpose : std::uint64_t { kData = 1, kTrial = 2, kBootstrap = 3 };

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<WeightSpec> fh_list(std::initializer_list<std::pair<double, double>> pairs) {
  std::vector<WeightSpec> out;
  for (auto [r, g] : pairs) out.push_back(WeightSpec::fh(r, g));
  return out;
}

// Per-replicate state shared by all procedures run on one dataset.
class TrialContext {
 public:
  TrialContext(const SurvivalDataset& ds, const TwoStageDesign& design, const TrialOptions& opts,
               std::uint64_t seed)
      : ds_(ds), design_(design), opts_(opts), seed_(seed) {}

  const Snapshot& snap(int stage) {
    auto& s = stage == 1 ? s1_ : s2_;
    if (!s) s = snapshot(ds_, stage == 1 ? design_.t1 : design_.t2);
    return *s;
  }

  double mdir_pvalue(int stage, const std::vector<WeightSpec>& weights) {
    const std::string key = std::to_string(stage) + "|" + to_string(weights);
    if (auto it = mdir_cache_.find(key); it != mdir_cache_.end()) return it->second;
    double p = 1.0;
    try {
      MdirBootstrap boot(snap(stage), weights);
      p = boot.p_value(opts_.bootstrap_B, rademacher_signs(derive_seed(seed_, kBootstrap, fnv1a(key)))).p_value;
    } catch (const EstimationError&) {
      p = 1.0;  // one group unobserved: no evidence against the null
    }
    mdir_cache_.emplace(key, p);
    return p;
  }

  double z_pvalue(const WeightSpec& spec) {
    try {
      return normal::sf(wlr_statistic(snap(1), spec).standardized);
    } catch (const EstimationError&) {
      return 1.0;
    }
  }

  double increment_pvalue(const WeightSpec& spec) {
    try {
      return standardized_increment(snap(1), snap(2), spec).p2;
    } catch (const EstimationError&) {
      return 1.0;
    }
  }

  // Spline extrapolation of the interim data, fitted once per replicate.
  const std::optional<GroupExtrapolation>& extrapolation() {
    if (!spline_done_) {
      spline_done_ = true;
      try {
        spline_ = select_from_grid(fit_grid(snap(1), opts_.grid, opts_.spline));
      } catch (const EstimationError&) {
      } catch (const NumericalError&) {
      }
    }
    return spline_;
  }

  PlanningAssumptions planning(const GroupExtrapolation& fit) const {
    PlanningAssumptions a;
    a.survival0 = std::make_shared<SplineCurve>(fit.model0);
    a.survival1 = std::make_shared<SplineCurve>(fit.model1);
    a.recruitment = opts_.planning_recruitment;
    a.dropout = opts_.planning_dropout;
    a.allocation = static_cast<double>(ds_.group_size(1)) / static_cast<double>(ds_.size());
    a.n = static_cast<double>(ds_.size());
    return a;
  }

  const TwoStageDesign& design() const { return design_; }
  const TrialOptions& options() const { return opts_; }

 private:
  const SurvivalDataset& ds_;
  const TwoStageDesign& design_;
  const TrialOptions& opts_;
  std::uint64_t seed_;
  std::optional<Snapshot> s1_, s2_;
  std::map<std::string, double> mdir_cache_;
  bool spline_done_ = false;
  std::optional<GroupExtrapolation> spline_;
};

TrialResult run_in_context(TrialContext& ctx, const ProcedureSpec& proc) {
  const auto& design = ctx.design();
  TrialResult r;
  if (proc.one_stage()) {
    r.p1 = ctx.mdir_pvalue(2, proc.mdir_weights);
    r.decision = r.p1 <= design.alpha ? StageDecision::kRejectAtFinal : StageDecision::kAcceptAtFinal;
    return r;
  }
  const bool fixed = proc.kind == ProcedureKind::kTsFixed || proc.kind == ProcedureKind::kTsLr ||
                     proc.kind == ProcedureKind::kTsOptFh;
  r.p1 = fixed ? ctx.z_pvalue(proc.first) : ctx.mdir_pvalue(1, proc.mdir_weights);
  r.decision = decide(design, r.p1);
  if (r.decision != StageDecision::kContinue) return r;

  WeightSpec second = proc.second;
  if (!fixed) {
    second = WeightSpec::log_rank();
    r.spline_fallback = true;
    if (const auto& fit = ctx.extrapolation()) {
      r.selected_spline = std::make_pair(fit->n_internal(), fit->scale());
      try {
        const auto report =
            select_weight(ctx.planning(*fit), proc.candidate_weights, design, r.p1, ctx.options().variance_form);
        second = report.selected_spec();
        r.spline_fallback = false;
      } catch (const EstimationError&) {
      } catch (const NumericalError&) {
      }
    }
  }
  r.selected_weight = second;
  r.p2 = ctx.increment_pvalue(second);
  r.combined_p = combine(design.combination, r.p1, *r.p2);
  r.decision = decide(design, r.p1, r.p2);
  return r;
}

std::string trim_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

}  // namespace

std::vector<WeightSpec> default_mdir_weights() { return fh_list({{0, 0}, {1, 0}, {0, 1}}); }

std::vector<WeightSpec> default_candidate_weights() {
  return fh_list({{0, 0}, {1, 0}, {2, 0}, {3, 0}, {1, 1}, {0, 1}, {0, 2}, {0, 3}});
}

ProcedureSpec make_procedure(ProcedureKind kind, double rho_star, double gamma_star) {
  ProcedureSpec p;
  p.kind = kind;
  const bool late = rho_star > gamma_star && gamma_star == 0.0;
  const bool early = gamma_star > rho_star && rho_star == 0.0;
  std::vector<WeightSpec> restricted_mdir = default_mdir_weights();
  if (late) restricted_mdir = fh_list({{0, 0}, {1, 0}});
  if (early) restricted_mdir = fh_list({{0, 0}, {0, 1}});
  switch (kind) {
    case ProcedureKind::kOsMdir:
      p.name = "OS-MDIR";
      p.mdir_weights = default_mdir_weights();
      break;
    case ProcedureKind::kOsRestrMdir:
      p.name = "OS-restrMDIR";
      p.mdir_weights = restricted_mdir;
      break;
    case ProcedureKind::kTsAd:
      p.name = "TS-AD";
      p.mdir_weights = default_mdir_weights();
      p.candidate_weights = default_candidate_weights();
      break;
    case ProcedureKind::kTsRestrAd: {
      p.name = "TS-restrAD";
      p.mdir_weights = restricted_mdir;
      for (const auto& w : default_candidate_weights()) {
        bool keep;
        if (rho_star > gamma_star) keep = w.rho > w.gamma || w.is_log_rank();
        else if (gamma_star > rho_star) keep = w.gamma > w.rho || w.is_log_rank();
        else keep = std::abs(w.rho - w.gamma) <= 1.0;
        if (keep) p.candidate_weights.push_back(w);
      }
      break;
    }
    case ProcedureKind::kTsLr:
      p.name = "TS-LR";
      p.first = p.second = WeightSpec::log_rank();
      break;
    case ProcedureKind::kTsOptFh:
      p.name = "TS-optFH";
      p.first = p.second = WeightSpec::fh(rho_star, gamma_star);
      break;
    case ProcedureKind::kTsFixed:
      throw InvalidArgument("use fixed_procedure for TS-fixed");
  }
  return p;
}

ProcedureSpec fixed_procedure(const WeightSpec& first, const WeightSpec& second) {
  ProcedureSpec p;
  p.kind = ProcedureKind::kTsFixed;
  p.name = "TS-fixed(" + first.to_string() + "/" + second.to_string() + ")";
  p.first = first;
  p.second = second;
  return p;
}

std::vector<ProcedureSpec> standard_procedures(double rho_star, double gamma_star) {
  std::vector<ProcedureSpec> out;
  for (auto k : {ProcedureKind::kOsMdir, ProcedureKind::kOsRestrMdir, ProcedureKind::kTsAd, ProcedureKind::kTsLr,
                 ProcedureKind::kTsOptFh, ProcedureKind::kTsRestrAd}) {
    out.push_back(make_procedure(k, rho_star, gamma_star));
  }
  return out;
}

ProcedureSpec parse_procedure(const std::string& name, double rho_star, double gamma_star) {
  static const std::pair<const char*, ProcedureKind> kNames[] = {
      {"OS-MDIR", ProcedureKind::kOsMdir}, {"OS-restrMDIR", ProcedureKind::kOsRestrMdir},
      {"TS-AD", ProcedureKind::kTsAd},     {"TS-LR", ProcedureKind::kTsLr},
      {"TS-optFH", ProcedureKind::kTsOptFh}, {"TS-restrAD", ProcedureKind::kTsRestrAd}};
  for (auto [n, k] : kNames) {
    if (name == n) return make_procedure(k, rho_star, gamma_star);
  }
  // TS-fixed:<first>/<second>
  const std::string prefix = "TS-fixed:";
  if (name.rfind(prefix, 0) == 0) {
    const auto rest = name.substr(prefix.size());
    const auto slash = rest.find('/');
    if (slash == std::string::npos) throw InvalidArgument("TS-fixed needs '<first>/<second>'");
    return fixed_procedure(WeightSpec::parse(rest.substr(0, slash)), WeightSpec::parse(rest.substr(slash + 1)));
  }
  throw InvalidArgument("unknown procedure '" + name + "'");
}

std::vector<TrialResult> run_procedures(const SurvivalDataset& dataset, const TwoStageDesign& design,
                                        const std::vector<ProcedureSpec>& procedures, const TrialOptions& opts,
                                        std::uint64_t seed) {
  design.validate();
  if (opts.bootstrap_B == 0) throw InvalidArgument("bootstrap_B must be positive");
  for (const auto& p : procedures) {
    if (!p.mdir_weights.empty()) require_distinct(p.mdir_weights);
    if (p.adaptive() && p.candidate_weights.empty()) throw InvalidArgument(p.name + ": no candidate weights");
  }
  TrialContext ctx(dataset, design, opts, seed);
  std::vector<TrialResult> out;
  out.reserve(procedures.size());
  for (const auto& p : procedures) out.push_back(run_in_context(ctx, p));
  return out;
}

TrialResult run_two_stage_trial(const SurvivalDataset& dataset, const TwoStageDesign& design,
                                const ProcedureSpec& procedure, const TrialOptions& opts, std::uint64_t seed) {
  return run_procedures(dataset, design, {procedure}, opts, seed).front();
}

double ProcedureSummary::power() const {
  return replicates == 0 ? 0.0 : static_cast<double>(rejections) / static_cast<double>(replicates);
}

double ProcedureSummary::early_rejection_rate() const {
  return replicates == 0 ? 0.0 : static_cast<double>(early_rejections) / static_cast<double>(replicates);
}

double ProcedureSummary::mc_halfwidth() const {
  if (replicates == 0) return 0.0;
  const double p = power();
  return 1.959963984540054 * std::sqrt(p * (1.0 - p) / static_cast<double>(replicates));
}

StudyCell simulate_scenario(const std::string& label, const ScenarioSpec& spec, double theta_multiple,
                            const TwoStageDesign& design, const std::vector<ProcedureSpec>& procedures,
                            const StudyOptions& opts) {
  spec.validate();
  design.validate();
  if (opts.replicates == 0) throw InvalidArgument("replicates must be positive");
  if (procedures.empty()) throw InvalidArgument("no procedures to simulate");
  const ScenarioCurve curve(spec);
  std::vector<std::vector<TrialResult>> results(opts.replicates);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < opts.replicates; i = next++) {
      try {
        CounterRng rng(derive_seed(opts.base_seed, i, kData));
        const auto ds = sample_trial(spec, curve, rng);
        results[i] = run_procedures(ds, design, procedures, opts.trial, derive_seed(opts.base_seed, i, kTrial));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = opts.replicates;
      }
    }
  };
  const unsigned threads = std::max(1u, opts.threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  StudyCell cell{label, spec, theta_multiple, {}, {}};
  for (std::size_t k = 0; k < procedures.size(); ++k) {
    ProcedureSummary s;
    s.procedure = procedures[k].name;
    s.replicates = opts.replicates;
    for (const auto& rep : results) {
      const auto& r = rep[k];
      if (rejects(r.decision)) ++s.rejections;
      if (r.decision == StageDecision::kRejectAtInterim) ++s.early_rejections;
      if (r.decision == StageDecision::kFutilityStop) ++s.futility_stops;
      if (r.p2) ++s.continued;
      if (r.spline_fallback) ++s.spline_fallbacks;
      if (r.p2 && procedures[k].adaptive() && r.selected_weight) ++s.selection[r.selected_weight->to_string()];
      if (r.selected_spline) ++s.spline_choice[*r.selected_spline];
    }
    cell.summaries.push_back(std::move(s));
  }
  if (opts.keep_trials) cell.trials = std::move(results);
  return cell;
}

StudyCell simulate_type1(const ScenarioSpec& null_spec, const TwoStageDesign& design,
                         const std::vector<ProcedureSpec>& procedures, const StudyOptions& opts) {
  ScenarioSpec spec = null_spec;
  spec.theta = 0.0;
  return simulate_scenario("null", spec, 0.0, design, procedures, opts);
}

std::vector<StudyCell> simulate_power(const ScenarioSpec& spec, double theta0, const std::vector<double>& multiples,
                                      const TwoStageDesign& design, const std::vector<ProcedureSpec>& procedures,
                                      const StudyOptions& opts) {
  std::vector<StudyCell> cells;
  const std::string label = "fh(" + trim_number(spec.rho_star) + "," + trim_number(spec.gamma_star) + ")";
  for (double m : multiples) {
    ScenarioSpec s = spec;
    s.theta = m * theta0;
    cells.push_back(simulate_scenario(label, s, m, design, procedures, opts));
  }
  return cells;
}

double calibrate_scenario(const ScenarioSpec& spec, const TwoStageDesign& design, double target, VarianceForm form) {
  auto family = [&](double theta) {
    ScenarioSpec s = spec;
    s.theta = theta;
    return scenario_assumptions(s);
  };
  return calibrate_theta(family, design, WeightSpec::fh(spec.rho_star, spec.gamma_star), target, form);
}

std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

namespace {

void cell_prefix(std::ostream& out, const StudyCell& c) {
  out << c.scenario << ',' << format_number(c.spec.rho_star) << ',' << format_number(c.spec.gamma_star) << ','
      << format_number(c.theta_multiple) << ',';
}

}  // namespace

void write_results_csv(std::ostream& out, const std::vector<StudyCell>& cells) {
  out << "scenario,rho_star,gamma_star,theta_multiple,procedure,n_per_group,replicates,power,"
         "early_rejection_rate,mc_halfwidth\n";
  for (const auto& c : cells) {
    for (const auto& s : c.summaries) {
      cell_prefix(out, c);
      out << s.procedure << ',' << c.spec.n_per_group << ',' << s.replicates << ',' << format_number(s.power()) << ','
          << format_number(s.early_rejection_rate()) << ',' << format_number(s.mc_halfwidth()) << '\n';
    }
  }
}

void write_selection_csv(std::ostream& out, const std::vector<StudyCell>& cells) {
  out << "scenario,rho_star,gamma_star,theta_multiple,procedure,candidate_rho,candidate_gamma,frequency\n";
  for (const auto& c : cells) {
    for (const auto& s : c.summaries) {
      if (s.selection.empty()) continue;
      std::size_t total = 0;
      for (const auto& [w, n] : s.selection) total += n;
      for (const auto& [w, n] : s.selection) {
        const auto spec = WeightSpec::parse(w);
        cell_prefix(out, c);
        out << s.procedure << ',' << format_number(spec.rho) << ',' << format_number(spec.gamma) << ','
            << format_number(static_cast<double>(n) / static_cast<double>(total)) << '\n';
      }
    }
  }
}

void write_spline_csv(std::ostream& out, const std::vector<StudyCell>& cells) {
  out << "scenario,rho_star,gamma_star,theta_multiple,procedure,n_internal,scale,frequency\n";
  for (const auto& c : cells) {
    for (const auto& s : c.summaries) {
      if (s.spline_choice.empty()) continue;
      std::size_t total = 0;
      for (const auto& [k, n] : s.spline_choice) total += n;
      for (const auto& [k, n] : s.spline_choice) {
        cell_prefix(out, c);
        out << s.procedure << ',' << k.first << ',' << to_string(k.second) << ','
            << format_number(static_cast<double>(n) / static_cast<double>(total)) << '\n';
      }
    }
  }
}

}  // namespace npsurv
