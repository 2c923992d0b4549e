#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "npsurv/cond_power.hpp"
#include "npsurv/design.hpp"
#include "npsurv/scenario.hpp"
#include "npsurv/spline.hpp"
#include "npsurv/survival.hpp"
#include "npsurv/weights.hpp"

namespace npsurv {

enum class ProcedureKind { kOsMdir, kOsRestrMdir, kTsAd, kTsLr, kTsOptFh, kTsRestrAd, kTsFixed };

/// A testing procedure. Two-stage procedures with `candidate_weights` pick the
/// second-stage weight by conditional power; TS-fixed kinds use `first` for a
/// z-test at t1 and `second` for the increment.
struct ProcedureSpec {
  ProcedureKind kind = ProcedureKind::kTsAd;
  std::string name;
  std::vector<WeightSpec> mdir_weights;
  std::vector<WeightSpec> candidate_weights;
  WeightSpec first;
  WeightSpec second;

  bool one_stage() const { return kind == ProcedureKind::kOsMdir || kind == ProcedureKind::kOsRestrMdir; }
  bool adaptive() const { return kind == ProcedureKind::kTsAd || kind == ProcedureKind::kTsRestrAd; }
};

std::vector<WeightSpec> default_mdir_weights();      // (0,0), (1,0), (0,1)
std::vector<WeightSpec> default_candidate_weights();  // the eight FH weights

/// One of the six compared procedures, with weight sets resolved for the
/// scenario's optimal weight (rho*, gamma*).
ProcedureSpec make_procedure(ProcedureKind kind, double rho_star, double gamma_star);
ProcedureSpec fixed_procedure(const WeightSpec& first, const WeightSpec& second);
std::vector<ProcedureSpec> standard_procedures(double rho_star, double gamma_star);
ProcedureSpec parse_procedure(const std::string& name, double rho_star, double gamma_star);

struct TrialResult {
  StageDecision decision = StageDecision::kAcceptAtFinal;
  double p1 = 1.0;
  std::optional<double> p2;
  std::optional<WeightSpec> selected_weight;
  std::optional<std::pair<std::size_t, SplineScale>> selected_spline;
  std::optional<double> combined_p;
  bool spline_fallback = false;  // spline or CP failure, standard log-rank used
};

struct TrialOptions {
  std::size_t bootstrap_B = 1000;
  SplineGrid grid;
  SplineFitOptions spline;
  Cdf planning_recruitment = Cdf::uniform(6.0);
  Cdf planning_dropout = Cdf::none();
  VarianceForm variance_form = VarianceForm::kEstimatorLimit;
};

/// Runs several procedures on one dataset. Snapshots, bootstrap p-values of
/// identical weight sets and the spline selection are computed once and
/// shared between procedures. Results are a pure function of the inputs.
std::vector<TrialResult> run_procedures(const SurvivalDataset& dataset, const TwoStageDesign& design,
                                        const std::vector<ProcedureSpec>& procedures, const TrialOptions& opts,
                                        std::uint64_t seed);

TrialResult run_two_stage_trial(const SurvivalDataset& dataset, const TwoStageDesign& design,
                                const ProcedureSpec& procedure, const TrialOptions& opts, std::uint64_t seed);

struct ProcedureSummary {
  std::string procedure;
  std::size_t replicates = 0;
  std::size_t rejections = 0;
  std::size_t early_rejections = 0;
  std::size_t futility_stops = 0;
  std::size_t continued = 0;
  std::size_t spline_fallbacks = 0;
  std::map<std::string, std::size_t> selection;  // weight text -> count among continued trials
  std::map<std::pair<std::size_t, SplineScale>, std::size_t> spline_choice;

  double power() const;
  double early_rejection_rate() const;
  /// Half-width of the normal-approximation 95% interval for power().
  double mc_halfwidth() const;
};

struct StudyCell {
  std::string scenario;
  ScenarioSpec spec;
  double theta_multiple = 1.0;
  std::vector<ProcedureSummary> summaries;
  std::vector<std::vector<TrialResult>> trials;  // [replicate][procedure], only with keep_trials
};

struct StudyOptions {
  std::size_t replicates = 1000;
  std::uint64_t base_seed = 1;
  unsigned threads = 1;
  bool keep_trials = false;
  TrialOptions trial;
};

/// Simulates `replicates` trials of one scenario. Replicate i draws its data
/// from a stream keyed by (base_seed, i) only, and results are merged by
/// replicate index, so the output does not depend on the thread count.
StudyCell simulate_scenario(const std::string& label, const ScenarioSpec& spec, double theta_multiple,
                            const TwoStageDesign& design, const std::vector<ProcedureSpec>& procedures,
                            const StudyOptions& opts);

StudyCell simulate_type1(const ScenarioSpec& null_spec, const TwoStageDesign& design,
                         const std::vector<ProcedureSpec>& procedures, const StudyOptions& opts);

/// One cell per theta multiple of theta0.
std::vector<StudyCell> simulate_power(const ScenarioSpec& spec, double theta0, const std::vector<double>& multiples,
                                      const TwoStageDesign& design, const std::vector<ProcedureSpec>& procedures,
                                      const StudyOptions& opts);

/// Calibrated theta0 of the scenario family for its optimal FH weight.
double calibrate_scenario(const ScenarioSpec& spec, const TwoStageDesign& design, double target = 0.5,
                          VarianceForm form = VarianceForm::kEstimatorLimit);

/// Fixed 6-significant-digit formatting used in every report.
std::string format_number(double x);

void write_results_csv(std::ostream& out, const std::vector<StudyCell>& cells);
void write_selection_csv(std::ostream& out, const std::vector<StudyCell>& cells);
void write_spline_csv(std::ostream& out, const std::vector<StudyCell>& cells);

}  // namespace npsurv
