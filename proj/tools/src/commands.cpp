#include "commands.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "json_io.hpp"
#include "npsurv/error.hpp"
#include "npsurv/harness.hpp"
#include "npsurv/ipd.hpp"
#include "npsurv/logrank.hpp"
#include "npsurv/mdir.hpp"
#include "npsurv/rng.hpp"

namespace npsurv::cli {

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

// Stream keys for the two random consumers of the real-data workflow.
constexpr std::uint64_t kImputeStream = 0;
constexpr std::uint64_t kBootstrapStream = 1;

std::vector<double> parse_doubles(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (end == item.c_str() || *end != '\0') throw InvalidArgument("not a number: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

SplineGrid parse_grid(const std::string& knots, const std::string& scales) {
  SplineGrid g;
  g.knots.clear();
  g.scales.clear();
  for (double k : parse_doubles(knots)) {
    if (k < 0 || k != static_cast<double>(static_cast<std::size_t>(k))) {
      throw InvalidArgument("knot counts must be nonnegative integers");
    }
    g.knots.push_back(static_cast<std::size_t>(k));
  }
  for (const auto& s : split(scales, ',')) g.scales.push_back(parse_scale(s));
  if (g.knots.empty() || g.scales.empty()) throw InvalidArgument("spline grid must not be empty");
  return g;
}

unsigned default_threads() {
  if (const char* env = std::getenv("NPSURV_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return 1;
}

void emit(const json& j, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << j.dump(2) << '\n';
    return;
  }
  std::ofstream f(path);
  if (!f) throw InvalidArgument("cannot write '" + path + "'");
  f << j.dump(2) << '\n';
}

// Design given either as a JSON file or through flags.
struct DesignArgs {
  std::string file;
  double alpha = 0.025;
  double alpha0 = 1.0;
  std::string type = "obf";
  std::string weights = "0.70710678118654752,0.70710678118654752";
  std::optional<double> t1, t2;

  void add_to(CLI::App* app, bool with_times) {
    app->add_option("--design", file, "Design JSON file");
    app->add_option("--alpha", alpha, "One-sided level");
    app->add_option("--alpha0", alpha0, "Futility bound (1 = none)");
    app->add_option("--type", type, "Bounds: obf or pocock");
    app->add_option("--weights", weights, "Inverse-normal weights w1,w2");
    if (with_times) {
      app->add_option("--t1", t1, "Interim calendar time");
      app->add_option("--t2", t2, "Final calendar time");
    }
  }

  TwoStageDesign build(double default_t1, double default_t2) const {
    TwoStageDesign d;
    if (!file.empty()) {
      json j = read_json_file(file);
      if (t1) j["t1"] = *t1;
      if (t2) j["t2"] = *t2;
      d = design_from_json(j);
    } else {
      const auto w = parse_doubles(weights);
      if (w.size() != 2) throw InvalidArgument("--weights needs two values w1,w2");
      d = make_design(alpha, parse_bound_type(type), Combination::inverse_normal(w[0], w[1]), t1.value_or(default_t1),
                      t2.value_or(default_t2));
      d.alpha0 = alpha0;
    }
    d.validate();
    return d;
  }
};

// ---------------------------------------------------------------- bounds

struct BoundsArgs {
  double alpha = 0.025;
  std::string type = "obf";
  std::string weights = "0.70710678118654752,0.70710678118654752";
};

int cmd_bounds(const BoundsArgs& a, std::ostream& out) {
  const auto w = parse_doubles(a.weights);
  if (w.size() != 2) throw InvalidArgument("--weights needs two values w1,w2");
  const auto comb = Combination::inverse_normal(w[0], w[1]);
  Bounds b;
  switch (parse_bound_type(a.type)) {
    case BoundType::kObf: b = obf_bounds(a.alpha, comb.w1, comb.w2); break;
    case BoundType::kPocock: b = pocock_bounds(a.alpha, comb.w1, comb.w2); break;
    case BoundType::kExplicit: throw InvalidArgument("--type must be obf or pocock");
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "alpha1=%.6f c=%.6f", b.alpha1, b.c);
  out << buf << '\n';
  return kOk;
}

// ---------------------------------------------------------------- interim

struct InterimArgs {
  std::string ipd;
  DesignArgs design;
  std::string mdir_weights = "fh:0,0;fh:1,0;fh:0,1";
  std::string candidates = "fh:0,0;fh:1,0;fh:2,0;fh:3,0;fh:1,1;fh:0,1;fh:0,2;fh:0,3";
  std::string knots = "0,1,2";
  std::string scales = "hazard,odds,normal";
  std::size_t B = 1000;
  std::uint64_t seed = 1;
  std::optional<double> accrual;
  bool all_subsets = false;
  std::string out;
};

json grid_json(const std::vector<GridEntry>& entries) {
  json rows = json::array();
  for (const auto& e : entries) {
    json row = {{"n_internal", e.n_internal}, {"scale", std::string(to_string(e.scale))}};
    if (e.fit) {
      row["combined_aic"] = round6(e.fit->combined_aic());
      row["aic0"] = round6(aic(e.fit->model0));
      row["aic1"] = round6(aic(e.fit->model1));
    } else {
      row["error"] = e.error;
    }
    rows.push_back(row);
  }
  return rows;
}

int cmd_interim(const InterimArgs& a, std::ostream& out) {
  const auto design = a.design.build(0.0, 0.0);
  const auto mdir_weights = parse_weight_list(a.mdir_weights);
  const auto candidates = parse_weight_list(a.candidates);
  require_distinct(mdir_weights);
  if (mdir_weights.empty() || candidates.empty()) throw InvalidArgument("weight lists must not be empty");
  if (a.B == 0) throw InvalidArgument("-B must be positive");
  const auto grid = parse_grid(a.knots, a.scales);
  const double accrual = a.accrual.value_or(design.t2);

  const auto dataset = ingest_ipd(a.ipd, design.t2, derive_seed(a.seed, kImputeStream));
  const auto snap1 = snapshot(dataset, design.t1);
  const auto boot_seed = derive_seed(a.seed, kBootstrapStream);
  const auto mdir = wild_bootstrap_pvalue(snap1, mdir_weights, a.B, boot_seed);
  const double p1 = mdir.p_value;
  const auto decision = decide(design, p1);

  json report = {{"ipd", a.ipd},
                 {"seed", a.seed},
                 {"bootstrap_B", a.B},
                 {"design", to_json(design)},
                 {"planning_accrual", round6(accrual)},
                 {"events_at_interim", snap1.event_count()},
                 {"mdir", to_json(mdir, mdir_weights)},
                 {"p1", round6(p1)},
                 {"decision", std::string(to_string(decision))}};

  if (a.all_subsets) {
    // Every sub-collection that keeps the first (reference) weight.
    json rows = json::array();
    const std::size_t m = mdir_weights.size();
    for (std::uint32_t mask = 0; mask < (1u << (m - 1)); ++mask) {
      std::vector<WeightSpec> subset{mdir_weights[0]};
      for (std::size_t l = 1; l < m; ++l) {
        if (mask & (1u << (l - 1))) subset.push_back(mdir_weights[l]);
      }
      const auto r = wild_bootstrap_pvalue(snap1, subset, a.B, boot_seed);
      rows.push_back(to_json(r, subset));
    }
    report["mdir_subsets"] = rows;
  }

  if (decision == StageDecision::kContinue) {
    WeightSpec selected = WeightSpec::log_rank();
    bool fallback = true;
    const auto entries = fit_grid(snap1, grid);
    report["spline"] = {{"grid", grid_json(entries)}};
    try {
      const auto fit = select_from_grid(entries);
      report["spline"]["selected"] = {{"n_internal", fit.n_internal()},
                                      {"scale", std::string(to_string(fit.scale()))},
                                      {"combined_aic", round6(fit.combined_aic())},
                                      {"model0", to_json(fit.model0)},
                                      {"model1", to_json(fit.model1)}};
      PlanningAssumptions pa;
      pa.survival0 = std::make_shared<SplineCurve>(fit.model0);
      pa.survival1 = std::make_shared<SplineCurve>(fit.model1);
      pa.recruitment = Cdf::uniform(accrual);
      pa.allocation = static_cast<double>(dataset.group_size(1)) / static_cast<double>(dataset.size());
      pa.n = static_cast<double>(dataset.size());
      const auto cp = select_weight(pa, candidates, design, p1);
      report["cp_report"] = to_json(cp);
      selected = cp.selected_spec();
      fallback = false;
    } catch (const EstimationError& e) {
      report["spline"]["error"] = e.what();
    } catch (const NumericalError& e) {
      report["spline"]["error"] = e.what();
    }
    report["selected_weight"] = selected.to_string();
    report["fallback_to_log_rank"] = fallback;
  }
  emit(report, a.out, out);
  return kOk;
}

// ---------------------------------------------------------------- final

struct FinalArgs {
  std::string ipd;
  std::string interim;
  std::string out;
};

int cmd_final(const FinalArgs& a, std::ostream& out, std::ostream& err) {
  const json in = read_json_file(a.interim);
  const auto decision = parse_decision(in.at("decision").get<std::string>());
  if (decision != StageDecision::kContinue) {
    err << "error: the trial was already decided at the interim analysis (" << to_string(decision) << ")\n";
    return kUsage;
  }
  const auto design = design_from_json(in.at("design"));
  const auto seed = in.at("seed").get<std::uint64_t>();
  const double p1 = in.at("p1").get<double>();
  const auto weight = WeightSpec::parse(in.at("selected_weight").get<std::string>());
  const std::string ipd = a.ipd.empty() ? in.at("ipd").get<std::string>() : a.ipd;

  const auto dataset = ingest_ipd(ipd, design.t2, derive_seed(seed, kImputeStream));
  const auto inc = standardized_increment(snapshot(dataset, design.t1), snapshot(dataset, design.t2), weight);
  const double combined = combine(design.combination, p1, inc.p2);
  const auto final_decision = decide(design, p1, inc.p2);
  json report = {{"selected_weight", weight.to_string()},
                 {"p1", round6(p1)},
                 {"z2", round6(inc.z)},
                 {"p2", round6(inc.p2)},
                 {"combined_p", round6(combined)},
                 {"c", round6(design.c)},
                 {"decision", std::string(to_string(final_decision))},
                 {"reject", rejects(final_decision)}};
  emit(report, a.out, out);
  return kOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string kind = "power";
  std::string config;
  std::size_t replicates = 1000;
  unsigned threads = default_threads();
  std::uint64_t seed = 1;
  std::string out;
  std::size_t B = 1000;
  double rho_star = 0.0;
  double gamma_star = 0.0;
  std::size_t n_per_group = 500;
  std::string procedures;
  std::string multiples = "1";
  std::optional<double> theta0;
  std::string mdir_weights;
  bool check_orderings = false;
  DesignArgs design;
};

bool check(std::ostream& err, bool ok, const std::string& what) {
  err << (ok ? "PASS " : "FAIL ") << what << '\n';
  return ok;
}

bool orderings_hold(const std::vector<StudyCell>& cells, std::ostream& err) {
  bool ok = true;
  for (const auto& c : cells) {
    if (c.theta_multiple != 1.0) continue;
    std::map<std::string, const ProcedureSummary*> by;
    for (const auto& s : c.summaries) by[s.procedure] = &s;
    auto get = [&](const char* n) -> const ProcedureSummary* {
      auto it = by.find(n);
      return it == by.end() ? nullptr : it->second;
    };
    const auto *lr = get("TS-LR"), *opt = get("TS-optFH"), *ad = get("TS-AD");
    const bool ph = c.spec.rho_star == 0.0 && c.spec.gamma_star == 0.0;
    if (ph && lr) {
      for (const auto& s : c.summaries) {
        ok &= check(err, std::abs(s.power() - lr->power()) <= 0.10,
                    c.scenario + ": " + s.procedure + " within 10 points of TS-LR");
      }
    } else if (lr && opt && ad) {
      // all procedures see the same datasets, so the SE of a difference is the paired one
      auto gap_ok = [&](const ProcedureSummary& hi, const ProcedureSummary& lo) {
        const auto ih = static_cast<std::size_t>(&hi - c.summaries.data());
        const auto il = static_cast<std::size_t>(&lo - c.summaries.data());
        const double n = static_cast<double>(c.trials.size());
        double sum = 0, sum2 = 0;
        for (const auto& rep : c.trials) {
          const double d = static_cast<double>(rejects(rep[ih].decision)) - static_cast<double>(rejects(rep[il].decision));
          sum += d;
          sum2 += d * d;
        }
        const double mean = sum / n;
        const double se = std::sqrt(std::max(0.0, sum2 / n - mean * mean) / n);
        return mean > 2.0 * se;
      };
      ok &= check(err, gap_ok(*opt, *ad), c.scenario + ": TS-optFH > TS-AD by 2 SE");
      ok &= check(err, gap_ok(*ad, *lr), c.scenario + ": TS-AD > TS-LR by 2 SE");
    }
  }
  return ok;
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  ScenarioSpec spec;
  spec.rho_star = a.rho_star;
  spec.gamma_star = a.gamma_star;
  spec.n_per_group = a.n_per_group;
  std::optional<TwoStageDesign> design;
  std::vector<ProcedureSpec> procs;
  std::vector<double> multiples = parse_doubles(a.multiples);
  std::size_t B = a.B;
  std::optional<double> theta0 = a.theta0;
  std::string mdir_override = a.mdir_weights;

  if (!a.config.empty()) {
    const json cfg = read_json_file(a.config);
    reject_unknown_keys(cfg, {"design", "scenario", "procedures", "multiples", "bootstrap_B", "mdir_weights", "theta0"},
                        "config");
    if (cfg.contains("scenario")) {
      const auto in = scenario_from_json(cfg.at("scenario"));
      spec = in.spec;
      if (in.has_theta) theta0 = in.spec.theta;
    }
    if (cfg.contains("design")) design = design_from_json(cfg.at("design"));
    if (cfg.contains("multiples")) multiples = cfg.at("multiples").get<std::vector<double>>();
    if (cfg.contains("bootstrap_B")) B = cfg.at("bootstrap_B").get<std::size_t>();
    if (cfg.contains("theta0")) theta0 = cfg.at("theta0").get<double>();
    if (cfg.contains("mdir_weights")) mdir_override = to_string(weights_from_json(cfg.at("mdir_weights")));
    if (cfg.contains("procedures")) {
      for (const auto& p : cfg.at("procedures")) procs.push_back(parse_procedure(p.get<std::string>(), spec.rho_star, spec.gamma_star));
    }
  }
  if (!design) design = a.design.build(spec.t1, spec.t2);
  spec.t1 = design->t1;
  spec.t2 = design->t2;
  if (!a.procedures.empty()) {
    procs.clear();
    // ';' separates procedures; ',' also works unless a TS-fixed weight needs it
    for (const auto& group : split(a.procedures, ';')) {
      const auto names = group.rfind("TS-fixed:", 0) == 0 ? std::vector<std::string>{group} : split(group, ',');
      for (const auto& p : names) procs.push_back(parse_procedure(p, spec.rho_star, spec.gamma_star));
    }
  }
  if (procs.empty()) procs = standard_procedures(spec.rho_star, spec.gamma_star);
  if (!mdir_override.empty()) {
    const auto w = parse_weight_list(mdir_override);
    for (auto& p : procs) {
      if (!p.mdir_weights.empty()) p.mdir_weights = w;
    }
  }
  if (a.replicates == 0) throw InvalidArgument("--replicates must be positive");

  StudyOptions opts;
  opts.replicates = a.replicates;
  opts.base_seed = a.seed;
  opts.threads = a.threads;
  opts.keep_trials = a.check_orderings;
  opts.trial.bootstrap_B = B;
  opts.trial.planning_recruitment = Cdf::uniform(spec.accrual);

  std::vector<StudyCell> cells;
  if (a.kind == "type1") {
    cells.push_back(simulate_type1(spec, *design, procs, opts));
  } else if (a.kind == "power") {
    const double th = theta0 ? *theta0 : calibrate_scenario(spec, *design);
    cells = simulate_power(spec, th, multiples, *design, procs, opts);
  } else {
    throw InvalidArgument("--kind must be type1 or power");
  }

  if (a.out.empty()) {
    write_results_csv(out, cells);
  } else {
    auto open = [](const std::string& path) {
      std::ofstream f(path);
      if (!f) throw InvalidArgument("cannot write '" + path + "'");
      return f;
    };
    auto r = open(a.out + "_results.csv");
    write_results_csv(r, cells);
    auto s = open(a.out + "_selection.csv");
    write_selection_csv(s, cells);
    auto sp = open(a.out + "_splines.csv");
    write_spline_csv(sp, cells);
  }
  if (a.check_orderings && !orderings_hold(cells, err)) return kFailure;
  return kOk;
}

// ---------------------------------------------------------------- fit-spline

struct FitArgs {
  std::string ipd;
  std::string group = "both";
  std::string knots = "0,1,2";
  std::string scales = "hazard,odds,normal";
  std::optional<double> time;
  std::optional<double> t2;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_fit_spline(const FitArgs& a, std::ostream& out) {
  const auto grid = parse_grid(a.knots, a.scales);
  const auto table = read_ipd_csv(a.ipd);
  Snapshot snap;
  if (a.time) {
    if (!a.t2) throw InvalidArgument("--time needs --t2 for the recruitment imputation");
    CounterRng rng(derive_seed(a.seed, kImputeStream));
    snap = snapshot(impute_recruitment(table, *a.t2, rng), *a.time);
  } else {
    std::vector<ObservedRecord> recs;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
      const auto& r = table.rows[i];
      recs.push_back({i, r.time, r.event, r.group});
    }
    snap = snapshot_from_records(std::move(recs), table.rows.size());
  }
  int only = -1;
  if (a.group == "0" || a.group == "1") only = a.group == "1";
  else if (a.group != "both") throw InvalidArgument("--group must be 0, 1 or both");

  std::vector<ObservedRecord> recs;
  for (const auto& r : snap.records) {
    if (only < 0 || r.group == only) recs.push_back(r);
  }
  // aic[(p, scale)] of the requested group(s).
  std::map<std::pair<std::size_t, SplineScale>, std::optional<double>> aics;
  json dumps = json::array();
  for (std::size_t p : grid.knots) {
    for (SplineScale s : grid.scales) {
      json row = {{"n_internal", p}, {"scale", std::string(to_string(s))}};
      try {
        double total = 0.0;
        for (int g = 0; g <= 1; ++g) {
          if (only >= 0 && g != only) continue;
          std::vector<ObservedRecord> gr;
          for (const auto& r : recs) {
            if (r.group == g) gr.push_back(r);
          }
          const auto m = fit_spline(gr, s, p);
          total += aic(m);
          row["model" + std::to_string(g)] = to_json(m);
        }
        row["aic"] = total;
        aics[{p, s}] = total;
      } catch (const EstimationError& e) {
        row["error"] = e.what();
        aics[{p, s}] = std::nullopt;
      }
      dumps.push_back(row);
    }
  }
  out << "n_internal";
  for (SplineScale s : grid.scales) out << ',' << to_string(s);
  out << '\n';
  for (std::size_t p : grid.knots) {
    out << p;
    for (SplineScale s : grid.scales) {
      const auto& v = aics[{p, s}];
      out << ',' << (v ? format_number(*v) : std::string("NA"));
    }
    out << '\n';
  }
  if (!a.out.empty()) emit(dumps, a.out, out);
  return kOk;
}

// ---------------------------------------------------------------- calibrate

struct CalibrateArgs {
  std::string scenario;
  double rho_star = 0.0;
  double gamma_star = 0.0;
  std::size_t n_per_group = 500;
  std::string weight;
  double target = 0.5;
  std::string variance_form = "estimator";
  DesignArgs design;
};

int cmd_calibrate(const CalibrateArgs& a, std::ostream& out) {
  ScenarioSpec spec;
  spec.rho_star = a.rho_star;
  spec.gamma_star = a.gamma_star;
  spec.n_per_group = a.n_per_group;
  if (!a.scenario.empty()) spec = scenario_from_json(read_json_file(a.scenario)).spec;
  const auto design = a.design.build(spec.t1, spec.t2);
  spec.t1 = design.t1;
  spec.t2 = design.t2;
  const WeightSpec w = a.weight.empty() ? WeightSpec::fh(spec.rho_star, spec.gamma_star) : WeightSpec::parse(a.weight);
  VarianceForm form;
  if (a.variance_form == "estimator") form = VarianceForm::kEstimatorLimit;
  else if (a.variance_form == "printed") form = VarianceForm::kAsPrinted;
  else throw InvalidArgument("--variance-form must be estimator or printed");
  auto family = [&](double theta) {
    ScenarioSpec s = spec;
    s.theta = theta;
    return scenario_assumptions(s);
  };
  const double theta = calibrate_theta(family, design, w, a.target, form);
  out << "theta0=" << format_number(theta) << " power=" << format_number(overall_power(family(theta), design, w, form))
      << " weight=" << w.to_string() << '\n';
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adaptive two-stage survival trials with weighted log-rank tests"};
  app.name("npsurv");
  app.require_subcommand(1);

  BoundsArgs bounds;
  auto* c_bounds = app.add_subcommand("bounds", "Sequential bounds (alpha1, c) of an inverse-normal design");
  c_bounds->add_option("--alpha", bounds.alpha, "One-sided level");
  c_bounds->add_option("--type", bounds.type, "obf or pocock");
  c_bounds->add_option("--weights", bounds.weights, "w1,w2");

  InterimArgs interim;
  auto* c_interim = app.add_subcommand("interim", "Interim analysis and second-stage weight selection");
  c_interim->add_option("--ipd", interim.ipd, "IPD CSV (id,time,event,group[,entry])")->required();
  interim.design.add_to(c_interim, true);
  c_interim->add_option("--mdir-weights", interim.mdir_weights, "First-stage weights");
  c_interim->add_option("--candidates", interim.candidates, "Second-stage candidate weights");
  c_interim->add_option("--knots", interim.knots, "Internal knot counts");
  c_interim->add_option("--scales", interim.scales, "Spline scales");
  c_interim->add_option("-B,--bootstrap", interim.B, "Wild bootstrap replicates");
  c_interim->add_option("--seed", interim.seed, "Random seed");
  c_interim->add_option("--accrual", interim.accrual, "Planning recruitment period (default t2)");
  c_interim->add_flag("--all-mdir-subsets", interim.all_subsets, "Report p-values of all mdir sub-collections");
  c_interim->add_option("-o,--out", interim.out, "Output JSON (default stdout)");

  FinalArgs fin;
  auto* c_final = app.add_subcommand("final", "Final analysis from an interim report");
  c_final->add_option("--ipd", fin.ipd, "IPD CSV (default: path recorded in the interim report)");
  c_final->add_option("--interim", fin.interim, "Interim JSON")->required();
  c_final->add_option("-o,--out", fin.out, "Output JSON (default stdout)");

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Monte Carlo type I error or power study");
  c_sim->add_option("--kind", sim.kind, "type1 or power");
  c_sim->add_option("--config", sim.config, "Study JSON");
  c_sim->add_option("--replicates", sim.replicates, "Simulated trials per cell");
  c_sim->add_option("--threads", sim.threads, "Worker threads (default NPSURV_THREADS or 1)");
  c_sim->add_option("--seed", sim.seed, "Base seed");
  c_sim->add_option("-o,--out", sim.out, "Output prefix for the CSV files (default: results to stdout)");
  c_sim->add_option("-B,--bootstrap", sim.B, "Wild bootstrap replicates");
  c_sim->add_option("--rho-star", sim.rho_star, "Scenario rho*");
  c_sim->add_option("--gamma-star", sim.gamma_star, "Scenario gamma*");
  c_sim->add_option("--n-per-group", sim.n_per_group, "Subjects per group");
  c_sim->add_option("--procedures", sim.procedures, "Procedure names separated by ';' (or ',')");
  c_sim->add_option("--multiples", sim.multiples, "Comma-separated multiples of theta0");
  c_sim->add_option("--theta0", sim.theta0, "Skip calibration and use this theta0");
  c_sim->add_option("--mdir-weights", sim.mdir_weights, "Override the mdir weight set of every procedure");
  c_sim->add_flag("--check-orderings", sim.check_orderings, "Check TS-optFH > TS-AD > TS-LR by 2 SE at theta0");
  sim.design.add_to(c_sim, true);

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit-spline", "AIC table of Royston-Parmar models");
  c_fit->add_option("--ipd", fit.ipd, "IPD CSV")->required();
  c_fit->add_option("--group", fit.group, "0, 1 or both");
  c_fit->add_option("--knots", fit.knots, "Internal knot counts");
  c_fit->add_option("--scales", fit.scales, "Spline scales");
  c_fit->add_option("--time", fit.time, "Analysis calendar time (default: data as given)");
  c_fit->add_option("--t2", fit.t2, "Final calendar time for recruitment imputation");
  c_fit->add_option("--seed", fit.seed, "Random seed for the imputation");
  c_fit->add_option("-o,--out", fit.out, "Model dumps JSON");

  CalibrateArgs cal;
  auto* c_cal = app.add_subcommand("calibrate", "Effect size theta0 giving the target overall power");
  c_cal->add_option("--scenario", cal.scenario, "Scenario JSON");
  c_cal->add_option("--rho-star", cal.rho_star, "Scenario rho*");
  c_cal->add_option("--gamma-star", cal.gamma_star, "Scenario gamma*");
  c_cal->add_option("--n-per-group", cal.n_per_group, "Subjects per group");
  c_cal->add_option("--weight", cal.weight, "Test weight (default fh:rho*,gamma*)");
  c_cal->add_option("--target", cal.target, "Target power");
  c_cal->add_option("--variance-form", cal.variance_form, "estimator or printed");
  cal.design.add_to(c_cal, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (c_bounds->parsed()) return cmd_bounds(bounds, out);
    if (c_interim->parsed()) return cmd_interim(interim, out);
    if (c_final->parsed()) return cmd_final(fin, out, err);
    if (c_sim->parsed()) return cmd_simulate(sim, out, err);
    if (c_fit->parsed()) return cmd_fit_spline(fit, out);
    if (c_cal->parsed()) return cmd_calibrate(cal, out);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const json::exception& e) {
    err << "error: malformed JSON input: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}

}  // namespace npsurv::cli
