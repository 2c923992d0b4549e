#include "json_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "npsurv/error.hpp"

namespace npsurv::cli {

double round6(double x) {
  if (!std::isfinite(x) || x == 0.0) return x;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return std::strtod(buf, nullptr);
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw InvalidArgument(where + ": expected a JSON object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || item.key() == a;
    if (!ok) throw InvalidArgument(where + ": unknown key '" + item.key() + "'");
  }
}

namespace {

double number(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw InvalidArgument(where + ": missing '" + key + "'");
  if (!j.at(key).is_number()) throw InvalidArgument(where + ": '" + std::string(key) + "' must be a number");
  return j.at(key).get<double>();
}

double number_or(const json& j, const char* key, double fallback, const std::string& where) {
  return j.contains(key) ? number(j, key, where) : fallback;
}

}  // namespace

json to_json(const TwoStageDesign& d) {
  json comb;
  if (d.combination.type == CombinationType::kFisher) {
    comb = {{"type", "fisher"}};
  } else {
    comb = {{"type", "inverse_normal"}, {"w1", round6(d.combination.w1)}, {"w2", round6(d.combination.w2)}};
  }
  return {{"alpha", round6(d.alpha)},
          {"alpha0", round6(d.alpha0)},
          {"combination", comb},
          {"bounds", {{"type", std::string(to_string(d.bound_type))}, {"alpha1", round6(d.alpha1)}, {"c", round6(d.c)}}},
          {"t1", round6(d.t1)},
          {"t2", round6(d.t2)}};
}

TwoStageDesign design_from_json(const json& j) {
  const std::string where = "design";
  reject_unknown_keys(j, {"alpha", "alpha0", "combination", "bounds", "t1", "t2"}, where);
  Combination comb = Combination::equal_weights();
  if (j.contains("combination")) {
    const auto& c = j.at("combination");
    reject_unknown_keys(c, {"type", "w1", "w2"}, where + ".combination");
    const std::string type = c.value("type", "inverse_normal");
    if (type == "fisher") {
      comb = Combination::fisher();
    } else if (type == "inverse_normal") {
      comb = Combination::inverse_normal(number_or(c, "w1", comb.w1, where), number_or(c, "w2", comb.w2, where));
    } else {
      throw InvalidArgument(where + ": unknown combination type '" + type + "'");
    }
  }
  const double alpha = number_or(j, "alpha", 0.025, where);
  const double t1 = number(j, "t1", where), t2 = number(j, "t2", where);
  BoundType bt = BoundType::kObf;
  json b = j.value("bounds", json::object());
  reject_unknown_keys(b, {"type", "alpha1", "c"}, where + ".bounds");
  if (b.contains("type")) bt = parse_bound_type(b.at("type").get<std::string>());
  TwoStageDesign d;
  if (bt == BoundType::kExplicit) {
    d.alpha = alpha;
    d.combination = comb;
    d.bound_type = bt;
    d.alpha1 = number(b, "alpha1", where + ".bounds");
    d.c = number(b, "c", where + ".bounds");
    d.t1 = t1;
    d.t2 = t2;
  } else {
    d = make_design(alpha, bt, comb, t1, t2);
  }
  d.alpha0 = number_or(j, "alpha0", 1.0, where);
  d.validate();
  return d;
}

ScenarioInput scenario_from_json(const json& j) {
  const std::string where = "scenario";
  reject_unknown_keys(j, {"control_rate", "rho_star", "gamma_star", "theta", "theta_multiple", "accrual", "t1", "t2",
                          "n_per_group"},
                      where);
  ScenarioInput in;
  auto& s = in.spec;
  s.control_rate = number_or(j, "control_rate", s.control_rate, where);
  s.rho_star = number_or(j, "rho_star", s.rho_star, where);
  s.gamma_star = number_or(j, "gamma_star", s.gamma_star, where);
  if (j.contains("theta") && j.contains("theta_multiple")) {
    throw InvalidArgument(where + ": give either 'theta' or 'theta_multiple'");
  }
  if (j.contains("theta")) {
    s.theta = number(j, "theta", where);
    in.has_theta = true;
  }
  in.theta_multiple = number_or(j, "theta_multiple", 1.0, where);
  s.accrual = number_or(j, "accrual", s.accrual, where);
  s.t1 = number_or(j, "t1", s.t1, where);
  s.t2 = number_or(j, "t2", s.t2, where);
  if (j.contains("n_per_group")) {
    if (!j.at("n_per_group").is_number_unsigned()) throw InvalidArgument(where + ": n_per_group must be a count");
    s.n_per_group = j.at("n_per_group").get<std::size_t>();
  }
  s.validate();
  return in;
}

json to_json(const ScenarioSpec& s) {
  return {{"control_rate", round6(s.control_rate)}, {"rho_star", round6(s.rho_star)},
          {"gamma_star", round6(s.gamma_star)},     {"theta", round6(s.theta)},
          {"accrual", round6(s.accrual)},           {"t1", round6(s.t1)},
          {"t2", round6(s.t2)},                     {"n_per_group", s.n_per_group}};
}

// Spline dumps keep full precision: they are inputs to later computations.
json to_json(const SplineModel& m) {
  json knots = json::array();
  knots.push_back(m.knots().lower);
  for (double k : m.knots().internal) knots.push_back(k);
  knots.push_back(m.knots().upper);
  return {{"scale", std::string(to_string(m.scale()))},
          {"knots", knots},
          {"phi", m.phi()},
          {"loglik", m.loglik()},
          {"aic", aic(m)}};
}

SplineModel spline_from_json(const json& j) {
  reject_unknown_keys(j, {"scale", "knots", "phi", "loglik", "aic"}, "spline");
  const auto knots = j.at("knots").get<std::vector<double>>();
  if (knots.size() < 2) throw InvalidArgument("spline: at least two knots required");
  KnotVector k;
  k.lower = knots.front();
  k.upper = knots.back();
  k.internal.assign(knots.begin() + 1, knots.end() - 1);
  return SplineModel(parse_scale(j.at("scale").get<std::string>()), k, j.at("phi").get<std::vector<double>>(),
                     j.value("loglik", 0.0));
}

json to_json(const CpReport& r) {
  json cands = json::array();
  for (const auto& c : r.candidates) {
    cands.push_back({{"weight", c.spec.to_string()},
                     {"drift_increment", round6(c.drift_increment)},
                     {"sd_increment", round6(c.sd_increment)},
                     {"standardized_drift", round6(c.standardized_drift)},
                     {"conditional_power", round6(c.conditional_power)}});
  }
  return {{"conditional_error", round6(r.conditional_error)},
          {"candidates", cands},
          {"selected", r.selected},
          {"selected_weight", r.selected_spec().to_string()}};
}

json to_json(const MdirResult& r, const std::vector<WeightSpec>& weights) {
  json subset = json::array();
  for (auto i : r.achieving_subset) subset.push_back(weights.at(i).to_string());
  return {{"weights", weights_to_json(weights)},
          {"statistic", round6(r.statistic)},
          {"p_value", round6(r.p_value)},
          {"bootstrap_reps", r.bootstrap_reps},
          {"achieving_subset", subset}};
}

json weights_to_json(const std::vector<WeightSpec>& w) {
  json out = json::array();
  for (const auto& s : w) out.push_back(s.to_string());
  return out;
}

std::vector<WeightSpec> weights_from_json(const json& j) {
  if (j.is_string()) return parse_weight_list(j.get<std::string>());
  std::vector<WeightSpec> out;
  for (const auto& item : j) out.push_back(WeightSpec::parse(item.get<std::string>()));
  return out;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidArgument("'" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace npsurv::cli
