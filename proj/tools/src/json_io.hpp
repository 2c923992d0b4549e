#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "npsurv/cond_power.hpp"
#include "npsurv/design.hpp"
#include "npsurv/mdir.hpp"
#include "npsurv/scenario.hpp"
#include "npsurv/spline.hpp"

namespace npsurv::cli {

using nlohmann::json;

/// Rounds to 6 significant digits so that every emitted number is stable
/// under textual diffs.
double round6(double x);

/// Throws InvalidArgument naming the first key of `j` outside `allowed`.
void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where);

json to_json(const TwoStageDesign& d);
/// Design from {alpha, alpha0, combination: {type, w1, w2}, bounds: {type, alpha1, c}, t1, t2}.
/// OBF and Pocock bounds are computed when not given.
TwoStageDesign design_from_json(const json& j);

/// Scenario from {control_rate, rho_star, gamma_star, theta | theta_multiple, accrual, t1, t2,
/// n_per_group}. `theta_multiple` is returned separately and left for the caller to resolve.
struct ScenarioInput {
  ScenarioSpec spec;
  bool has_theta = false;
  double theta_multiple = 1.0;
};
ScenarioInput scenario_from_json(const json& j);
json to_json(const ScenarioSpec& s);

json to_json(const SplineModel& m);
SplineModel spline_from_json(const json& j);

json to_json(const CpReport& r);
json to_json(const MdirResult& r, const std::vector<WeightSpec>& weights);

json weights_to_json(const std::vector<WeightSpec>& w);
std::vector<WeightSpec> weights_from_json(const json& j);

json read_json_file(const std::string& path);

}  // namespace npsurv::cli
