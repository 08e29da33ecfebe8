#include <stdexcept>

#include "sl1/solver.hpp"

namespace sl1 {

std::string to_string(SolverMethod m) { return m == SolverMethod::lp_exact ? "lp-exact" : "first-order"; }

SolverMethod parse_solver_method(const std::string& s) {
  if (s == "lp-exact") return SolverMethod::lp_exact;
  if (s == "first-order") return SolverMethod::first_order;
  throw std::invalid_argument("unknown solver method '" + s + "' (expected lp-exact or first-order)");
}

std::string to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::optimal:
      return "optimal";
    case SolverStatus::feasible_suboptimal:
      return "feasible-suboptimal";
    case SolverStatus::infeasible_detected:
      return "infeasible-detected";
    case SolverStatus::iteration_limit:
      return "iteration-limit";
  }
  return "iteration-limit";
}

SolverStatus parse_solver_status(const std::string& s) {
  if (s == "optimal") return SolverStatus::optimal;
  if (s == "feasible-suboptimal") return SolverStatus::feasible_suboptimal;
  if (s == "infeasible-detected") return SolverStatus::infeasible_detected;
  if (s == "iteration-limit") return SolverStatus::iteration_limit;
  throw std::invalid_argument("unknown solver status '" + s + "'");
}

nlohmann::json to_json(const SolverConfig& c) {
  nlohmann::json j = {{"method", to_string(c.method)},
                      {"feasibility_tol", c.feasibility_tol},
                      {"objective_tol", c.objective_tol},
                      {"max_iters", c.max_iters},
                      {"window", c.window},
                      {"power_iters", c.power_iters},
                      {"power_seed", c.power_rng.seed},
                      {"power_stream", c.power_rng.stream}};
  if (c.step_params) {
    j["step_params"] = {{"tau", c.step_params->tau}, {"sigma", c.step_params->sigma}};
  } else {
    j["step_params"] = nullptr;
  }
  return j;
}

SolverConfig solver_config_from_json(const nlohmann::json& j) {
  SolverConfig c;
  c.method = parse_solver_method(j.value("method", to_string(c.method)));
  c.feasibility_tol = j.value("feasibility_tol", c.feasibility_tol);
  c.objective_tol = j.value("objective_tol", c.objective_tol);
  c.max_iters = j.value("max_iters", c.max_iters);
  c.window = j.value("window", c.window);
  c.power_iters = j.value("power_iters", c.power_iters);
  c.power_rng.seed = j.value("power_seed", c.power_rng.seed);
  c.power_rng.stream = j.value("power_stream", c.power_rng.stream);
  if (j.contains("step_params") && !j.at("step_params").is_null()) {
    c.step_params = StepParams{j.at("step_params").at("tau").get<double>(),
                               j.at("step_params").at("sigma").get<double>()};
  }
  if (!(c.feasibility_tol > 0.0) || !(c.objective_tol > 0.0)) {
    throw std::invalid_argument("solver tolerances must be > 0");
  }
  if (c.max_iters == 0) throw std::invalid_argument("max_iters must be >= 1");
  return c;
}

nlohmann::json to_json(const SolverResult& r) {
  nlohmann::json j = {{"objective", r.objective},
                      {"residual_l1", r.residual_l1},
                      {"status", to_string(r.status)},
                      {"iters", r.iters},
                      {"u_star", r.u_star}};
  if (r.dual) {
    j["certificate"] = {{"dual", *r.dual}, {"dual_objective", r.dual_objective}};
  } else {
    j["certificate"] = nullptr;
  }
  return j;
}

SolverResult solver_result_from_json(const nlohmann::json& j) {
  SolverResult r;
  r.objective = j.at("objective").get<double>();
  r.residual_l1 = j.at("residual_l1").get<double>();
  r.status = parse_solver_status(j.at("status").get<std::string>());
  r.iters = j.at("iters").get<std::size_t>();
  r.u_star = j.at("u_star").get<RealVector>();
  if (j.contains("certificate") && !j.at("certificate").is_null()) {
    r.dual = j.at("certificate").at("dual").get<RealVector>();
    r.dual_objective = j.at("certificate").at("dual_objective").get<double>();
  }
  return r;
}

}  // namespace sl1
