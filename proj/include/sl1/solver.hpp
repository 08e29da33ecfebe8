#pragma once

// Solvers for
//
//     minimize ||u||_1  subject to  ||y - Phi u||_1 <= epsilon.
//
// Two routes share one result type: a dense two-phase simplex on the LP
// reformulation (the reference, for small problems) and a Chambolle-Pock
// primal-dual iteration with active-set polishing (the scalable path).
// Both report a dual vector z; any z gives the lower bound
//     D(z) = (<z, y> - epsilon ||z||_inf) / max(1, ||Phi^T z||_inf)
// on the optimal value, which is how optimality is certified.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sl1/core.hpp"
#include "sl1/rng.hpp"

namespace sl1 {

enum class SolverMethod { lp_exact, first_order };
enum class SolverStatus { optimal, feasible_suboptimal, infeasible_detected, iteration_limit };

std::string to_string(SolverMethod m);
std::string to_string(SolverStatus s);
SolverMethod parse_solver_method(const std::string& s);
SolverStatus parse_solver_status(const std::string& s);

struct StepParams {
  double tau = 0.0;    // primal step
  double sigma = 0.0;  // dual step; tau * sigma * ||Phi||^2 must stay below 1
};

struct SolverConfig {
  SolverMethod method = SolverMethod::first_order;
  double feasibility_tol = 1e-8;  // absolute, on ||y - Phi u||_1 - epsilon
  double objective_tol = 1e-7;    // relative
  std::size_t max_iters = 50000;  // iterations (first-order) or pivots (simplex)
  std::optional<StepParams> step_params;
  std::size_t window = 100;       // first-order check / stall window
  std::size_t power_iters = 100;
  RngSpec power_rng{0x5eed, 0};
};

struct SolverResult {
  RealVector u_star;
  double objective = 0.0;
  double residual_l1 = 0.0;
  SolverStatus status = SolverStatus::iteration_limit;
  std::size_t iters = 0;
  // Dual certificate, when one was found, and its objective D(z).
  std::optional<RealVector> dual;
  double dual_objective = 0.0;
  // Best feasible objective at every check of the first-order method.
  std::vector<double> objective_history;
};

// min c^T x subject to A x <= b, x >= 0.
struct LpProblem {
  DenseMatrix a;
  RealVector b;
  RealVector c;
  std::size_t n_signal = 0;    // N: variables are (u+, u-, t) in that order
  std::size_t n_residual = 0;  // M
};

// Variables (u+, u-, t) in R^N_+ x R^N_+ x R^M_+; rows
//   -Phi u+ + Phi u- - t <= -y,   Phi u+ - Phi u- - t <= y,   sum t <= epsilon.
LpProblem lp_formulate(const DenseMatrix& phi, std::span<const double> y, double epsilon);

struct LpSolution {
  enum class Status { optimal, infeasible, unbounded, pivot_limit };
  Status status = Status::pivot_limit;
  RealVector x;
  double objective = 0.0;
  // Multipliers w <= 0 of the inequality rows (dual of the LP).
  RealVector row_duals;
  std::size_t pivots = 0;
};

// Dense tableau, two phases, Bland's rule. The final basis is re-solved with
// an LU factorization to clean up accumulated pivoting error.
LpSolution solve_lp(const LpProblem& lp, std::size_t max_pivots = 200000);

SolverResult solve_lp_exact(const DenseMatrix& phi, std::span<const double> y, double epsilon,
                            const SolverConfig& config = {});
SolverResult solve_first_order(const DenseMatrix& phi, std::span<const double> y, double epsilon,
                               const SolverConfig& config = {});
// Dispatches on config.method.
SolverResult solve(const DenseMatrix& phi, std::span<const double> y, double epsilon,
                   const SolverConfig& config = {});

// Euclidean projection onto {z : ||z||_1 <= radius} (sort-based threshold).
RealVector project_l1_ball(std::span<const double> v, double radius);

// sign(v_i) max(|v_i| - tau, 0) with the usual sign (0 maps to 0), not the
// +-1 convention of sign_vec.
RealVector soft_threshold(std::span<const double> v, double tau);

// Power iteration on Phi^T Phi. Never exceeds ||Phi||_2 (it is ||Phi v|| for
// a unit v).
double operator_norm_estimate(const DenseMatrix& phi, std::size_t iters, const RngSpec& rng);

// D(z) as above: a lower bound on the optimal value for every z.
double dual_objective(const DenseMatrix& phi, std::span<const double> y, double epsilon,
                      std::span<const double> z);

// status is optimal or feasible_suboptimal.
inline bool is_feasible_status(SolverStatus s) {
  return s == SolverStatus::optimal || s == SolverStatus::feasible_suboptimal;
}

nlohmann::json to_json(const SolverConfig& c);
SolverConfig solver_config_from_json(const nlohmann::json& j);
// {objective, residual_l1, status, iters, u_star, ...}
nlohmann::json to_json(const SolverResult& r);
SolverResult solver_result_from_json(const nlohmann::json& j);

}  // namespace sl1
