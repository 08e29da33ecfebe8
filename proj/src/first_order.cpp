#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include <Eigen/Dense>

#include "sl1/simd.hpp"
#include "sl1/solver.hpp"

namespace sl1 {
namespace {

struct Candidate {
  RealVector u;
  double objective = 0.0;
  double residual = 0.0;
};

// Guesses the active set of a near-optimal iterate and solves the vertex
// equations exactly:
//   Phi_{Z,S} u_S = y_Z                       (rows with zero residual)
//   sum_{j not in Z} s_j (y_j - Phi_j u) = eps (budget constraint active)
// and the matching KKT system for a dual vector z with
//   Phi_S^T z = sign(u_S),  z_j = lambda s_j off Z.
// Either output may be useless; callers verify feasibility and evaluate the
// dual bound, both of which are valid regardless of the guess.
struct Polished {
  RealVector u;
  RealVector z;
};

std::optional<Polished> polish(const DenseMatrix& phi, std::span<const double> y, double eps,
                               std::span<const double> u_hint, std::span<const double> r_hint, double rel) {
  const std::size_t n = phi.cols();
  const std::size_t m = phi.rows();
  const double umax = norm_lp(u_hint, Norm::linf);
  const double rmax = norm_lp(r_hint, Norm::linf);
  if (umax == 0.0) return std::nullopt;

  std::vector<std::size_t> s_idx;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::fabs(u_hint[i]) > rel * umax) s_idx.push_back(i);
  }
  std::vector<std::size_t> z_idx;
  std::vector<std::size_t> off_idx;
  for (std::size_t j = 0; j < m; ++j) {
    if (eps == 0.0 || std::fabs(r_hint[j]) <= rel * rmax) {
      z_idx.push_back(j);
    } else {
      off_idx.push_back(j);
    }
  }
  const bool budget_row = !off_idx.empty();

  const auto ns = static_cast<Eigen::Index>(s_idx.size());
  const auto nz = static_cast<Eigen::Index>(z_idx.size());
  const Eigen::Index eq = nz + (budget_row ? 1 : 0);

  Eigen::MatrixXd a(eq, ns);
  Eigen::VectorXd rhs(eq);
  for (Eigen::Index r = 0; r < nz; ++r) {
    for (Eigen::Index c = 0; c < ns; ++c) a(r, c) = phi(z_idx[r], s_idx[c]);
    rhs[r] = y[z_idx[r]];
  }
  if (budget_row) {
    a.row(nz).setZero();
    double b = -eps;
    for (std::size_t j : off_idx) {
      const double s = r_hint[j] > 0.0 ? 1.0 : -1.0;
      for (Eigen::Index c = 0; c < ns; ++c) a(nz, c) += s * phi(j, s_idx[c]);
      b += s * y[j];
    }
    rhs[nz] = b;
  }
  const Eigen::VectorXd us = a.completeOrthogonalDecomposition().solve(rhs);

  Polished out{RealVector(n, 0.0), RealVector(m, 0.0)};
  for (Eigen::Index c = 0; c < ns; ++c) out.u[s_idx[c]] = us[c];

  // Dual unknowns: z_Z then lambda. Equations: one per column in S.
  const Eigen::Index nd = nz + (budget_row ? 1 : 0);
  Eigen::MatrixXd kt(ns, nd);
  Eigen::VectorXd sg(ns);
  for (Eigen::Index c = 0; c < ns; ++c) {
    const std::size_t col = s_idx[c];
    for (Eigen::Index r = 0; r < nz; ++r) kt(c, r) = phi(z_idx[r], col);
    if (budget_row) {
      double acc = 0.0;
      for (std::size_t j : off_idx) acc += (r_hint[j] > 0.0 ? 1.0 : -1.0) * phi(j, col);
      kt(c, nz) = acc;
    }
    const double ref = us[c] != 0.0 ? us[c] : u_hint[col];
    sg[c] = ref > 0.0 ? 1.0 : -1.0;
  }
  const Eigen::VectorXd dz = kt.completeOrthogonalDecomposition().solve(sg);
  for (Eigen::Index r = 0; r < nz; ++r) out.z[z_idx[r]] = dz[r];
  if (budget_row) {
    for (std::size_t j : off_idx) out.z[j] = dz[nz] * (r_hint[j] > 0.0 ? 1.0 : -1.0);
  }
  return out;
}

}  // namespace

SolverResult solve_first_order(const DenseMatrix& phi, std::span<const double> y, double epsilon,
                               const SolverConfig& config) {
  if (y.size() != phi.rows()) throw std::invalid_argument("solve_first_order: y length does not match Phi rows");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("solve_first_order: epsilon must be finite and >= 0");
  }
  if (!(config.feasibility_tol > 0.0) || !(config.objective_tol > 0.0)) {
    throw std::invalid_argument("solve_first_order: tolerances must be > 0");
  }
  if (config.max_iters == 0 || config.window == 0) {
    throw std::invalid_argument("solve_first_order: max_iters and window must be >= 1");
  }
  require_finite(y, "solve_first_order: y");
  const std::size_t n = phi.cols();
  const std::size_t m = phi.rows();
  const auto& kern = simd::kernels();

  SolverResult res;
  if (norm_lp(y, Norm::l1) <= epsilon) {
    res.u_star.assign(n, 0.0);
    res.objective = 0.0;
    res.residual_l1 = norm_lp(y, Norm::l1);
    res.status = SolverStatus::optimal;
    res.dual = RealVector(m, 0.0);
    res.dual_objective = 0.0;
    return res;
  }

  double tau = 0.0;
  double sigma = 0.0;
  if (config.step_params) {
    tau = config.step_params->tau;
    sigma = config.step_params->sigma;
    if (!(tau > 0.0) || !(sigma > 0.0)) throw std::invalid_argument("solve_first_order: step sizes must be > 0");
  } else {
    // The estimate is a lower bound on ||Phi||; pad it before use.
    const double lip = 1.02 * operator_norm_estimate(phi, config.power_iters, config.power_rng);
    tau = 0.95 / lip;
    sigma = 0.95 / lip;
  }

  RealVector u(n, 0.0), u_bar(n, 0.0), u_next(n), grad(n);
  RealVector z(m, 0.0), w(m), shifted(m);
  std::optional<Candidate> best;
  double best_dual = -std::numeric_limits<double>::infinity();
  RealVector best_dual_z;
  std::optional<double> prev_raw;

  auto consider_primal = [&](RealVector cand) {
    const double r = residual_l1(phi, cand, y);
    if (r > epsilon + config.feasibility_tol) return false;
    const double obj = norm_lp(cand, Norm::l1);
    if (!best || obj < best->objective) best = Candidate{std::move(cand), obj, r};
    return true;
  };
  auto consider_dual = [&](const RealVector& zc) {
    const double d = dual_objective(phi, y, epsilon, zc);
    if (d > best_dual) {
      best_dual = d;
      best_dual_z = zc;
    }
  };
  auto finish = [&](SolverStatus status, std::size_t iters) {
    if (best) {
      res.u_star = best->u;
      res.objective = best->objective;
      res.residual_l1 = best->residual;
    } else {
      res.u_star = u;
      res.objective = norm_lp(u, Norm::l1);
      res.residual_l1 = residual_l1(phi, u, y);
    }
    res.status = status;
    res.iters = iters;
    if (!best_dual_z.empty()) {
      res.dual = best_dual_z;
      res.dual_objective = best_dual;
    }
    return res;
  };

  for (std::size_t it = 1; it <= config.max_iters; ++it) {
    // Dual step: prox of sigma g*, g the indicator of the l1 ball around y.
    const RealVector phi_ubar = mat_vec(phi, u_bar);
    for (std::size_t j = 0; j < m; ++j) {
      w[j] = z[j] + sigma * phi_ubar[j];
      shifted[j] = w[j] / sigma - y[j];
    }
    const RealVector proj = project_l1_ball(shifted, epsilon);
    for (std::size_t j = 0; j < m; ++j) z[j] = w[j] - sigma * (y[j] + proj[j]);

    // Primal step: prox of tau ||.||_1, then extrapolation.
    grad = mat_transpose_vec(phi, z);
    for (std::size_t i = 0; i < n; ++i) grad[i] = u[i] - tau * grad[i];
    kern.soft_threshold(grad.data(), tau, u_next.data(), n);
    for (std::size_t i = 0; i < n; ++i) u_bar[i] = 2.0 * u_next[i] - u[i];
    u.swap(u_next);

    if (it % config.window != 0) continue;

    const RealVector phiu = mat_vec(phi, u);
    RealVector r(m);
    for (std::size_t j = 0; j < m; ++j) r[j] = y[j] - phiu[j];
    const double raw_obj = norm_lp(u, Norm::l1);
    const bool raw_feasible = consider_primal(u);

    RealVector neg_z(m);
    for (std::size_t j = 0; j < m; ++j) neg_z[j] = -z[j];
    consider_dual(neg_z);
    for (double rel : {1e-2, 1e-3, 1e-4, 1e-6}) {
      if (auto p = polish(phi, y, epsilon, u, r, rel)) {
        consider_primal(std::move(p->u));
        consider_dual(p->z);
      }
    }
    if (best) res.objective_history.push_back(best->objective);

    if (best && best->objective - best_dual <= config.objective_tol * (1.0 + best->objective)) {
      return finish(SolverStatus::optimal, it);
    }
    // Stall of the unpolished iterate: stop, but without a certificate.
    if (raw_feasible && prev_raw &&
        std::fabs(raw_obj - *prev_raw) <= config.objective_tol * (1.0 + raw_obj)) {
      return finish(SolverStatus::feasible_suboptimal, it);
    }
    prev_raw = raw_feasible ? std::optional<double>(raw_obj) : std::nullopt;
  }
  return finish(SolverStatus::iteration_limit, config.max_iters);
}

SolverResult solve(const DenseMatrix& phi, std::span<const double> y, double epsilon, const SolverConfig& config) {
  return config.method == SolverMethod::lp_exact ? solve_lp_exact(phi, y, epsilon, config)
                                                 : solve_first_order(phi, y, epsilon, config);
}

}  // namespace sl1
