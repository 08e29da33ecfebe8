#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "sl1/solver.hpp"

namespace sl1 {

LpProblem lp_formulate(const DenseMatrix& phi, std::span<const double> y, double epsilon) {
  if (y.size() != phi.rows()) {
    throw std::invalid_argument("lp_formulate: y has " + std::to_string(y.size()) + " entries, Phi has " +
                                std::to_string(phi.rows()) + " rows");
  }
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("lp_formulate: epsilon must be finite and >= 0");
  }
  require_finite(y, "lp_formulate: y");
  const std::size_t n = phi.cols();
  const std::size_t m = phi.rows();
  const std::size_t vars = 2 * n + m;
  const std::size_t rows = 2 * m + 1;

  LpProblem lp{DenseMatrix(rows, vars), RealVector(rows, 0.0), RealVector(vars, 0.0), n, m};
  for (std::size_t j = 0; j < 2 * n; ++j) lp.c[j] = 1.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      lp.a(i, j) = -phi(i, j);
      lp.a(i, n + j) = phi(i, j);
      lp.a(m + i, j) = phi(i, j);
      lp.a(m + i, n + j) = -phi(i, j);
    }
    lp.a(i, 2 * n + i) = -1.0;
    lp.a(m + i, 2 * n + i) = -1.0;
    lp.a(2 * m, 2 * n + i) = 1.0;
    lp.b[i] = -y[i];
    lp.b[m + i] = y[i];
  }
  lp.b[2 * m] = epsilon;
  return lp;
}

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-10;
constexpr std::size_t kDegenerateRun = 50;

// Dense simplex tableau in canonical form. Columns: structural variables,
// one slack per row, then artificials. The objective row holds reduced costs
// and, in its last entry, minus the objective value.
class Tableau {
 public:
  Tableau(const LpProblem& lp) : m_(lp.a.rows()), n_(lp.a.cols()) {
    for (std::size_t i = 0; i < m_; ++i) {
      if (lp.b[i] < 0.0) ++n_art_;
    }
    cols_ = n_ + m_ + n_art_;
    t_.assign(m_ * (cols_ + 1), 0.0);
    obj_.assign(cols_ + 1, 0.0);
    basis_.resize(m_);
    std::size_t art = 0;
    for (std::size_t i = 0; i < m_; ++i) {
      const double flip = lp.b[i] < 0.0 ? -1.0 : 1.0;
      for (std::size_t j = 0; j < n_; ++j) at(i, j) = flip * lp.a(i, j);
      at(i, n_ + i) = flip;
      rhs(i) = flip * lp.b[i];
      if (flip < 0.0) {
        const std::size_t col = n_ + m_ + art++;
        at(i, col) = 1.0;
        basis_[i] = col;
      } else {
        basis_[i] = n_ + i;
      }
    }
  }

  std::size_t rows() const { return m_; }
  std::size_t structural() const { return n_; }
  bool is_artificial(std::size_t col) const { return col >= n_ + m_; }

  double& at(std::size_t i, std::size_t j) { return t_[i * (cols_ + 1) + j]; }
  double at(std::size_t i, std::size_t j) const { return t_[i * (cols_ + 1) + j]; }
  double& rhs(std::size_t i) { return at(i, cols_); }
  double rhs(std::size_t i) const { return at(i, cols_); }
  const std::vector<std::size_t>& basis() const { return basis_; }
  const std::vector<double>& objective_row() const { return obj_; }

  // Reduced costs for cost vector `cost` (size cols_) given the current basis.
  void set_costs(const std::vector<double>& cost) {
    for (std::size_t j = 0; j <= cols_; ++j) obj_[j] = j < cols_ ? cost[j] : 0.0;
    for (std::size_t i = 0; i < m_; ++i) {
      const double cb = cost[basis_[i]];
      if (cb == 0.0) continue;
      for (std::size_t j = 0; j <= cols_; ++j) obj_[j] -= cb * at(i, j);
    }
  }

  std::vector<double> phase1_costs() const {
    std::vector<double> cost(cols_, 0.0);
    for (std::size_t j = n_ + m_; j < cols_; ++j) cost[j] = 1.0;
    return cost;
  }

  std::vector<double> phase2_costs(const RealVector& c) const {
    std::vector<double> cost(cols_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) cost[j] = c[j];
    return cost;
  }

  void pivot(std::size_t r, std::size_t q) {
    const double p = at(r, q);
    nz_.clear();
    for (std::size_t j = 0; j <= cols_; ++j) {
      if (at(r, j) == 0.0) continue;
      at(r, j) /= p;
      nz_.push_back(j);
    }
    at(r, q) = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r) continue;
      const double f = at(i, q);
      if (f == 0.0) continue;
      for (std::size_t j : nz_) at(i, j) -= f * at(r, j);
      at(i, q) = 0.0;
    }
    const double f = obj_[q];
    if (f != 0.0) {
      for (std::size_t j : nz_) obj_[j] -= f * at(r, j);
      obj_[q] = 0.0;
    }
    basis_[r] = q;
  }

  enum class Outcome { optimal, unbounded, limit };

  // Dantzig's rule (most negative reduced cost). After a run of degenerate
  // pivots it switches to Bland's rule (lowest-index improving column, ratio
  // ties to the lowest basic index) until the objective moves again, which
  // rules out cycling.
  Outcome run(bool allow_artificial, std::size_t& pivots, std::size_t max_pivots) {
    std::size_t degenerate = 0;
    while (true) {
      const bool bland = degenerate >= kDegenerateRun;
      std::size_t q = cols_;
      double most = -kCostTol;
      for (std::size_t j = 0; j < cols_; ++j) {
        if (!allow_artificial && is_artificial(j)) continue;
        if (obj_[j] < most) {
          q = j;
          if (bland) break;
          most = obj_[j];
        }
      }
      if (q == cols_) return Outcome::optimal;
      if (pivots >= max_pivots) return Outcome::limit;

      std::size_t r = m_;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m_; ++i) {
        const double a = at(i, q);
        if (a <= kPivotTol) continue;
        const double ratio = std::max(rhs(i), 0.0) / a;
        const double tie = 1e-12 * (1.0 + std::fabs(ratio));
        if (r == m_ || ratio < best - tie) {
          best = ratio;
          r = i;
        } else if (ratio <= best + tie && basis_[i] < basis_[r]) {
          best = std::min(best, ratio);
          r = i;
        }
      }
      if (r == m_) return Outcome::unbounded;
      degenerate = best * std::fabs(obj_[q]) <= 1e-14 ? degenerate + 1 : 0;
      pivot(r, q);
      ++pivots;
    }
  }

  // After phase 1: pivot artificials out of the basis where possible.
  // Rows where that fails are redundant and are dropped.
  void expel_artificials() {
    for (std::size_t i = 0; i < m_;) {
      if (!is_artificial(basis_[i])) {
        ++i;
        continue;
      }
      std::size_t q = cols_;
      double best = kPivotTol;
      for (std::size_t j = 0; j < n_ + m_; ++j) {
        if (std::fabs(at(i, j)) > best) {
          best = std::fabs(at(i, j));
          q = j;
        }
      }
      if (q < cols_) {
        pivot(i, q);
        ++i;
      } else {
        drop_row(i);
        redundant_ = true;
      }
    }
  }

  bool had_redundant_rows() const { return redundant_; }

  std::vector<double> primal() const {
    std::vector<double> x(n_ + m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      if (basis_[i] < n_ + m_) x[basis_[i]] = std::max(rhs(i), 0.0);
    }
    return x;
  }

 private:
  void drop_row(std::size_t r) {
    t_.erase(t_.begin() + static_cast<std::ptrdiff_t>(r * (cols_ + 1)),
             t_.begin() + static_cast<std::ptrdiff_t>((r + 1) * (cols_ + 1)));
    basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(r));
    --m_;
  }

  std::size_t m_;
  std::size_t n_;
  std::size_t n_art_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> t_;
  std::vector<double> obj_;
  std::vector<std::size_t> basis_;
  bool redundant_ = false;
  std::vector<std::size_t> nz_;
};

// Re-solves B x_B = b on the final basis of [A | I]. Returns false when the
// refined point is not primal feasible to tolerance.
bool refine_basis(const LpProblem& lp, const std::vector<std::size_t>& basis, std::vector<double>& x) {
  const std::size_t m = lp.a.rows();
  const std::size_t n = lp.a.cols();
  if (basis.size() != m) return false;
  Eigen::MatrixXd b(m, m);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t col = basis[k];
    for (std::size_t i = 0; i < m; ++i) {
      b(i, k) = col < n ? lp.a(i, col) : (col - n == i ? 1.0 : 0.0);
    }
  }
  Eigen::Map<const Eigen::VectorXd> rhs(lp.b.data(), m);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(b);
  if (!lu.isInvertible()) return false;
  const Eigen::VectorXd xb = lu.solve(rhs);
  for (std::size_t k = 0; k < m; ++k) {
    if (!(xb[k] >= -1e-9)) return false;
  }
  std::vector<double> out(n + m, 0.0);
  for (std::size_t k = 0; k < m; ++k) out[basis[k]] = std::max(xb[k], 0.0);
  x = std::move(out);
  return true;
}

}  // namespace

LpSolution solve_lp(const LpProblem& lp, std::size_t max_pivots) {
  if (lp.b.size() != lp.a.rows() || lp.c.size() != lp.a.cols()) {
    throw std::invalid_argument("solve_lp: inconsistent problem dimensions");
  }
  Tableau tab(lp);
  LpSolution sol;

  tab.set_costs(tab.phase1_costs());
  auto outcome = tab.run(true, sol.pivots, max_pivots);
  if (outcome == Tableau::Outcome::limit) {
    sol.status = LpSolution::Status::pivot_limit;
    return sol;
  }
  double bnorm = 0.0;
  for (double v : lp.b) bnorm = std::max(bnorm, std::fabs(v));
  if (-tab.objective_row().back() > 1e-9 * (1.0 + bnorm)) {
    sol.status = LpSolution::Status::infeasible;
    return sol;
  }
  tab.expel_artificials();

  tab.set_costs(tab.phase2_costs(lp.c));
  outcome = tab.run(false, sol.pivots, max_pivots);
  if (outcome == Tableau::Outcome::unbounded) {
    sol.status = LpSolution::Status::unbounded;
    return sol;
  }
  if (outcome == Tableau::Outcome::limit) {
    sol.status = LpSolution::Status::pivot_limit;
    return sol;
  }

  std::vector<double> full = tab.primal();
  if (!tab.had_redundant_rows()) refine_basis(lp, tab.basis(), full);

  const std::size_t n = lp.a.cols();
  sol.status = LpSolution::Status::optimal;
  sol.x.assign(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(n));
  sol.objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) sol.objective += lp.c[j] * sol.x[j];
  // Reduced cost of slack i is -w_i.
  sol.row_duals.resize(lp.a.rows());
  for (std::size_t i = 0; i < lp.a.rows(); ++i) sol.row_duals[i] = -tab.objective_row()[n + i];
  return sol;
}

SolverResult solve_lp_exact(const DenseMatrix& phi, std::span<const double> y, double epsilon,
                            const SolverConfig& config) {
  const LpProblem lp = lp_formulate(phi, y, epsilon);
  const LpSolution sol = solve_lp(lp, config.max_iters);
  const std::size_t n = phi.cols();
  const std::size_t m = phi.rows();

  SolverResult res;
  res.iters = sol.pivots;
  if (sol.status == LpSolution::Status::infeasible) {
    res.status = SolverStatus::infeasible_detected;
    res.u_star.assign(n, 0.0);
  } else if (sol.status != LpSolution::Status::optimal) {
    res.status = SolverStatus::iteration_limit;
    res.u_star.assign(n, 0.0);
  } else {
    res.u_star.resize(n);
    for (std::size_t j = 0; j < n; ++j) res.u_star[j] = sol.x[j] - sol.x[n + j];
    // z = p - q with p = -w(first block), q = -w(second block).
    RealVector z(m);
    for (std::size_t i = 0; i < m; ++i) z[i] = -sol.row_duals[i] + sol.row_duals[m + i];
    res.dual_objective = dual_objective(phi, y, epsilon, z);
    res.dual = std::move(z);
  }
  res.objective = norm_lp(res.u_star, Norm::l1);
  res.residual_l1 = residual_l1(phi, res.u_star, y);
  if (sol.status == LpSolution::Status::optimal) {
    // A basis that lost feasibility to rounding is reported as non-converged.
    res.status = res.residual_l1 <= epsilon + config.feasibility_tol ? SolverStatus::optimal
                                                                     : SolverStatus::iteration_limit;
  }
  return res;
}

}  // namespace sl1
