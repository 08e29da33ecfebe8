#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "oracle/vertex_enum.hpp"
#include "sl1/generators.hpp"
#include "sl1/solver.hpp"
#include "support/pinned.hpp"

using namespace sl1;

namespace {

SolverConfig lp_config() {
  SolverConfig c;
  c.method = SolverMethod::lp_exact;
  return c;
}

SparseInstance noisy_instance(std::size_t n, std::size_t m, std::size_t k, std::uint64_t seed) {
  InstanceSpec spec;
  spec.n = n;
  spec.m = m;
  spec.k = k;
  spec.noise = {NoiseSpec::Kind::sparse, std::max<std::size_t>(1, m / 8), 1.0, 0.99};
  return make_instance(spec, RngSpec{seed, 0});
}

// Projection onto the l1 ball by bisection on the threshold.
RealVector project_by_bisection(const RealVector& v, double r) {
  double l1 = 0.0, hi = 0.0;
  for (double x : v) {
    l1 += std::fabs(x);
    hi = std::max(hi, std::fabs(x));
  }
  if (l1 <= r) return v;
  double lo = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    double s = 0.0;
    for (double x : v) s += std::max(std::fabs(x) - mid, 0.0);
    (s > r ? lo : hi) = mid;
  }
  RealVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::copysign(std::max(std::fabs(v[i]) - hi, 0.0), v[i]);
  return out;
}

}  // namespace

TEST_CASE("lp_formulate shape") {
  const DenseMatrix phi(1, 1, {2.0});
  const LpProblem lp = lp_formulate(phi, RealVector{1.0}, 0.5);
  CHECK(lp.a.cols() == 3);
  CHECK(lp.a.rows() == 3);
  CHECK(lp.b.size() == 3);
  CHECK(lp.c == RealVector{1, 1, 0});
  CHECK(lp.n_signal == 1);
  CHECK(lp.n_residual == 1);
  const LpProblem big = lp_formulate(DenseMatrix(4, 7), RealVector(4, 0.0), 1.0);
  CHECK(big.a.cols() == 2 * 7 + 4);
  CHECK(big.a.rows() == 2 * 4 + 1);
  CHECK_THROWS_AS(lp_formulate(phi, RealVector{1.0, 2.0}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(lp_formulate(phi, RealVector{1.0}, -1.0), std::invalid_argument);
}

TEST_CASE("solve_lp reports infeasible and unbounded problems") {
  LpProblem infeasible{DenseMatrix(1, 1, {1.0}), {-1.0}, {1.0}, 0, 0};
  CHECK(solve_lp(infeasible).status == LpSolution::Status::infeasible);
  LpProblem unbounded{DenseMatrix(1, 1, {-1.0}), {0.0}, {-1.0}, 0, 0};
  CHECK(solve_lp(unbounded).status == LpSolution::Status::unbounded);
  LpProblem easy{DenseMatrix(2, 2, {1, 1, 1, -1}), {4, 1}, {-1, -2}, 0, 0};
  const LpSolution s = solve_lp(easy);
  REQUIRE(s.status == LpSolution::Status::optimal);
  CHECK(s.objective == doctest::Approx(-8.0));
}

TEST_CASE("zero is optimal when the measurements fit in the budget") {
  const SparseInstance inst = noisy_instance(10, 8, 2, 1);
  const double eps = norm_lp(inst.y, Norm::l1) * 1.01;
  for (const SolverConfig& c : {lp_config(), SolverConfig{}}) {
    const SolverResult r = solve(inst.phi, inst.y, eps, c);
    CHECK(r.status == SolverStatus::optimal);
    CHECK(r.objective <= 1e-7);
  }
  const SolverResult lp = solve_lp_exact(inst.phi, inst.y, eps);
  CHECK(lp.objective == 0.0);
  CHECK(lp.u_star == RealVector(10, 0.0));
}

TEST_CASE("equality constraint with an invertible matrix") {
  const RealVector y{3.0, -1.0, 0.5};
  const SolverResult id = solve_lp_exact(DenseMatrix::identity(3), y, 0.0);
  REQUIRE(id.status == SolverStatus::optimal);
  for (std::size_t i = 0; i < 3; ++i) CHECK(id.u_star[i] == doctest::Approx(y[i]).epsilon(1e-12));

  const DenseMatrix phi = gen_gaussian_matrix(4, 4, RngSpec{5, 0});
  const RealVector b{1.0, 2.0, -0.5, 0.25};
  const SolverResult r = solve_lp_exact(phi, b, 0.0);
  REQUIRE(r.status == SolverStatus::optimal);
  Eigen::Matrix4d a;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) a(i, j) = phi(i, j);
  const Eigen::Vector4d u = a.fullPivLu().solve(Eigen::Vector4d(b.data()));
  for (int i = 0; i < 4; ++i) CHECK(r.u_star[i] == doctest::Approx(u(i)).epsilon(1e-9));
}

TEST_CASE("simplex matches vertex enumeration at micro scale") {
  for (const auto& c : pinned::micro_cases()) {
    const auto& inst = c.inst;
    const auto ref = oracle::bpdn_l1_by_vertices(inst.phi.entries(), inst.phi.rows(), inst.phi.cols(), inst.y,
                                                 inst.epsilon);
    REQUIRE(ref.has_value());
    const SolverResult r = solve_lp_exact(inst.phi, inst.y, inst.epsilon);
    REQUIRE(r.status == SolverStatus::optimal);
    CHECK(std::fabs(r.objective - ref->objective) <= 1e-9);
  }
}

TEST_CASE("first-order matches simplex") {
  const auto cases = pinned::solver_cases();
  for (std::size_t i = 0; i < cases.size(); i += 10) {
    const auto& inst = cases[i].inst;
    const SolverResult lp = solve_lp_exact(inst.phi, inst.y, inst.epsilon);
    const SolverResult fo = solve_first_order(inst.phi, inst.y, inst.epsilon);
    REQUIRE(lp.status == SolverStatus::optimal);
    REQUIRE(is_feasible_status(fo.status));
    CHECK(std::fabs(fo.objective - lp.objective) <= 1e-6 * (1.0 + lp.objective));
    CHECK(fo.residual_l1 <= inst.epsilon + 1e-8);
    CHECK(lp.residual_l1 <= inst.epsilon + 1e-8);
  }
}

TEST_CASE("noiseless recovery with M >= N") {
  InstanceSpec spec;
  spec.n = 20;
  spec.m = 30;
  spec.k = 4;
  spec.signal.amplitude.law = Amplitude::Law::gaussian;
  for (std::uint64_t t = 0; t < 3; ++t) {
    const SparseInstance inst = make_instance(spec, RngSpec{6, t});
    const SolverResult r = solve_first_order(inst.phi, inst.y, 0.0);
    REQUIRE(is_feasible_status(r.status));
    RealVector h(inst.x.size());
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = r.u_star[i] - inst.x[i];
    CHECK(norm_lp(h) <= 1e-5);
  }
}

TEST_CASE("dual certificates bound the optimum") {
  const SparseInstance inst = noisy_instance(15, 12, 2, 7);
  const SolverResult lp = solve_lp_exact(inst.phi, inst.y, inst.epsilon);
  REQUIRE(lp.dual.has_value());
  CHECK(lp.dual_objective == doctest::Approx(lp.objective).epsilon(1e-9));
  Rng rng(RngSpec{7, 1});
  for (int t = 0; t < 200; ++t) {
    RealVector z(inst.y.size());
    for (double& v : z) v = rng.normal();
    CHECK(dual_objective(inst.phi, inst.y, inst.epsilon, z) <= lp.objective + 1e-12);
  }
}

TEST_CASE("feasible statuses satisfy the constraint") {
  SolverConfig tight;
  tight.max_iters = 50;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const SparseInstance inst = noisy_instance(30, 15, 3, 100 + s);
    for (const SolverConfig& c : {SolverConfig{}, tight}) {
      const SolverResult r = solve_first_order(inst.phi, inst.y, inst.epsilon, c);
      if (is_feasible_status(r.status)) CHECK(r.residual_l1 <= inst.epsilon + c.feasibility_tol);
      CHECK(r.residual_l1 == doctest::Approx(residual_l1(inst.phi, r.u_star, inst.y)));
      CHECK(r.objective == doctest::Approx(norm_lp(r.u_star, Norm::l1)));
    }
  }
}

TEST_CASE("best objective is non-increasing") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const SparseInstance inst = noisy_instance(40, 25, 4, 200 + s);
    const SolverResult r = solve_first_order(inst.phi, inst.y, inst.epsilon);
    for (std::size_t i = 1; i < r.objective_history.size(); ++i)
      CHECK(r.objective_history[i] <= r.objective_history[i - 1]);
  }
}

TEST_CASE("scaling covariance") {
  const SparseInstance inst = noisy_instance(20, 15, 3, 9);
  const SolverResult base = solve_lp_exact(inst.phi, inst.y, inst.epsilon);
  for (double c : {0.01, 3.0, 1000.0}) {
    RealVector y = inst.y;
    for (double& v : y) v *= c;
    const SolverResult lp = solve_lp_exact(inst.phi, y, c * inst.epsilon);
    CHECK(lp.objective == doctest::Approx(c * base.objective).epsilon(1e-9));
    const SolverResult fo = solve_first_order(inst.phi, y, c * inst.epsilon);
    CHECK(fo.objective == doctest::Approx(c * base.objective).epsilon(1e-6));
  }
}

TEST_CASE("iteration limit keeps the best feasible iterate") {
  const SparseInstance inst = noisy_instance(40, 25, 4, 11);
  SolverConfig c;
  c.max_iters = 3;
  c.window = 1;
  const SolverResult r = solve_first_order(inst.phi, inst.y, inst.epsilon, c);
  CHECK(r.iters <= 3);
  CHECK(r.status != SolverStatus::optimal);
  CHECK(r.u_star.size() == 40);
}

TEST_CASE("invalid solver inputs") {
  const DenseMatrix phi = DenseMatrix::identity(2);
  CHECK_THROWS_AS(solve_first_order(phi, RealVector{1}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(solve_first_order(phi, RealVector{1, 1}, -1.0), std::invalid_argument);
  SolverConfig bad;
  bad.feasibility_tol = 0.0;
  CHECK_THROWS_AS(solve_first_order(phi, RealVector{1, 1}, 0.0, bad), std::invalid_argument);
}

TEST_CASE("project_l1_ball") {
  CHECK(project_l1_ball(RealVector{3, 0}, 1) == RealVector{1, 0});
  CHECK(project_l1_ball(RealVector{0.2, 0.3}, 1) == RealVector{0.2, 0.3});
  const RealVector sym = project_l1_ball(RealVector{1, 1}, 1);
  CHECK(sym[0] == doctest::Approx(0.5));
  CHECK(sym[1] == doctest::Approx(0.5));
  CHECK(project_l1_ball(RealVector{1, -2}, 0) == RealVector{0, 0});
  CHECK_THROWS_AS(project_l1_ball(RealVector{1}, -1), std::invalid_argument);
  Rng rng(RngSpec{41, 0});
  for (int t = 0; t < 100; ++t) {
    RealVector v(1 + rng.below(30));
    for (double& x : v) x = 3.0 * rng.normal();
    const double r = 5.0 * rng.uniform();
    const RealVector p = project_l1_ball(v, r);
    const RealVector q = project_by_bisection(v, r);
    CHECK(norm_lp(p, Norm::l1) <= r * (1 + 1e-12) + 1e-15);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(p[i] == doctest::Approx(q[i]).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("soft_threshold") {
  CHECK(soft_threshold(RealVector{3, -1}, 1) == RealVector{2, 0});
  const RealVector v{0.5, -2, 0, 7};
  CHECK(soft_threshold(v, 0) == v);
  CHECK(soft_threshold(v, 7) == RealVector{0, 0, 0, 0});
  CHECK(soft_threshold(v, 10) == RealVector{0, 0, 0, 0});
  CHECK_THROWS_AS(soft_threshold(v, -1), std::invalid_argument);
}

TEST_CASE("operator_norm_estimate") {
  const RngSpec r{3, 0};
  CHECK(operator_norm_estimate(DenseMatrix::identity(5), 100, r) == doctest::Approx(1.0).epsilon(1e-10));
  const RealVector d{3, 1};
  CHECK(operator_norm_estimate(DenseMatrix::diagonal(d), 100, r) == doctest::Approx(3.0).epsilon(1e-6));
  for (std::uint64_t s = 0; s < 10; ++s) {
    const DenseMatrix a = gen_gaussian_matrix(12, 20, RngSpec{s, 5});
    const double est = operator_norm_estimate(a, 200, r);
    Eigen::MatrixXd e(12, 20);
    for (int i = 0; i < 12; ++i)
      for (int j = 0; j < 20; ++j) e(i, j) = a(i, j);
    const double exact = Eigen::JacobiSVD<Eigen::MatrixXd>(e).singularValues()(0);
    CHECK(est <= a.frobenius_norm());
    CHECK(est <= exact * (1 + 1e-12));
    CHECK(est >= 0.99 * exact);
  }
  CHECK_THROWS_AS(operator_norm_estimate(DenseMatrix::identity(2), 0, r), std::invalid_argument);
}

TEST_CASE("solver JSON round trip") {
  SolverConfig c;
  c.method = SolverMethod::lp_exact;
  c.objective_tol = 1e-5;
  c.step_params = StepParams{0.1, 0.2};
  const SolverConfig back = solver_config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));

  const SparseInstance inst = noisy_instance(6, 5, 1, 3);
  const SolverResult r = solve_lp_exact(inst.phi, inst.y, inst.epsilon);
  const nlohmann::json j = to_json(r);
  for (const char* key : {"objective", "residual_l1", "status", "iters", "u_star"}) CHECK(j.contains(key));
  const SolverResult rb = solver_result_from_json(j);
  CHECK(rb.u_star == r.u_star);
  CHECK(rb.objective == r.objective);
  CHECK(rb.status == r.status);
  CHECK(to_json(rb) == j);

  for (SolverStatus s : {SolverStatus::optimal, SolverStatus::feasible_suboptimal, SolverStatus::infeasible_detected,
                         SolverStatus::iteration_limit})
    CHECK(parse_solver_status(to_string(s)) == s);
  CHECK(parse_solver_method("lp-exact") == SolverMethod::lp_exact);
  CHECK(parse_solver_method("first-order") == SolverMethod::first_order);
  CHECK_THROWS(parse_solver_method("simplex"));
}
