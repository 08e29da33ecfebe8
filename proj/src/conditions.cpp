#include "sl1/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "sl1/generators.hpp"
#include "sl1/parallel.hpp"
#include "sl1/simd.hpp"

namespace sl1 {

using nlohmann::json;

double nu_gaussian() { return std::sqrt(2.0 / std::numbers::pi); }

double deviation_norm(const DenseMatrix& phi, std::span<const double> u, double nu) {
  const double nu_norm = norm_lp(u);
  if (nu_norm == 0.0) throw std::invalid_argument("deviation_norm: u is the zero vector");
  const RealVector pu = mat_vec(phi, u);
  const double l1 = simd::kernels().abs_sum(pu.data(), pu.size());
  return std::abs(l1 / static_cast<double>(phi.rows()) - nu * nu_norm) / nu_norm;
}

double deviation_cross(const DenseMatrix& phi, std::span<const double> u, std::span<const double> v) {
  const double nu_ = norm_lp(u);
  const double nv = norm_lp(v);
  if (nu_ == 0.0 || nv == 0.0) throw std::invalid_argument("deviation_cross: zero vector");
  if (std::abs(dot(u, v)) > 1e-12 * nu_ * nv) {
    throw std::invalid_argument("deviation_cross: u and v are not orthogonal");
  }
  const RealVector pu = mat_vec(phi, u);
  const RealVector pv = mat_vec(phi, v);
  const double s = simd::kernels().sign_dot(pu.data(), pv.data(), pu.size());
  return std::abs(s / static_cast<double>(phi.rows())) / nv;
}

namespace {

constexpr std::uint64_t kSaturated = std::numeric_limits<std::uint64_t>::max();

std::uint64_t binom_sat(std::size_t n, std::size_t r) {
  if (r > n) return 0;
  r = std::min(r, n - r);
  unsigned __int128 acc = 1;
  for (std::size_t i = 1; i <= r; ++i) {
    acc = acc * (n - r + i) / i;
    if (acc > kSaturated) return kSaturated;
  }
  return static_cast<std::uint64_t>(acc);
}

std::uint64_t mul_sat(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > kSaturated / a) return kSaturated;
  return a * b;
}

std::vector<std::vector<std::size_t>> combinations(std::size_t n, std::size_t r) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> c(r);
  for (std::size_t i = 0; i < r; ++i) c[i] = i;
  while (true) {
    out.push_back(c);
    std::size_t i = r;
    while (i > 0 && c[i - 1] == n - r + i - 1) --i;
    if (i == 0) break;
    ++c[i - 1];
    for (std::size_t j = i; j < r; ++j) c[j] = c[j - 1] + 1;
  }
  return out;
}

// r distinct indices from [0, n) in draw order (partial Fisher-Yates).
std::vector<std::size_t> draw_distinct(Rng& rng, std::size_t n, std::size_t r, std::vector<std::size_t> pool = {}) {
  if (pool.empty()) {
    pool.resize(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  }
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t j = i + rng.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(r);
  return pool;
}

RealVector random_direction(Rng& rng, std::size_t d) {
  RealVector u(d);
  double n = 0.0;
  while (n == 0.0) {
    for (auto& x : u) x = rng.normal();
    n = norm_lp(u);
  }
  for (auto& x : u) x /= n;
  return u;
}

void normalize(RealVector& u) {
  const double n = norm_lp(u);
  if (n > 0.0)
    for (auto& x : u) x /= n;
}

// Columns of Phi restricted to a support, stored column by column.
struct SubMatrix {
  std::size_t m = 0;
  std::vector<RealVector> cols;

  SubMatrix(const DenseMatrix& phi, const std::vector<std::size_t>& support) : m(phi.rows()) {
    cols.assign(support.size(), RealVector(m));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < support.size(); ++j) cols[j][i] = phi(i, support[j]);
  }

  RealVector apply(const RealVector& u) const {
    RealVector out(m, 0.0);
    const auto& k = simd::kernels();
    for (std::size_t j = 0; j < cols.size(); ++j)
      if (u[j] != 0.0) k.axpy(u[j], cols[j].data(), out.data(), m);
    return out;
  }

  RealVector apply_t(const RealVector& w) const {
    RealVector out(cols.size());
    const auto& k = simd::kernels();
    for (std::size_t j = 0; j < cols.size(); ++j) out[j] = k.dot(cols[j].data(), w.data(), m);
    return out;
  }
};

RealVector embed(const RealVector& c, const std::vector<std::size_t>& support, std::size_t n) {
  RealVector out(n, 0.0);
  for (std::size_t j = 0; j < support.size(); ++j) out[support[j]] = c[j];
  return out;
}

// Candidate directions on the half circle for a 2-column submatrix: every
// angle where a row changes sign, the midpoint of every cell between them,
// and, per cell, the direction of sum_i s_i phi_i (the interior maximizer of
// ||Phi u||_1 on that cell). ||Phi u||_1 is linear on each cell, so these
// contain the maximizer and minimizer on the unit circle; sign patterns of
// every cell are also represented.
std::vector<RealVector> arrangement_candidates(const SubMatrix& s) {
  const double pi = std::numbers::pi;
  std::vector<double> angles;
  for (std::size_t i = 0; i < s.m; ++i) {
    const double p = s.cols[0][i], q = s.cols[1][i];
    if (p == 0.0 && q == 0.0) continue;
    double a = std::atan2(q, p) + pi / 2.0;
    a = std::fmod(a, pi);
    if (a < 0.0) a += pi;
    angles.push_back(a);
  }
  std::sort(angles.begin(), angles.end());
  angles.erase(std::unique(angles.begin(), angles.end()), angles.end());
  auto dir = [](double a) { return RealVector{std::cos(a), std::sin(a)}; };
  std::vector<RealVector> out;
  if (angles.empty()) {
    out.push_back(dir(0.0));
    return out;
  }
  for (std::size_t c = 0; c < angles.size(); ++c) {
    const double lo = angles[c];
    const double hi = c + 1 < angles.size() ? angles[c + 1] : angles[0] + pi;
    out.push_back(dir(lo));
    const double mid = 0.5 * (lo + hi);
    const RealVector um = dir(mid);
    out.push_back(um);
    // sum_i s_i phi_i for the sign pattern of this cell
    const RealVector pm = s.apply(um);
    const RealVector sg = sign_vec(pm);
    const RealVector a = s.apply_t(sg);
    if (a[0] != 0.0 || a[1] != 0.0) {
      double t = std::fmod(std::atan2(a[1], a[0]), pi);
      if (t < 0.0) t += pi;
      if (t < lo) t += pi;
      if (t > lo && t < hi) out.push_back(dir(t));
    }
  }
  return out;
}

struct Candidate {
  double value = -1.0;
  RealVector u;  // compact
  RealVector v;  // compact (cross only)
};

// ---- norm condition ------------------------------------------------------

double norm_objective(const SubMatrix& s, const RealVector& u, double nu) {
  const RealVector pu = s.apply(u);
  const double l1 = simd::kernels().abs_sum(pu.data(), pu.size()) / static_cast<double>(s.m);
  return std::abs(l1 - nu * norm_lp(u)) / norm_lp(u);
}

void consider(Candidate& best, double value, const RealVector& u, const RealVector& v = {}) {
  if (value > best.value) {
    best.value = value;
    best.u = u;
    best.v = v;
  }
}

Candidate maximize_norm_on_support(const SubMatrix& s, const EstimationBudget& b, const RngSpec& spec, double nu,
                                   bool exact2d) {
  Candidate best;
  const std::size_t d = s.cols.size();
  if (exact2d) {
    for (const auto& u : arrangement_candidates(s)) consider(best, norm_objective(s, u, nu), u);
    return best;
  }
  const double m = static_cast<double>(s.m);
  for (std::size_t r = 0; r < b.restarts; ++r) {
    Rng rng(spec.child(r));
    const RealVector start = random_direction(rng, d);
    consider(best, norm_objective(s, start, nu), start);
    if (b.refinement == Refinement::none) continue;
    // Ascent on ||Phi u||_1: u <- normalize(Phi^T sign(Phi u)); never decreases.
    RealVector u = start;
    for (std::size_t it = 0; it < b.ascent_iters; ++it) {
      RealVector next = s.apply_t(sign_vec(s.apply(u)));
      normalize(next);
      if (norm_lp(next) == 0.0 || next == u) break;
      u = std::move(next);
      consider(best, norm_objective(s, u, nu), u);
    }
    // Projected subgradient descent on ||Phi u||_1 over the sphere.
    u = start;
    for (std::size_t it = 0; it < b.ascent_iters; ++it) {
      RealVector g = s.apply_t(sign_vec(s.apply(u)));
      for (auto& x : g) x /= m;
      const double radial = dot(g, u);
      for (std::size_t j = 0; j < d; ++j) g[j] -= radial * u[j];
      const double gn = norm_lp(g);
      if (gn == 0.0) break;
      const double step = 0.5 / std::sqrt(static_cast<double>(it) + 1.0);
      for (std::size_t j = 0; j < d; ++j) u[j] -= step * g[j] / gn;
      normalize(u);
      consider(best, norm_objective(s, u, nu), u);
    }
  }
  return best;
}

// ---- cross condition -----------------------------------------------------

struct PairGeometry {
  SubMatrix su;
  SubMatrix sv;
  // position in the u-support of each v-support index, or npos
  std::vector<std::size_t> shared;
};

constexpr std::size_t npos = static_cast<std::size_t>(-1);

PairGeometry make_pair_geometry(const DenseMatrix& phi, const std::vector<std::size_t>& su,
                                const std::vector<std::size_t>& sv) {
  PairGeometry g{SubMatrix(phi, su), SubMatrix(phi, sv), {}};
  g.shared.assign(sv.size(), npos);
  for (std::size_t j = 0; j < sv.size(); ++j) {
    const auto it = std::lower_bound(su.begin(), su.end(), sv[j]);
    if (it != su.end() && *it == sv[j]) g.shared[j] = static_cast<std::size_t>(it - su.begin());
  }
  return g;
}

// Best v for a fixed u: (1/M) Phi_v^T sign(Phi u), projected onto the
// orthogonal complement of u restricted to the v-support. Returns
// ||that|| (the maximal cross deviation for this u) and sets v.
double best_v(const PairGeometry& g, const RealVector& u, RealVector& v) {
  const RealVector s = sign_vec(g.su.apply(u));
  v = g.sv.apply_t(s);
  const double m = static_cast<double>(g.su.m);
  for (auto& x : v) x /= m;
  RealVector c(v.size(), 0.0);
  bool overlap = false;
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (g.shared[j] != npos) {
      c[j] = u[g.shared[j]];
      overlap = overlap || c[j] != 0.0;
    }
  }
  if (overlap) {
    const double coef = dot(v, c) / dot(c, c);
    for (std::size_t j = 0; j < v.size(); ++j) v[j] -= coef * c[j];
  }
  return norm_lp(v);
}

// Least-squares u with Phi_u u closest to Phi_v v: pushes sign(Phi u)
// towards sign(Phi v).
RealVector align(const PairGeometry& g, const RealVector& v) {
  const std::size_t m = g.su.m, d = g.su.cols.size();
  Eigen::MatrixXd a(m, d);
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t i = 0; i < m; ++i) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = g.su.cols[j][i];
  const RealVector target = g.sv.apply(v);
  const Eigen::Map<const Eigen::VectorXd> t(target.data(), static_cast<Eigen::Index>(m));
  const Eigen::VectorXd sol = a.colPivHouseholderQr().solve(t);
  RealVector u(sol.data(), sol.data() + d);
  normalize(u);
  return u;
}

Candidate maximize_cross_on_pair(const PairGeometry& g, const EstimationBudget& b, const RngSpec& spec, bool exact) {
  Candidate best;
  const std::size_t d = g.su.cols.size();
  RealVector v;
  auto eval = [&](const RealVector& u) {
    if (norm_lp(u) == 0.0) return;
    const double val = best_v(g, u, v);
    if (val > 0.0) consider(best, val, u, v);
  };
  const bool overlapping =
      std::any_of(g.shared.begin(), g.shared.end(), [](std::size_t p) { return p != npos; });
  if (exact) {
    if (overlapping) {
      // 2-dim u-support sharing the single v index: u must vanish there.
      for (std::size_t j = 0; j < d; ++j) {
        if (j == g.shared[0]) continue;
        RealVector u(d, 0.0);
        u[j] = 1.0;
        eval(u);
      }
    } else {
      for (const auto& u : arrangement_candidates(g.su)) eval(u);
    }
    return best;
  }
  for (std::size_t r = 0; r < b.restarts; ++r) {
    Rng rng(spec.child(r));
    RealVector u = random_direction(rng, d);
    if (overlapping && r % 2 == 1) {
      // start with u already vanishing on the shared coordinates
      for (std::size_t j = 0; j < g.shared.size(); ++j)
        if (g.shared[j] != npos) u[g.shared[j]] = 0.0;
      if (norm_lp(u) == 0.0) u = random_direction(rng, d);
      normalize(u);
    }
    double cur = best_v(g, u, v);
    RealVector cur_v = v;
    consider(best, cur, u, v);
    if (b.refinement == Refinement::none) continue;
    double step = 0.5;
    for (std::size_t it = 0; it < b.ascent_iters; ++it) {
      RealVector trial;
      if (it % 4 == 0 && norm_lp(cur_v) > 0.0) {
        trial = align(g, cur_v);
      } else {
        trial = u;
        for (auto& x : trial) x += step * rng.normal();
        normalize(trial);
      }
      if (norm_lp(trial) == 0.0) continue;
      const double val = best_v(g, trial, v);
      if (val > cur) {
        cur = val;
        u = trial;
        cur_v = v;
        consider(best, cur, u, v);
      } else if (it % 4 != 0) {
        step = std::max(step * 0.7, 1e-3);
      }
    }
  }
  return best;
}

struct Scored {
  double value = 0.0;
  RealVector u, v;  // full length
  bool valid = false;
};

// Max over per-index results; ties keep the lowest index.
Scored merge_max(const std::vector<Scored>& parts) {
  Scored best;
  for (const auto& p : parts)
    if (p.valid && (!best.valid || p.value > best.value)) best = p;
  return best;
}

void check_k(const DenseMatrix& phi, std::size_t k, const char* what) {
  if (k == 0) throw std::invalid_argument(std::string(what) + ": K must be at least 1");
  if (2 * k > phi.cols()) {
    throw std::invalid_argument(std::string(what) + ": 2K=" + std::to_string(2 * k) + " exceeds N=" +
                                std::to_string(phi.cols()));
  }
}

}  // namespace

Delta2Estimate estimate_delta2K(const DenseMatrix& phi, std::size_t k, const EstimationBudget& budget,
                                const RngSpec& rng, double nu) {
  check_k(phi, k, "estimate_delta2K");
  const std::size_t n = phi.cols(), d = 2 * k;
  Delta2Estimate est;
  est.supports_total = binom_sat(n, d);
  if (budget.samples == 0) return est;
  est.exhaustive = est.supports_total <= budget.exhaustive_cap;
  est.per_support_exact = d == 2 && budget.refinement == Refinement::local_ascent;

  std::vector<std::vector<std::size_t>> supports;
  if (est.exhaustive) {
    supports = combinations(n, d);
  } else {
    supports.resize(budget.samples);
    for (std::size_t i = 0; i < budget.samples; ++i) {
      Rng r(rng.child(i).child(0));
      supports[i] = draw_distinct(r, n, d);
      std::sort(supports[i].begin(), supports[i].end());
    }
  }
  std::vector<Scored> parts(supports.size());
  parallel_for(supports.size(), budget.threads, [&](std::size_t i) {
    const SubMatrix s(phi, supports[i]);
    const Candidate c = maximize_norm_on_support(s, budget, rng.child(i).child(1), nu, est.per_support_exact);
    if (c.value < 0.0) return;
    Scored& out = parts[i];
    out.u = embed(c.u, supports[i], n);
    out.value = deviation_norm(phi, out.u, nu);
    out.valid = true;
  });
  est.supports_evaluated = supports.size();
  const Scored best = merge_max(parts);
  if (best.valid) {
    est.lower = best.value;
    est.witness = {best.u, {}, best.value};
  }
  return est;
}

Delta3Estimate estimate_delta3K(const DenseMatrix& phi, std::size_t k, const EstimationBudget& budget,
                                const RngSpec& rng) {
  check_k(phi, k, "estimate_delta3K");
  const std::size_t n = phi.cols();
  const bool disjoint_possible = 3 * k <= n;
  Delta3Estimate est;
  est.pairs_total = mul_sat(binom_sat(n, 2 * k), binom_sat(n, k));
  if (budget.samples == 0) return est;
  est.exhaustive = est.pairs_total <= budget.exhaustive_cap;
  est.per_support_exact = k == 1 && budget.refinement == Refinement::local_ascent;

  std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> pairs;
  if (est.exhaustive) {
    const auto us = combinations(n, 2 * k);
    const auto vs = combinations(n, k);
    pairs.reserve(us.size() * vs.size());
    for (const auto& a : us)
      for (const auto& b : vs) pairs.emplace_back(a, b);
  } else {
    pairs.resize(budget.samples);
    for (std::size_t i = 0; i < budget.samples; ++i) {
      Rng r(rng.child(i).child(0));
      std::vector<std::size_t> su, sv;
      if (disjoint_possible && i % 2 == 0) {
        auto all = draw_distinct(r, n, 3 * k);
        su.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(2 * k));
        sv.assign(all.begin() + static_cast<std::ptrdiff_t>(2 * k), all.end());
      } else {
        su = draw_distinct(r, n, 2 * k);
        const std::size_t anchor = su[r.below(su.size())];
        std::vector<std::size_t> rest;
        for (std::size_t j = 0; j < n; ++j)
          if (j != anchor) rest.push_back(j);
        sv = draw_distinct(r, n - 1, k - 1, rest);
        sv.push_back(anchor);
      }
      std::sort(su.begin(), su.end());
      std::sort(sv.begin(), sv.end());
      pairs[i] = {su, sv};
    }
  }

  std::vector<Scored> parts(pairs.size());
  std::vector<char> is_overlap(pairs.size(), 0);
  parallel_for(pairs.size(), budget.threads, [&](std::size_t i) {
    const auto& [su, sv] = pairs[i];
    const PairGeometry g = make_pair_geometry(phi, su, sv);
    is_overlap[i] = std::any_of(g.shared.begin(), g.shared.end(), [](std::size_t p) { return p != npos; });
    const Candidate c = maximize_cross_on_pair(g, budget, rng.child(i).child(1), est.per_support_exact);
    if (c.value <= 0.0) return;
    Scored& out = parts[i];
    out.u = embed(c.u, su, n);
    out.v = embed(c.v, sv, n);
    try {
      out.value = deviation_cross(phi, out.u, out.v);
      out.valid = true;
    } catch (const std::invalid_argument&) {
      // projection lost orthogonality to rounding; drop the candidate
    }
  });
  est.pairs_evaluated = pairs.size();

  std::vector<Scored> disjoint(parts.size()), overlap(parts.size());
  for (std::size_t i = 0; i < parts.size(); ++i) (is_overlap[i] ? overlap : disjoint)[i] = parts[i];
  const Scored bd = merge_max(disjoint);
  const Scored bo = merge_max(overlap);
  if (bd.valid) {
    est.disjoint_lower = bd.value;
    est.disjoint_witness = {bd.u, bd.v, bd.value};
  }
  if (bo.valid) {
    est.overlap_lower = bo.value;
    est.overlap_witness = {bo.u, bo.v, bo.value};
  }
  est.lower = std::max(est.disjoint_lower, est.overlap_lower);
  return est;
}

ConditionEstimate estimate_conditions(const DenseMatrix& phi, std::size_t k, const EstimationBudget& budget,
                                      const RngSpec& rng, double nu) {
  ConditionEstimate e;
  e.nu = nu;
  e.k = k;
  e.refinement = budget.refinement;
  e.restarts = budget.restarts;
  e.delta2 = estimate_delta2K(phi, k, budget, rng.child(2), nu);
  e.delta3 = estimate_delta3K(phi, k, budget, rng.child(3));
  e.delta2K_lower = e.delta2.lower;
  e.delta3K_lower = e.delta3.lower;
  e.samples = e.delta2.supports_evaluated + e.delta3.pairs_evaluated;
  e.exhaustive = e.delta2.exhaustive && e.delta3.exhaustive &&
                 e.delta2.supports_evaluated == e.delta2.supports_total &&
                 e.delta3.pairs_evaluated == e.delta3.pairs_total;
  e.certified = e.exhaustive && e.delta2.per_support_exact && e.delta3.per_support_exact;
  return e;
}

std::string to_string(ConditionVerdict v) {
  switch (v) {
    case ConditionVerdict::satisfied: return "satisfied";
    case ConditionVerdict::violated: return "violated";
    case ConditionVerdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

ConditionVerdict theorem_condition_holds(const ConditionEstimate& est) {
  const double sum = est.delta2K_lower + est.delta3K_lower;
  const double threshold = est.nu - 0.5;
  if (sum > threshold) return ConditionVerdict::violated;
  if (est.exhaustive) return ConditionVerdict::satisfied;
  return ConditionVerdict::inconclusive;
}

std::uint64_t lemma_sample_bound(const LemmaBoundInputs& in) {
  if (!(in.C > 0.0) || !(in.c > 0.0)) throw std::invalid_argument("lemma_sample_bound: C and c must be positive");
  if (!(in.delta > 0.0 && in.delta <= 1.0)) throw std::invalid_argument("lemma_sample_bound: delta outside (0, 1]");
  if (in.k == 0 || in.k > in.n) throw std::invalid_argument("lemma_sample_bound: need 1 <= K <= N");
  const double ratio = 2.0 * static_cast<double>(in.n) / static_cast<double>(in.k);
  if (ratio <= 1.0) throw std::invalid_argument("lemma_sample_bound: 2N/K must exceed 1");
  const double v = in.C * std::pow(in.delta, -6.0) * static_cast<double>(in.k) * std::log(ratio);
  if (!(v < 1.8e19)) throw std::invalid_argument("lemma_sample_bound: bound does not fit in 64 bits");
  return static_cast<std::uint64_t>(std::ceil(v));
}

double lemma_probability_bound(double c, double delta, std::size_t m) {
  if (!(c > 0.0)) throw std::invalid_argument("lemma_probability_bound: c must be positive");
  if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("lemma_probability_bound: delta outside (0, 1]");
  if (m == 0) throw std::invalid_argument("lemma_probability_bound: M must be at least 1");
  const double p = 1.0 - 8.0 * std::exp(-c * delta * delta * static_cast<double>(m));
  return std::clamp(p, 0.0, std::nextafter(1.0, 0.0));
}

LemmaCheckReport montecarlo_lemma_check(std::size_t n, std::size_t m, std::size_t k, double delta,
                                        std::size_t trials, std::size_t samples_per_trial, const RngSpec& rng,
                                        std::size_t threads) {
  if (n == 0 || m == 0 || k == 0 || k > n) throw std::invalid_argument("montecarlo_lemma_check: need 1 <= K <= N, M >= 1");
  if (!(delta > 0.0)) throw std::invalid_argument("montecarlo_lemma_check: delta must be positive");
  struct Part {
    std::size_t norm_viol = 0, cross_viol = 0, cross_count = 0;
    double sketch_sum = 0.0, max_norm = 0.0, max_cross = 0.0;
  };
  const double nu = kNuGaussian;
  const double md = static_cast<double>(m);
  std::vector<Part> parts(trials);
  parallel_for(trials, threads, [&](std::size_t t) {
    const DenseMatrix phi = gen_gaussian_matrix(m, n, rng.child(t).child(0));
    Rng r(rng.child(t).child(1));
    Part& p = parts[t];
    const auto& kern = simd::kernels();
    auto random_unit = [&](const std::vector<std::size_t>& s) { return random_direction(r, s.size()); };
    for (std::size_t i = 0; i < samples_per_trial; ++i) {
      // norm form
      auto s = draw_distinct(r, n, k);
      std::sort(s.begin(), s.end());
      const SubMatrix sub(phi, s);
      const RealVector u = random_unit(s);
      const RealVector pu = sub.apply(u);
      const double sketch = kern.abs_sum(pu.data(), m) / md;
      p.sketch_sum += sketch;
      const double dn = std::abs(sketch - nu);
      p.max_norm = std::max(p.max_norm, dn);
      if (dn > delta) ++p.norm_viol;

      // cross form: disjoint supports on even samples, overlapping on odd
      std::vector<std::size_t> su, sv;
      if (2 * k <= n && i % 2 == 0) {
        auto all = draw_distinct(r, n, 2 * k);
        su.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));
        sv.assign(all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
      } else {
        su = draw_distinct(r, n, k);
        const std::size_t anchor = su[r.below(su.size())];
        std::vector<std::size_t> rest;
        for (std::size_t j = 0; j < n; ++j)
          if (j != anchor) rest.push_back(j);
        sv = draw_distinct(r, n - 1, k - 1, rest);
        sv.push_back(anchor);
      }
      std::sort(su.begin(), su.end());
      std::sort(sv.begin(), sv.end());
      const RealVector uc = random_unit(su);
      const RealVector ufull = embed(uc, su, n);
      RealVector vfull = embed(random_unit(sv), sv, n);
      RealVector c(n, 0.0);
      for (std::size_t j : sv) c[j] = ufull[j];
      const double cc = dot(c, c);
      if (cc > 0.0) {
        const double coef = dot(vfull, c) / cc;
        for (std::size_t j : sv) vfull[j] -= coef * c[j];
      }
      const double vn = norm_lp(vfull);
      if (vn == 0.0) continue;  // v collapsed (|S_v| = 1 and fully shared)
      std::vector<double> vc(sv.size());
      for (std::size_t j = 0; j < sv.size(); ++j) vc[j] = vfull[sv[j]] / vn;
      const SubMatrix subu(phi, su), subv(phi, sv);
      const RealVector pu2 = subu.apply(uc);
      const RealVector pv = subv.apply(vc);
      const double dc = std::abs(kern.sign_dot(pu2.data(), pv.data(), m) / md);
      ++p.cross_count;
      p.max_cross = std::max(p.max_cross, dc);
      if (dc > delta) ++p.cross_viol;
    }
  });
  LemmaCheckReport rep;
  rep.n = n;
  rep.m = m;
  rep.k = k;
  rep.trials = trials;
  rep.samples_per_trial = samples_per_trial;
  rep.delta = delta;
  std::size_t cross_count = 0;
  double sketch = 0.0;
  for (const auto& p : parts) {
    rep.norm_violations += p.norm_viol;
    rep.cross_violations += p.cross_viol;
    cross_count += p.cross_count;
    sketch += p.sketch_sum;
    rep.max_norm_deviation = std::max(rep.max_norm_deviation, p.max_norm);
    rep.max_cross_deviation = std::max(rep.max_cross_deviation, p.max_cross);
  }
  const double total = static_cast<double>(trials * samples_per_trial);
  if (total > 0.0) {
    rep.norm_violation_rate = static_cast<double>(rep.norm_violations) / total;
    rep.mean_l1_sketch = sketch / total;
  }
  if (cross_count > 0) rep.cross_violation_rate = static_cast<double>(rep.cross_violations) / static_cast<double>(cross_count);
  return rep;
}

std::string to_string(Refinement r) { return r == Refinement::none ? "none" : "local-ascent"; }

Refinement parse_refinement(const std::string& s) {
  if (s == "none") return Refinement::none;
  if (s == "local-ascent") return Refinement::local_ascent;
  throw std::invalid_argument("unknown refinement '" + s + "' (expected none or local-ascent)");
}

json to_json(const EstimationBudget& b) {
  return {{"samples", b.samples},           {"restarts", b.restarts},
          {"ascent_iters", b.ascent_iters}, {"exhaustive_cap", b.exhaustive_cap},
          {"refinement", to_string(b.refinement)}};
}

EstimationBudget estimation_budget_from_json(const json& j) {
  EstimationBudget b;
  if (!j.is_object()) throw std::invalid_argument("budget: expected a JSON object");
  b.samples = j.value("samples", b.samples);
  b.restarts = j.value("restarts", b.restarts);
  b.ascent_iters = j.value("ascent_iters", b.ascent_iters);
  b.exhaustive_cap = j.value("exhaustive_cap", b.exhaustive_cap);
  if (j.contains("refinement")) b.refinement = parse_refinement(j.at("refinement").get<std::string>());
  return b;
}

namespace {

json witness_json(const Witness& w, bool with_v) {
  if (w.u.empty()) return nullptr;
  json out = {{"support_u", SupportSet::of(w.u).indices()}, {"u", w.u}, {"value", w.value}};
  if (with_v) {
    out["support_v"] = SupportSet::of(w.v).indices();
    out["v"] = w.v;
  }
  return out;
}

Witness witness_from_json(const json& j) {
  Witness w;
  if (j.is_null()) return w;
  w.u = j.at("u").get<RealVector>();
  if (j.contains("v")) w.v = j.at("v").get<RealVector>();
  w.value = j.at("value").get<double>();
  return w;
}

}  // namespace

json to_json(const ConditionEstimate& e) {
  return {
      {"nu", e.nu},
      {"delta2K_lower", e.delta2K_lower},
      {"delta3K_lower", e.delta3K_lower},
      {"K", e.k},
      {"samples", e.samples},
      {"refinement", to_string(e.refinement)},
      {"restarts", e.restarts},
      {"exhaustive", e.exhaustive},
      {"certified", e.certified},
      {"delta2K",
       {{"lower", e.delta2.lower},
        {"supports_evaluated", e.delta2.supports_evaluated},
        {"supports_total", e.delta2.supports_total},
        {"exhaustive", e.delta2.exhaustive},
        {"per_support_exact", e.delta2.per_support_exact},
        {"witness", witness_json(e.delta2.witness, false)}}},
      {"delta3K",
       {{"lower", e.delta3.lower},
        {"disjoint_lower", e.delta3.disjoint_lower},
        {"overlap_lower", e.delta3.overlap_lower},
        {"pairs_evaluated", e.delta3.pairs_evaluated},
        {"pairs_total", e.delta3.pairs_total},
        {"exhaustive", e.delta3.exhaustive},
        {"per_support_exact", e.delta3.per_support_exact},
        {"disjoint_witness", witness_json(e.delta3.disjoint_witness, true)},
        {"overlap_witness", witness_json(e.delta3.overlap_witness, true)}}},
  };
}

ConditionEstimate condition_estimate_from_json(const json& j) {
  ConditionEstimate e;
  e.nu = j.at("nu").get<double>();
  e.delta2K_lower = j.at("delta2K_lower").get<double>();
  e.delta3K_lower = j.at("delta3K_lower").get<double>();
  e.k = j.at("K").get<std::size_t>();
  e.samples = j.at("samples").get<std::size_t>();
  e.refinement = parse_refinement(j.at("refinement").get<std::string>());
  e.restarts = j.value("restarts", std::size_t{0});
  e.exhaustive = j.at("exhaustive").get<bool>();
  e.certified = j.value("certified", false);
  if (!(e.delta2K_lower >= 0.0) || !(e.delta3K_lower >= 0.0)) {
    throw std::invalid_argument("condition estimate: delta lower bounds must be nonnegative");
  }
  if (j.contains("delta2K")) {
    const auto& d = j.at("delta2K");
    e.delta2.lower = d.at("lower").get<double>();
    e.delta2.supports_evaluated = d.at("supports_evaluated").get<std::size_t>();
    e.delta2.supports_total = d.at("supports_total").get<std::size_t>();
    e.delta2.exhaustive = d.at("exhaustive").get<bool>();
    e.delta2.per_support_exact = d.at("per_support_exact").get<bool>();
    e.delta2.witness = witness_from_json(d.at("witness"));
  }
  if (j.contains("delta3K")) {
    const auto& d = j.at("delta3K");
    e.delta3.lower = d.at("lower").get<double>();
    e.delta3.disjoint_lower = d.at("disjoint_lower").get<double>();
    e.delta3.overlap_lower = d.at("overlap_lower").get<double>();
    e.delta3.pairs_evaluated = d.at("pairs_evaluated").get<std::size_t>();
    e.delta3.pairs_total = d.at("pairs_total").get<std::size_t>();
    e.delta3.exhaustive = d.at("exhaustive").get<bool>();
    e.delta3.per_support_exact = d.at("per_support_exact").get<bool>();
    e.delta3.disjoint_witness = witness_from_json(d.at("disjoint_witness"));
    e.delta3.overlap_witness = witness_from_json(d.at("overlap_witness"));
  }
  return e;
}

json to_json(const LemmaCheckReport& r) {
  return {{"N", r.n},
          {"M", r.m},
          {"K", r.k},
          {"delta", r.delta},
          {"trials", r.trials},
          {"samples_per_trial", r.samples_per_trial},
          {"norm_violations", r.norm_violations},
          {"cross_violations", r.cross_violations},
          {"norm_violation_rate", r.norm_violation_rate},
          {"cross_violation_rate", r.cross_violation_rate},
          {"mean_l1_sketch", r.mean_l1_sketch},
          {"max_norm_deviation", r.max_norm_deviation},
          {"max_cross_deviation", r.max_cross_deviation}};
}

}  // namespace sl1
