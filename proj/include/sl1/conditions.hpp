#pragma once

// Empirical checks of the matrix conditions behind the recovery guarantee:
//
//   |(1/M) ||Phi u||_1 - nu ||u|| | <= delta_2K ||u||          u in Sigma_2K
//   |(1/M) <sign(Phi u), Phi v>|   <= delta_3K ||v||          u in Sigma_2K,
//                                                               v in Sigma_K, <u,v> = 0
//
// The true constants are suprema over unions of subspaces, so the estimators
// report LOWER bounds, each witnessed by a stored vector (pair) that
// re-evaluates to the reported value. Small problems can be enumerated
// support by support; for 2-dimensional supports (K = 1) the per-support
// maximization is exact (sweep over the line arrangement of the rows), so an
// exhaustive K = 1 estimate certifies the constants.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "sl1/core.hpp"
#include "sl1/rng.hpp"

namespace sl1 {

// E|g| for g ~ N(0,1), i.e. sqrt(2/pi).
inline constexpr double kNuGaussian = 0.79788456080286535588;
double nu_gaussian();

// |(1/M)||Phi u||_1 - nu ||u|| | / ||u||. Throws on u == 0.
double deviation_norm(const DenseMatrix& phi, std::span<const double> u, double nu = kNuGaussian);

// |(1/M) <sign_vec(Phi u), Phi v>| / ||v||. Throws unless u, v != 0 and
// |<u,v>| <= 1e-12 ||u|| ||v||.
double deviation_cross(const DenseMatrix& phi, std::span<const double> u, std::span<const double> v);

enum class Refinement { none, local_ascent };

struct EstimationBudget {
  // Random supports (pairs) in sampled mode. 0 disables estimation entirely.
  std::size_t samples = 200;
  // Starting directions per support.
  std::size_t restarts = 8;
  std::size_t ascent_iters = 50;
  // Enumerate every support (pair) when there are at most this many.
  std::size_t exhaustive_cap = 10000;
  Refinement refinement = Refinement::local_ascent;
  std::size_t threads = 1;
};

struct Witness {
  RealVector u;
  RealVector v;  // empty for the norm condition
  double value = 0.0;
};

struct Delta2Estimate {
  double lower = 0.0;
  Witness witness;
  std::size_t supports_evaluated = 0;
  std::size_t supports_total = 0;  // binom(N, 2K)
  bool exhaustive = false;
  // Per-support maximization exact (2-dimensional supports with ascent on).
  bool per_support_exact = false;
};

struct Delta3Estimate {
  double lower = 0.0;  // max of both families
  double disjoint_lower = 0.0;
  double overlap_lower = 0.0;
  Witness disjoint_witness;
  Witness overlap_witness;
  std::size_t pairs_evaluated = 0;
  std::size_t pairs_total = 0;  // binom(N, 2K) * binom(N, K)
  bool exhaustive = false;
  bool per_support_exact = false;
};

Delta2Estimate estimate_delta2K(const DenseMatrix& phi, std::size_t k, const EstimationBudget& budget,
                                const RngSpec& rng, double nu = kNuGaussian);
Delta3Estimate estimate_delta3K(const DenseMatrix& phi, std::size_t k, const EstimationBudget& budget,
                                const RngSpec& rng);

struct ConditionEstimate {
  double nu = kNuGaussian;
  double delta2K_lower = 0.0;
  double delta3K_lower = 0.0;
  std::size_t k = 1;
  std::size_t samples = 0;  // supports + pairs evaluated
  Refinement refinement = Refinement::local_ascent;
  std::size_t restarts = 0;
  // Every support and pair enumerated.
  bool exhaustive = false;
  // Exhaustive and per-support maximization exact: the estimates are the
  // constants themselves, up to rounding.
  bool certified = false;
  Delta2Estimate delta2;
  Delta3Estimate delta3;
};

ConditionEstimate estimate_conditions(const DenseMatrix& phi, std::size_t k, const EstimationBudget& budget,
                                      const RngSpec& rng, double nu = kNuGaussian);

enum class ConditionVerdict { satisfied, violated, inconclusive };
std::string to_string(ConditionVerdict v);

// violated: the lower bounds already exceed nu - 1/2.
// satisfied: certified estimate with delta2K + delta3K <= nu - 1/2.
// inconclusive otherwise.
ConditionVerdict theorem_condition_holds(const ConditionEstimate& est);

// C and c are unspecified universal constants; the defaults of 1 are
// placeholders, not known values.
struct LemmaBoundInputs {
  double C = 1.0;
  double c = 1.0;
  double delta = 1.0;
  std::size_t k = 1;
  std::size_t n = 1;
};

// ceil(C delta^-6 K ln(2N/K)).
std::uint64_t lemma_sample_bound(const LemmaBoundInputs& in);
// 1 - 8 exp(-c delta^2 M), clamped to [0, 1).
double lemma_probability_bound(double c, double delta, std::size_t m);

struct LemmaCheckReport {
  std::size_t n = 0, m = 0, k = 0, trials = 0, samples_per_trial = 0;
  double delta = 0.0;
  std::size_t norm_violations = 0;
  std::size_t cross_violations = 0;
  double norm_violation_rate = 0.0;
  double cross_violation_rate = 0.0;
  // Mean of (1/M)||Phi u||_1 over all sampled unit vectors.
  double mean_l1_sketch = 0.0;
  double max_norm_deviation = 0.0;
  double max_cross_deviation = 0.0;
};

// Fresh Gaussian Phi per trial; per trial, `samples_per_trial` random unit
// K-sparse u and as many orthogonal K-sparse pairs (alternating disjoint and
// overlapping supports). Counts deviations above delta.
LemmaCheckReport montecarlo_lemma_check(std::size_t n, std::size_t m, std::size_t k, double delta,
                                        std::size_t trials, std::size_t samples_per_trial, const RngSpec& rng,
                                        std::size_t threads = 1);

std::string to_string(Refinement r);
Refinement parse_refinement(const std::string& s);
nlohmann::json to_json(const EstimationBudget& b);
EstimationBudget estimation_budget_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ConditionEstimate& e);
ConditionEstimate condition_estimate_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LemmaCheckReport& r);

}  // namespace sl1
