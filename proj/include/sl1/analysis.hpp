#pragma once

// Error bound of the recovery guarantee, a numerical tracer for each
// inequality in its proof, and trial grids.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sl1/conditions.hpp"
#include "sl1/core.hpp"
#include "sl1/generators.hpp"
#include "sl1/solver.hpp"

namespace sl1 {

// 8 eps/M + 12 e0.
double theorem_bound(double epsilon, std::size_t m, double e0);

// (4/theta)(eps/M) + 4 ((nu + d3K - d2K)/theta) e0 with theta = nu - d2K - d3K.
// Throws std::invalid_argument when theta <= 0.
double sharp_bound(double epsilon, std::size_t m, double e0, double nu, double d2K, double d3K);

enum class InequalityKind { unconditional, conditional };
// Where the delta values behind a conditional record came from.
enum class DeltaProvenance { none, estimated, exhaustive, certified };

struct ProofRecord {
  std::string name;
  double lhs = 0.0;
  // Includes a roundoff allowance of 1e-12 (1 + |lhs| + |rhs|).
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs
  bool holds = false;  // slack >= 0
  InequalityKind kind = InequalityKind::unconditional;
  DeltaProvenance provenance = DeltaProvenance::none;
  nlohmann::json inputs;
};

struct ProofTrace {
  std::vector<ProofRecord> records;
  ConditionVerdict condition = ConditionVerdict::inconclusive;
  double error_l2 = 0.0;
  double e0 = 0.0;

  const ProofRecord* find(const std::string& name) const;
  // Unconditional records that failed (empty on a correct solve).
  std::vector<std::string> unconditional_failures() const;
};

// h = x* - x, T0 = indices of H_K(x), blocks T1, T2, ... of the complement by
// decreasing |h|. Records, in order:
//   triangle               ||h|| <= ||h_T01|| + ||h_T01c||
//   tail_blocks            ||h_T01c|| <= sum_{k>=2} ||h_Tk||
//   compressibility        sum_{k>=2} ||h_Tk|| <= ||h_T01|| + 2 e0 + excess/sqrt(K)
//   error_split            ||h|| <= 2 ||h_T01|| + 2 e0 + excess/sqrt(K)
//   holder                 <sign(Phi h_T01), Phi h> <= ||Phi h||_1
//   feasibility_triangle   ||Phi h||_1 <= ||Phi x* - y||_1 + ||y - Phi x||_1
//   feasibility            ||Phi h||_1 <= 2 eps + 2 feasibility_tol
//   cross_block_k          |<sign(Phi h_T01), Phi h_Tk>| <= M d3K ||h_Tk||     (k >= 2)
//   norm_lower             M (nu - d2K) ||h_T01|| <= ||Phi h_T01||_1
//   sharp_bound            ||h|| <= sharp_bound(...)                           (when theta > 0)
//   theorem_bound          ||h|| <= 8 eps/M + 12 e0
// excess = max(0, ||x*||_1 - ||x||_1) is zero for an exact minimizer when x is
// feasible; with it the chain holds for any feasible output. The feasibility
// records are unconditional only when x itself satisfies the constraint.
// Throws std::invalid_argument unless the result is feasible.
ProofTrace trace_proof(const SparseInstance& inst, const SolverResult& result, const ConditionEstimate& est,
                       double feasibility_tol = 1e-8);

struct TrialSpec {
  InstanceSpec instance;
  RngSpec rng;
  SolverConfig solver;
  bool record_timing = false;
};

struct TrialRecord {
  std::size_t n = 0, m = 0, k = 0, s = 0;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::string status;  // solver status, or "error"
  double err_l2 = 0.0;
  double e0 = 0.0;
  double bound = 0.0;
  bool bound_holds = false;
  bool exact_recovery = false;
  std::size_t iters = 0;
  double runtime_ms = 0.0;  // 0 unless timing was requested
  std::string error;
};

TrialRecord run_trial(const TrialSpec& spec);

struct GridSpec {
  std::size_t n = 64;
  std::vector<std::size_t> m_values{32};
  std::vector<std::size_t> k_values{2};
  std::vector<std::size_t> s_values{2};  // noise.s per cell (sparse noise)
  std::size_t trials = 10;
  SignalSpec signal;
  NoiseSpec noise;  // s is overridden per cell
  SolverConfig solver;
  std::uint64_t seed = 1;
  bool record_timing = false;
  std::size_t threads = 1;
};

struct CellSummary {
  std::size_t n = 0, m = 0, k = 0, s = 0, trials = 0, failed = 0;
  double err_min = 0.0, err_q25 = 0.0, err_median = 0.0, err_q75 = 0.0, err_max = 0.0;
  double bound_rate = 0.0;
  double exact_recovery_rate = 0.0;
};

struct GridResult {
  std::vector<TrialRecord> trials;  // cell-major, then trial index
  std::vector<CellSummary> cells;
};

// Cells iterate M, then K, then s. Trial t of cell c uses instance seed
// RngSpec{seed, c}.child(t).stream with stream 0, so each row of trials.csv
// can be regenerated on its own.
GridResult run_grid(const GridSpec& spec);
std::uint64_t grid_trial_seed(std::uint64_t seed, std::size_t cell, std::size_t trial);

std::string to_string(InequalityKind k);
std::string to_string(DeltaProvenance p);
nlohmann::json to_json(const ProofRecord& r);
nlohmann::json to_json(const ProofTrace& t);
nlohmann::json to_json(const TrialRecord& r);
nlohmann::json to_json(const CellSummary& c);
nlohmann::json to_json(const GridSpec& g);
GridSpec grid_spec_from_json(const nlohmann::json& j);

inline constexpr const char* kTrialsCsvHeader = "N,M,K,s,eps,seed,status,err_l2,e0,bound,bound_holds,iters,runtime_ms";
std::string trials_csv(const std::vector<TrialRecord>& trials);

}  // namespace sl1
