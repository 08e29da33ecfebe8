#include "sl1/analysis.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "sl1/io.hpp"
#include "sl1/parallel.hpp"
#include "sl1/simd.hpp"

namespace sl1 {

using nlohmann::json;

double theorem_bound(double epsilon, std::size_t m, double e0) {
  if (m == 0) throw std::invalid_argument("theorem_bound: M must be at least 1");
  if (!(epsilon >= 0.0) || !(e0 >= 0.0)) throw std::invalid_argument("theorem_bound: eps and e0 must be nonnegative");
  return 8.0 * epsilon / static_cast<double>(m) + 12.0 * e0;
}

double sharp_bound(double epsilon, std::size_t m, double e0, double nu, double d2K, double d3K) {
  if (m == 0) throw std::invalid_argument("sharp_bound: M must be at least 1");
  const double theta = nu - d2K - d3K;
  if (!(theta > 0.0)) {
    throw std::invalid_argument("sharp_bound: nu - (d2K + d3K) = " + io::format_double(theta) + " is not positive");
  }
  return (4.0 / theta) * (epsilon / static_cast<double>(m)) + 4.0 * ((nu + d3K - d2K) / theta) * e0;
}

const ProofRecord* ProofTrace::find(const std::string& name) const {
  for (const auto& r : records)
    if (r.name == name) return &r;
  return nullptr;
}

std::vector<std::string> ProofTrace::unconditional_failures() const {
  std::vector<std::string> out;
  for (const auto& r : records)
    if (r.kind == InequalityKind::unconditional && !r.holds) out.push_back(r.name);
  return out;
}

namespace {

ProofRecord make_record(std::string name, double lhs, double rhs, InequalityKind kind, DeltaProvenance prov,
                        json inputs) {
  ProofRecord r;
  r.name = std::move(name);
  r.lhs = lhs;
  r.rhs = rhs + 1e-12 * (1.0 + std::abs(lhs) + std::abs(rhs));
  r.slack = r.rhs - r.lhs;
  r.holds = r.slack >= 0.0;
  r.kind = kind;
  r.provenance = prov;
  r.inputs = std::move(inputs);
  return r;
}

double l1(std::span<const double> v) { return simd::kernels().abs_sum(v.data(), v.size()); }

}  // namespace

ProofTrace trace_proof(const SparseInstance& inst, const SolverResult& result, const ConditionEstimate& est,
                       double feasibility_tol) {
  const std::size_t n = inst.x.size();
  const std::size_t m = inst.phi.rows();
  const std::size_t k = inst.k;
  if (!is_feasible_status(result.status)) {
    throw std::invalid_argument("trace_proof: solver status " + to_string(result.status) + " is not feasible");
  }
  if (result.u_star.size() != n || inst.phi.cols() != n || inst.y.size() != m) {
    throw std::invalid_argument("trace_proof: result and instance dimensions differ");
  }
  const double res_star = residual_l1(inst.phi, result.u_star, inst.y);
  if (res_star > inst.epsilon + feasibility_tol) {
    throw std::invalid_argument("trace_proof: result residual " + io::format_double(res_star) + " exceeds eps " +
                                io::format_double(inst.epsilon));
  }
  if (k == 0 || k > n) throw std::invalid_argument("trace_proof: K outside [1, N]");

  const double eps = inst.epsilon;
  const double md = static_cast<double>(m);
  const double sqrt_k = std::sqrt(static_cast<double>(k));
  RealVector h(n);
  for (std::size_t i = 0; i < n; ++i) h[i] = result.u_star[i] - inst.x[i];

  const SupportSet t0 = SupportSet::from_unsorted(top_k_indices(inst.x, k), n);
  const SupportPartition part = partition_support(h, t0, k);
  const SupportSet t01 = part.blocks.empty() ? part.t0 : part.t0.unite(part.blocks[0]);
  const RealVector h01 = restrict_to(h, t01);
  const RealVector h01c = restrict_to(h, t01.complement());

  ProofTrace trace;
  trace.error_l2 = norm_lp(h);
  trace.e0 = compress_error_e0(inst.x, k);
  const double e0 = trace.e0;
  const double n_h01 = norm_lp(h01);
  const double n_h01c = norm_lp(h01c);
  double tail_sum = 0.0;
  std::vector<double> block_norms;
  for (std::size_t b = 1; b < part.blocks.size(); ++b) {
    block_norms.push_back(norm_lp(restrict_to(h, part.blocks[b])));
    tail_sum += block_norms.back();
  }
  const double excess = std::max(0.0, l1(result.u_star) - l1(inst.x));

  const json base = {{"eps", eps}, {"M", m}, {"K", k}, {"e0", e0}};
  auto with = [&](json extra) {
    json j = base;
    j.update(extra);
    return j;
  };
  const auto U = InequalityKind::unconditional;
  const auto C = InequalityKind::conditional;
  const auto none = DeltaProvenance::none;

  trace.records.push_back(make_record("triangle", trace.error_l2, n_h01 + n_h01c, U, none, base));
  trace.records.push_back(make_record("tail_blocks", n_h01c, tail_sum, U, none, base));
  trace.records.push_back(make_record("compressibility", tail_sum, n_h01 + 2.0 * e0 + excess / sqrt_k, U, none,
                                      with({{"l1_excess", excess}})));
  trace.records.push_back(make_record("error_split", trace.error_l2, 2.0 * n_h01 + 2.0 * e0 + excess / sqrt_k, U,
                                      none, with({{"l1_excess", excess}})));

  const RealVector phi_h = mat_vec(inst.phi, h);
  const RealVector phi_h01 = mat_vec(inst.phi, h01);
  const double phi_h_l1 = l1(phi_h);
  const auto& kern = simd::kernels();
  const double holder_lhs = kern.sign_dot(phi_h01.data(), phi_h.data(), m);
  trace.records.push_back(make_record("holder", holder_lhs, phi_h_l1, U, none, base));

  const double res_x = residual_l1(inst.phi, inst.x, inst.y);
  trace.records.push_back(make_record("feasibility_triangle", phi_h_l1, res_star + res_x, U, none,
                                      with({{"residual_x_star", res_star}, {"residual_x", res_x}})));
  // Needs x inside the constraint set, which fails when the noise exceeded eps.
  const auto feas_kind = res_x <= eps + feasibility_tol ? U : C;
  trace.records.push_back(make_record("feasibility", phi_h_l1, 2.0 * eps + 2.0 * feasibility_tol, feas_kind, none,
                                      with({{"feasibility_tol", feasibility_tol}, {"residual_x", res_x}})));

  const DeltaProvenance prov = est.certified    ? DeltaProvenance::certified
                               : est.exhaustive ? DeltaProvenance::exhaustive
                                                : DeltaProvenance::estimated;
  const double d2 = est.delta2K_lower, d3 = est.delta3K_lower, nu = est.nu;
  const json dinputs = with({{"nu", nu}, {"delta2K", d2}, {"delta3K", d3}});
  for (std::size_t b = 1; b < part.blocks.size(); ++b) {
    const RealVector hb = restrict_to(h, part.blocks[b]);
    const RealVector phi_hb = mat_vec(inst.phi, hb);
    const double lhs = std::abs(kern.sign_dot(phi_h01.data(), phi_hb.data(), m));
    trace.records.push_back(make_record("cross_block_" + std::to_string(b + 1), lhs, md * d3 * block_norms[b - 1], C,
                                        prov, dinputs));
  }
  trace.records.push_back(make_record("norm_lower", md * (nu - d2) * n_h01, l1(phi_h01), C, prov, dinputs));
  if (nu - d2 - d3 > 0.0) {
    trace.records.push_back(
        make_record("sharp_bound", trace.error_l2, sharp_bound(eps, m, e0, nu, d2, d3), C, prov, dinputs));
  }
  trace.condition = theorem_condition_holds(est);
  json tin = dinputs;
  tin["condition"] = to_string(trace.condition);
  trace.records.push_back(make_record("theorem_bound", trace.error_l2, theorem_bound(eps, m, e0), C, prov, tin));
  return trace;
}

TrialRecord run_trial(const TrialSpec& spec) {
  TrialRecord rec;
  rec.n = spec.instance.n;
  rec.m = spec.instance.m;
  rec.k = spec.instance.k;
  rec.s = spec.instance.noise.kind == NoiseSpec::Kind::sparse ? spec.instance.noise.s : 0;
  rec.seed = spec.rng.seed;
  rec.stream = spec.rng.stream;
  const auto start = std::chrono::steady_clock::now();
  try {
    const SparseInstance inst = make_instance(spec.instance, spec.rng);
    rec.epsilon = inst.epsilon;
    rec.e0 = compress_error_e0(inst.x, inst.k);
    rec.bound = theorem_bound(inst.epsilon, rec.m, rec.e0);
    const SolverResult res = solve(inst.phi, inst.y, inst.epsilon, spec.solver);
    rec.status = to_string(res.status);
    rec.iters = res.iters;
    RealVector h(inst.x.size());
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = res.u_star[i] - inst.x[i];
    rec.err_l2 = norm_lp(h);
    rec.bound_holds = is_feasible_status(res.status) && rec.err_l2 <= rec.bound;
    rec.exact_recovery = is_feasible_status(res.status) && rec.err_l2 <= 1e-5 * std::max(1.0, norm_lp(inst.x));
  } catch (const std::exception& e) {
    rec.status = "error";
    rec.error = e.what();
    rec.err_l2 = std::numeric_limits<double>::quiet_NaN();
  }
  if (spec.record_timing) {
    rec.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  }
  return rec;
}

std::uint64_t grid_trial_seed(std::uint64_t seed, std::size_t cell, std::size_t trial) {
  return RngSpec{seed, cell}.child(trial).stream;
}

namespace {

// Linear interpolation between order statistics.
double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

GridResult run_grid(const GridSpec& spec) {
  if (spec.m_values.empty() || spec.k_values.empty() || spec.s_values.empty()) {
    throw std::invalid_argument("run_grid: M, K and s lists must be non-empty");
  }
  struct Cell {
    std::size_t m, k, s;
  };
  std::vector<Cell> cells;
  for (std::size_t m : spec.m_values)
    for (std::size_t k : spec.k_values)
      for (std::size_t s : spec.s_values) cells.push_back({m, k, s});

  GridResult out;
  out.trials.resize(cells.size() * spec.trials);
  parallel_for(out.trials.size(), spec.threads, [&](std::size_t idx) {
    const std::size_t c = idx / spec.trials, t = idx % spec.trials;
    TrialSpec ts;
    ts.instance.n = spec.n;
    ts.instance.m = cells[c].m;
    ts.instance.k = cells[c].k;
    ts.instance.signal = spec.signal;
    ts.instance.noise = spec.noise;
    ts.instance.noise.s = cells[c].s;
    ts.rng = {grid_trial_seed(spec.seed, c, t), 0};
    ts.solver = spec.solver;
    ts.record_timing = spec.record_timing;
    out.trials[idx] = run_trial(ts);
    out.trials[idx].s = cells[c].s;
  });

  for (std::size_t c = 0; c < cells.size(); ++c) {
    CellSummary cs;
    cs.n = spec.n;
    cs.m = cells[c].m;
    cs.k = cells[c].k;
    cs.s = cells[c].s;
    cs.trials = spec.trials;
    std::vector<double> errs;
    std::size_t bound_ok = 0, exact = 0;
    for (std::size_t t = 0; t < spec.trials; ++t) {
      const TrialRecord& r = out.trials[c * spec.trials + t];
      if (r.status == "error" || !is_feasible_status(parse_solver_status(r.status))) {
        ++cs.failed;
        continue;
      }
      errs.push_back(r.err_l2);
      bound_ok += r.bound_holds ? 1 : 0;
      exact += r.exact_recovery ? 1 : 0;
    }
    std::sort(errs.begin(), errs.end());
    cs.err_min = quantile(errs, 0.0);
    cs.err_q25 = quantile(errs, 0.25);
    cs.err_median = quantile(errs, 0.5);
    cs.err_q75 = quantile(errs, 0.75);
    cs.err_max = quantile(errs, 1.0);
    if (spec.trials > 0) {
      cs.bound_rate = static_cast<double>(bound_ok) / static_cast<double>(spec.trials);
      cs.exact_recovery_rate = static_cast<double>(exact) / static_cast<double>(spec.trials);
    }
    out.cells.push_back(cs);
  }
  return out;
}

std::string to_string(InequalityKind k) { return k == InequalityKind::unconditional ? "unconditional" : "conditional"; }

std::string to_string(DeltaProvenance p) {
  switch (p) {
    case DeltaProvenance::none: return "none";
    case DeltaProvenance::estimated: return "estimated";
    case DeltaProvenance::exhaustive: return "exhaustive";
    case DeltaProvenance::certified: return "certified";
  }
  return "none";
}

json to_json(const ProofRecord& r) {
  return {{"name", r.name},   {"lhs", r.lhs},   {"rhs", r.rhs},
          {"slack", r.slack}, {"holds", r.holds}, {"kind", to_string(r.kind)},
          {"delta_provenance", to_string(r.provenance)}, {"inputs", r.inputs}};
}

json to_json(const ProofTrace& t) {
  json recs = json::array();
  for (const auto& r : t.records) recs.push_back(to_json(r));
  return {{"error_l2", t.error_l2},
          {"e0", t.e0},
          {"condition", to_string(t.condition)},
          {"unconditional_failures", t.unconditional_failures()},
          {"records", recs}};
}

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json to_json(const TrialRecord& r) {
  json j = {{"N", r.n},           {"M", r.m},
            {"K", r.k},           {"s", r.s},
            {"eps", r.epsilon},   {"seed", r.seed},
            {"stream", r.stream}, {"status", r.status},
            {"err_l2", number_or_null(r.err_l2)},
            {"e0", r.e0},         {"bound", r.bound},
            {"bound_holds", r.bound_holds}, {"exact_recovery", r.exact_recovery},
            {"iters", r.iters},   {"runtime_ms", r.runtime_ms}};
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

json to_json(const CellSummary& c) {
  return {{"N", c.n},
          {"M", c.m},
          {"K", c.k},
          {"s", c.s},
          {"trials", c.trials},
          {"failed", c.failed},
          {"err_l2",
           {{"min", number_or_null(c.err_min)},
            {"q25", number_or_null(c.err_q25)},
            {"median", number_or_null(c.err_median)},
            {"q75", number_or_null(c.err_q75)},
            {"max", number_or_null(c.err_max)}}},
          {"bound_rate", c.bound_rate},
          {"exact_recovery_rate", c.exact_recovery_rate}};
}

json to_json(const GridSpec& g) {
  InstanceSpec sig;
  sig.signal = g.signal;
  sig.noise = g.noise;
  const json inst = to_json(sig);
  return {{"N", g.n},
          {"M", g.m_values},
          {"K", g.k_values},
          {"s", g.s_values},
          {"trials", g.trials},
          {"signal", inst.at("signal")},
          {"noise", inst.at("noise")},
          {"solver", to_json(g.solver)},
          {"seed", g.seed},
          {"record_timing", g.record_timing}};
}

GridSpec grid_spec_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("grid: expected a JSON object");
  GridSpec g;
  g.n = j.value("N", g.n);
  auto list = [&](const char* key, std::vector<std::size_t> def) {
    if (!j.contains(key)) return def;
    const auto& v = j.at(key);
    if (v.is_number()) return std::vector<std::size_t>{v.get<std::size_t>()};
    return v.get<std::vector<std::size_t>>();
  };
  g.m_values = list("M", g.m_values);
  g.k_values = list("K", g.k_values);
  g.s_values = list("s", g.s_values);
  g.trials = j.value("trials", g.trials);
  json inst = {{"N", g.n}, {"M", g.m_values.front()}, {"K", g.k_values.front()}};
  if (j.contains("signal")) inst["signal"] = j.at("signal");
  if (j.contains("noise")) inst["noise"] = j.at("noise");
  const InstanceSpec parsed = instance_spec_from_json(inst);
  g.signal = parsed.signal;
  g.noise = parsed.noise;
  if (j.contains("solver")) g.solver = solver_config_from_json(j.at("solver"));
  g.seed = j.value("seed", g.seed);
  g.record_timing = j.value("record_timing", g.record_timing);
  return g;
}

std::string trials_csv(const std::vector<TrialRecord>& trials) {
  std::ostringstream os;
  os << kTrialsCsvHeader << '\n';
  for (const auto& r : trials) {
    os << r.n << ',' << r.m << ',' << r.k << ',' << r.s << ',' << io::format_double(r.epsilon) << ',' << r.seed << ','
       << r.status << ',' << io::format_double(r.err_l2) << ',' << io::format_double(r.e0) << ','
       << io::format_double(r.bound) << ',' << (r.bound_holds ? "true" : "false") << ',' << r.iters << ','
       << io::format_double(r.runtime_ms) << '\n';
  }
  return os.str();
}

}  // namespace sl1
