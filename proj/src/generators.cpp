#include "sl1/generators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

#include "sl1/io.hpp"
#include "sl1/simd.hpp"

namespace sl1 {
namespace {

// First k entries of a partial Fisher-Yates shuffle of [0, n), sorted.
std::vector<std::size_t> random_support(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

double nonzero_normal(Rng& rng) {
  double v = 0.0;
  while (v == 0.0) v = rng.normal();
  return v;
}

}  // namespace

DenseMatrix gen_gaussian_matrix(std::size_t m, std::size_t n, const RngSpec& spec) {
  if (m == 0 || n == 0) throw std::invalid_argument("gen_gaussian_matrix: zero dimension");
  Rng rng(spec);
  std::vector<double> entries(m * n);
  for (double& e : entries) e = rng.normal();
  return DenseMatrix(m, n, std::move(entries));
}

RealVector gen_sparse_signal(std::size_t n, std::size_t k, const Amplitude& amplitude, const RngSpec& spec) {
  if (n == 0) throw std::invalid_argument("gen_sparse_signal: n must be positive");
  if (k == 0 || k > n) {
    throw std::invalid_argument("gen_sparse_signal: k=" + std::to_string(k) + " outside [1, n=" +
                                std::to_string(n) + "]");
  }
  if (amplitude.law == Amplitude::Law::uniform &&
      (amplitude.a > amplitude.b || (amplitude.a == 0.0 && amplitude.b == 0.0))) {
    throw std::invalid_argument("gen_sparse_signal: uniform amplitude needs a <= b, not both zero");
  }
  Rng rng(spec);
  RealVector x(n, 0.0);
  for (std::size_t i : random_support(n, k, rng)) {
    switch (amplitude.law) {
      case Amplitude::Law::unit:
        x[i] = rng.coin() ? 1.0 : -1.0;
        break;
      case Amplitude::Law::gaussian:
        x[i] = nonzero_normal(rng);
        break;
      case Amplitude::Law::uniform: {
        double v = 0.0;
        while (v == 0.0) v = amplitude.a + (amplitude.b - amplitude.a) * rng.uniform();
        x[i] = v;
        break;
      }
    }
  }
  return x;
}

RealVector gen_compressible_signal(std::size_t n, double p, const RngSpec& spec) {
  if (n == 0) throw std::invalid_argument("gen_compressible_signal: n must be positive");
  if (!(p > 0.0)) throw std::invalid_argument("gen_compressible_signal: decay exponent must be > 0");
  Rng rng(spec);
  std::vector<std::size_t> order = random_support(n, n, rng);
  // random_support sorts; reshuffle for the placement.
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[static_cast<std::size_t>(rng.below(i))]);
  }
  RealVector x(n);
  for (std::size_t r = 0; r < n; ++r) {
    const double mag = std::pow(static_cast<double>(r + 1), -p);
    x[order[r]] = rng.coin() ? mag : -mag;
  }
  return x;
}

RealVector gen_sparse_noise(std::size_t m, std::size_t s, double epsilon, const RngSpec& spec) {
  if (m == 0) throw std::invalid_argument("gen_sparse_noise: m must be positive");
  if (s > m) {
    throw std::invalid_argument("gen_sparse_noise: s=" + std::to_string(s) + " exceeds m=" + std::to_string(m));
  }
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("gen_sparse_noise: epsilon must be finite and >= 0");
  }
  RealVector noise(m, 0.0);
  if (epsilon == 0.0 || s == 0) return noise;

  Rng rng(spec);
  const auto support = random_support(m, s, rng);
  for (std::size_t i : support) noise[i] = nonzero_normal(rng);

  const auto& kern = simd::kernels();
  const double scale = epsilon / kern.abs_sum(noise.data(), m);
  for (double& v : noise) v *= scale;

  // Push the rounding error of the rescale into the largest entry.
  const std::size_t big = top_k_indices(noise, 1).front();
  for (int pass = 0; pass < 8; ++pass) {
    const double diff = epsilon - kern.abs_sum(noise.data(), m);
    if (diff == 0.0) break;
    noise[big] = std::copysign(std::fabs(noise[big]) + diff, noise[big]);
  }
  return noise;
}

double gamma_quantile(double shape, double q) {
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("gamma_quantile: level must lie in (0,1)");
  if (!(shape > 0.0)) throw std::invalid_argument("gamma_quantile: shape must be > 0");
  return boost::math::gamma_p_inv(shape, q);
}

LaplacianNoise gen_laplacian_noise(std::size_t m, double epsilon_quantile, const RngSpec& spec) {
  if (m == 0) throw std::invalid_argument("gen_laplacian_noise: m must be positive");
  if (!(epsilon_quantile > 0.0 && epsilon_quantile < 1.0)) {
    throw std::invalid_argument("gen_laplacian_noise: quantile must lie in (0,1)");
  }
  Rng rng(spec);
  LaplacianNoise out;
  out.n.resize(m);
  for (double& v : out.n) {
    const double e = -std::log(rng.uniform_pos());
    v = rng.coin() ? e : -e;
  }
  out.epsilon = gamma_quantile(static_cast<double>(m), epsilon_quantile);
  out.exceeded = norm_lp(out.n, Norm::l1) > out.epsilon;
  return out;
}

InstanceStreams instance_streams(const RngSpec& rng) {
  return {rng.child(1), rng.child(2), rng.child(3)};
}

SparseInstance make_instance(const InstanceSpec& spec, const RngSpec& rng) {
  if (spec.n == 0 || spec.m == 0) throw std::invalid_argument("make_instance: N and M must be positive");
  if (spec.k == 0 || spec.k > spec.n) {
    throw std::invalid_argument("make_instance: K=" + std::to_string(spec.k) + " outside [1, N=" +
                                std::to_string(spec.n) + "]");
  }
  const auto streams = instance_streams(rng);
  SparseInstance inst;
  inst.k = spec.k;
  inst.phi = gen_gaussian_matrix(spec.m, spec.n, streams.phi);
  inst.x = spec.signal.kind == SignalSpec::Kind::sparse
               ? gen_sparse_signal(spec.n, spec.k, spec.signal.amplitude, streams.signal)
               : gen_compressible_signal(spec.n, spec.signal.decay, streams.signal);
  switch (spec.noise.kind) {
    case NoiseSpec::Kind::none:
      inst.n.assign(spec.m, 0.0);
      inst.epsilon = 0.0;
      break;
    case NoiseSpec::Kind::sparse:
      inst.n = gen_sparse_noise(spec.m, spec.noise.s, spec.noise.epsilon, streams.noise);
      inst.epsilon = spec.noise.epsilon;
      break;
    case NoiseSpec::Kind::laplacian: {
      auto lap = gen_laplacian_noise(spec.m, spec.noise.quantile, streams.noise);
      inst.n = std::move(lap.n);
      inst.epsilon = lap.epsilon;
      inst.noise_exceeds_epsilon = lap.exceeded;
      break;
    }
  }
  inst.y = mat_vec(inst.phi, inst.x);
  for (std::size_t i = 0; i < spec.m; ++i) inst.y[i] += inst.n[i];
  return inst;
}

namespace {

const char* law_name(Amplitude::Law law) {
  switch (law) {
    case Amplitude::Law::unit:
      return "unit";
    case Amplitude::Law::gaussian:
      return "gaussian";
    case Amplitude::Law::uniform:
      return "uniform";
  }
  return "unit";
}

Amplitude::Law parse_law(const std::string& s) {
  if (s == "unit") return Amplitude::Law::unit;
  if (s == "gaussian") return Amplitude::Law::gaussian;
  if (s == "uniform") return Amplitude::Law::uniform;
  throw std::invalid_argument("unknown amplitude law '" + s + "'");
}

const char* noise_name(NoiseSpec::Kind k) {
  switch (k) {
    case NoiseSpec::Kind::none:
      return "none";
    case NoiseSpec::Kind::sparse:
      return "sparse";
    case NoiseSpec::Kind::laplacian:
      return "laplacian";
  }
  return "none";
}

NoiseSpec::Kind parse_noise(const std::string& s) {
  if (s == "none") return NoiseSpec::Kind::none;
  if (s == "sparse") return NoiseSpec::Kind::sparse;
  if (s == "laplacian") return NoiseSpec::Kind::laplacian;
  throw std::invalid_argument("unknown noise kind '" + s + "'");
}

}  // namespace

nlohmann::json to_json(const InstanceSpec& spec) {
  nlohmann::json signal = {{"kind", spec.signal.kind == SignalSpec::Kind::sparse ? "sparse" : "compressible"},
                           {"amplitude", law_name(spec.signal.amplitude.law)},
                           {"amplitude_a", spec.signal.amplitude.a},
                           {"amplitude_b", spec.signal.amplitude.b},
                           {"decay", spec.signal.decay}};
  nlohmann::json noise = {{"kind", noise_name(spec.noise.kind)},
                          {"s", spec.noise.s},
                          {"epsilon", spec.noise.epsilon},
                          {"quantile", spec.noise.quantile}};
  return {{"N", spec.n}, {"M", spec.m}, {"K", spec.k}, {"signal", signal}, {"noise", noise}};
}

InstanceSpec instance_spec_from_json(const nlohmann::json& j) {
  InstanceSpec spec;
  spec.n = j.at("N").get<std::size_t>();
  spec.m = j.at("M").get<std::size_t>();
  spec.k = j.at("K").get<std::size_t>();
  if (j.contains("signal")) {
    const auto& s = j.at("signal");
    const std::string kind = s.value("kind", "sparse");
    if (kind != "sparse" && kind != "compressible") throw std::invalid_argument("unknown signal kind '" + kind + "'");
    spec.signal.kind = kind == "sparse" ? SignalSpec::Kind::sparse : SignalSpec::Kind::compressible;
    spec.signal.amplitude.law = parse_law(s.value("amplitude", "unit"));
    spec.signal.amplitude.a = s.value("amplitude_a", 0.0);
    spec.signal.amplitude.b = s.value("amplitude_b", 0.0);
    spec.signal.decay = s.value("decay", 1.0);
  }
  if (j.contains("noise")) {
    const auto& n = j.at("noise");
    spec.noise.kind = parse_noise(n.value("kind", "none"));
    spec.noise.s = n.value("s", std::size_t{0});
    spec.noise.epsilon = n.value("epsilon", 0.0);
    spec.noise.quantile = n.value("quantile", 0.99);
  }
  return spec;
}

nlohmann::json to_json(const RngSpec& rng) { return {{"seed", rng.seed}, {"stream", rng.stream}}; }

RngSpec rng_spec_from_json(const nlohmann::json& j) {
  return {j.at("seed").get<std::uint64_t>(), j.value("stream", std::uint64_t{0})};
}

nlohmann::json bundle_meta(const SparseInstance& inst, const InstanceSpec& spec, const RngSpec& rng) {
  const auto streams = instance_streams(rng);
  return {{"N", inst.x.size()},
          {"M", inst.y.size()},
          {"K", inst.k},
          {"epsilon", inst.epsilon},
          {"noise_exceeds_epsilon", inst.noise_exceeds_epsilon},
          {"rng",
           {{"seed", rng.seed},
            {"stream", rng.stream},
            {"phi", to_json(streams.phi)},
            {"signal", to_json(streams.signal)},
            {"noise", to_json(streams.noise)}}},
          {"sampler", kSamplerName},
          {"spec_revision", kFormatRevision},
          {"instance", to_json(spec)}};
}

void write_bundle(const std::filesystem::path& dir, const SparseInstance& inst, const nlohmann::json& meta) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw io::IoError("cannot create directory " + dir.string() + ": " + ec.message());
  io::write_matrix(dir / "phi.bin", inst.phi);
  io::write_vector(dir / "x.csv", inst.x);
  io::write_vector(dir / "n.csv", inst.n);
  io::write_vector(dir / "y.csv", inst.y);
  io::atomic_write_file(dir / "meta.json", meta.dump(2) + "\n");
}

Bundle read_bundle(const std::filesystem::path& dir) {
  Bundle b;
  try {
    b.meta = nlohmann::json::parse(io::read_file(dir / "meta.json"));
  } catch (const nlohmann::json::parse_error& e) {
    throw io::FormatError((dir / "meta.json").string() + ": " + e.what());
  }
  auto& inst = b.instance;
  inst.phi = io::read_matrix(dir / "phi.bin");
  inst.x = io::read_vector(dir / "x.csv");
  inst.n = io::read_vector(dir / "n.csv");
  inst.y = io::read_vector(dir / "y.csv");
  try {
    inst.epsilon = b.meta.at("epsilon").get<double>();
    inst.k = b.meta.at("K").get<std::size_t>();
    inst.noise_exceeds_epsilon = b.meta.value("noise_exceeds_epsilon", false);
  } catch (const nlohmann::json::exception& e) {
    throw io::FormatError((dir / "meta.json").string() + ": " + e.what());
  }
  if (inst.x.size() != inst.phi.cols() || inst.y.size() != inst.phi.rows() || inst.n.size() != inst.phi.rows()) {
    throw io::FormatError(dir.string() + ": bundle dimensions are inconsistent");
  }
  if (inst.k == 0 || inst.k > inst.x.size() || !(inst.epsilon >= 0.0)) {
    throw io::FormatError(dir.string() + ": meta.json has invalid K or epsilon");
  }
  return b;
}

}  // namespace sl1
