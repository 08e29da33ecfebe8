#pragma once

// Seed-driven generation of the observation model y = Phi x + n: Gaussian
// sensing matrices, sparse and compressible signals, and sparse or Laplacian
// noise with a known l1 budget. Every generator is a pure function of its
// parameters and RngSpec.

#include <cstddef>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "sl1/core.hpp"
#include "sl1/rng.hpp"

namespace sl1 {

// Identifies the file formats and sampler written by this version.
inline constexpr std::string_view kFormatRevision = "sl1-1.0";

// i.i.d. N(0,1) entries, not normalized by 1/sqrt(M).
DenseMatrix gen_gaussian_matrix(std::size_t m, std::size_t n, const RngSpec& rng);

struct Amplitude {
  enum class Law { unit, gaussian, uniform };
  Law law = Law::unit;
  // Bounds for Law::uniform; values are drawn from [a, b] and redrawn if 0.
  double a = 0.0;
  double b = 0.0;
};

// Exactly k nonzeros on a uniformly random support.
RealVector gen_sparse_signal(std::size_t n, std::size_t k, const Amplitude& amplitude, const RngSpec& rng);

// Sorted magnitudes are exactly i^-p (i = 1..n); random signs and order.
RealVector gen_compressible_signal(std::size_t n, double p, const RngSpec& rng);

// Exactly s nonzeros, rescaled so that ||n||_1 == epsilon (to a couple of
// ulps); epsilon == 0 gives the zero vector.
RealVector gen_sparse_noise(std::size_t m, std::size_t s, double epsilon, const RngSpec& rng);

struct LaplacianNoise {
  RealVector n;
  // Gamma(m, 1) quantile of ||n||_1 at the requested level.
  double epsilon = 0.0;
  // ||n||_1 > epsilon for this draw.
  bool exceeded = false;
};

// i.i.d. unit-scale Laplace entries.
LaplacianNoise gen_laplacian_noise(std::size_t m, double epsilon_quantile, const RngSpec& rng);

// Quantile of Gamma(shape, 1), i.e. of a sum of `shape` unit exponentials.
double gamma_quantile(double shape, double q);

struct SignalSpec {
  enum class Kind { sparse, compressible };
  Kind kind = Kind::sparse;
  Amplitude amplitude;
  double decay = 1.0;  // compressible only
};

struct NoiseSpec {
  enum class Kind { none, sparse, laplacian };
  Kind kind = Kind::none;
  std::size_t s = 0;     // sparse: number of corrupted measurements
  double epsilon = 0.0;  // sparse: l1 budget
  double quantile = 0.99;  // laplacian: level of the epsilon quantile
};

struct InstanceSpec {
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t k = 1;
  SignalSpec signal;
  NoiseSpec noise;
};

struct SparseInstance {
  RealVector x;
  DenseMatrix phi;
  RealVector n;
  RealVector y;
  double epsilon = 0.0;
  std::size_t k = 1;
  bool noise_exceeds_epsilon = false;
};

// Sub-streams of the instance RngSpec used for each component.
struct InstanceStreams {
  RngSpec phi;
  RngSpec signal;
  RngSpec noise;
};
InstanceStreams instance_streams(const RngSpec& rng);

// y = mat_vec(phi, x) + n.
SparseInstance make_instance(const InstanceSpec& spec, const RngSpec& rng);

nlohmann::json to_json(const InstanceSpec& spec);
InstanceSpec instance_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RngSpec& rng);
RngSpec rng_spec_from_json(const nlohmann::json& j);

// Instance bundle: phi.bin, x.csv, n.csv, y.csv and meta.json.
struct Bundle {
  SparseInstance instance;
  nlohmann::json meta;
};

nlohmann::json bundle_meta(const SparseInstance& inst, const InstanceSpec& spec, const RngSpec& rng);
// Creates the directory if needed; files are replaced atomically.
void write_bundle(const std::filesystem::path& dir, const SparseInstance& inst, const nlohmann::json& meta);
// Throws io::IoError / io::FormatError on missing or inconsistent files.
Bundle read_bundle(const std::filesystem::path& dir);

}  // namespace sl1
