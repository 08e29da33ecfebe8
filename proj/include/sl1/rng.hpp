#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace sl1 {

// A (seed, stream) pair fully determines a random sequence.
struct RngSpec {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  // Independent sub-stream for a component or a trial. Pure function of
  // (this, tag).
  RngSpec child(std::uint64_t tag) const;

  friend bool operator==(const RngSpec&, const RngSpec&) = default;
};

// Engine: std::mt19937_64 seeded through std::seed_seq with the four 32-bit
// halves of (seed, stream); both are fully specified by the C++ standard.
// Uniforms take the top 53 bits; normals use the basic Box-Muller transform
// and consume uniforms in pairs.
inline constexpr std::string_view kSamplerName = "mt19937_64+seed_seq/box-muller";

class Rng {
 public:
  explicit Rng(const RngSpec& spec);

  std::uint64_t next_u64() { return engine_(); }
  // [0, 1)
  double uniform();
  // (0, 1]
  double uniform_pos();
  double normal();
  // Uniform integer in [0, n), n >= 1, by rejection (no modulo bias).
  std::uint64_t below(std::uint64_t n);
  bool coin() { return (engine_() >> 63) != 0; }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace sl1
