#pragma once

// Data-parallel inner loops used by every module.
//
// Each kernel exists as a scalar reference and as SIMD variants (AVX2 on
// x86-64, NEON on aarch64). All variants share one reduction order so that
// they produce bit-identical results: elements are accumulated into 8
// interleaved lanes (element i of the 8-aligned body goes to lane i % 8),
// lanes are combined as ((l0+l1)+(l2+l3)) + ((l4+l5)+(l6+l7)), and the
// tail is then added left to right. No kernel uses fused multiply-add.

#include <cstddef>
#include <string_view>

namespace sl1::simd {

enum class Isa { scalar, avx2, neon };

struct KernelTable {
  Isa isa;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // sum_i |a[i]|
  double (*abs_sum)(const double* a, std::size_t n);
  // sum_i |a[i] - b[i]|
  double (*abs_diff_sum)(const double* a, const double* b, std::size_t n);
  // sum_i s(a[i]) * b[i] with s(x) = +1 if x > 0 and -1 otherwise
  double (*sign_dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out[i] = copysign(max(|v[i]| - tau, 0), v[i])
  void (*soft_threshold)(const double* v, double tau, double* out, std::size_t n);
};

const KernelTable& scalar_kernels();

// Returns nullptr when the variant is not compiled in or not supported by
// the running CPU.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

// Best available table. Resolved once; SL1_KERNELS=scalar|avx2|neon|auto
// in the environment overrides the automatic choice.
const KernelTable& kernels();

const KernelTable* kernels_for(Isa isa);

std::string_view isa_name(Isa isa);

}  // namespace sl1::simd
