// Compiled with -mavx2. Entry points are only reached after a runtime CPU
// check in dispatch.cpp.

#include <immintrin.h>

#include <cmath>
#include <cstddef>

#include "sl1/simd.hpp"

namespace sl1::simd {
namespace {

constexpr std::size_t kLanes = 8;

inline double combine(__m256d lo, __m256d hi) {
  alignas(32) double l[kLanes];
  _mm256_store_pd(l, lo);
  _mm256_store_pd(l + 4, hi);
  return ((l[0] + l[1]) + (l[2] + l[3])) + ((l[4] + l[5]) + (l[6] + l[7]));
}

inline __m256d abs_pd(__m256d x) {
  return _mm256_andnot_pd(_mm256_set1_pd(-0.0), x);
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d lo = _mm256_setzero_pd();
  __m256d hi = _mm256_setzero_pd();
  const std::size_t body = n - n % kLanes;
  for (std::size_t i = 0; i < body; i += kLanes) {
    lo = _mm256_add_pd(lo, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    hi = _mm256_add_pd(hi, _mm256_mul_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4)));
  }
  double s = combine(lo, hi);
  for (std::size_t i = body; i < n; ++i) s = s + a[i] * b[i];
  return s;
}

double abs_sum(const double* a, std::size_t n) {
  __m256d lo = _mm256_setzero_pd();
  __m256d hi = _mm256_setzero_pd();
  const std::size_t body = n - n % kLanes;
  for (std::size_t i = 0; i < body; i += kLanes) {
    lo = _mm256_add_pd(lo, abs_pd(_mm256_loadu_pd(a + i)));
    hi = _mm256_add_pd(hi, abs_pd(_mm256_loadu_pd(a + i + 4)));
  }
  double s = combine(lo, hi);
  for (std::size_t i = body; i < n; ++i) s = s + std::fabs(a[i]);
  return s;
}

double abs_diff_sum(const double* a, const double* b, std::size_t n) {
  __m256d lo = _mm256_setzero_pd();
  __m256d hi = _mm256_setzero_pd();
  const std::size_t body = n - n % kLanes;
  for (std::size_t i = 0; i < body; i += kLanes) {
    lo = _mm256_add_pd(lo, abs_pd(_mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i))));
    hi = _mm256_add_pd(
        hi, abs_pd(_mm256_sub_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4))));
  }
  double s = combine(lo, hi);
  for (std::size_t i = body; i < n; ++i) s = s + std::fabs(a[i] - b[i]);
  return s;
}

inline __m256d signed_select(__m256d a, __m256d b) {
  const __m256d positive = _mm256_cmp_pd(a, _mm256_setzero_pd(), _CMP_GT_OQ);
  const __m256d negated = _mm256_xor_pd(b, _mm256_set1_pd(-0.0));
  return _mm256_blendv_pd(negated, b, positive);
}

double sign_dot(const double* a, const double* b, std::size_t n) {
  __m256d lo = _mm256_setzero_pd();
  __m256d hi = _mm256_setzero_pd();
  const std::size_t body = n - n % kLanes;
  for (std::size_t i = 0; i < body; i += kLanes) {
    lo = _mm256_add_pd(lo, signed_select(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    hi = _mm256_add_pd(hi, signed_select(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4)));
  }
  double s = combine(lo, hi);
  for (std::size_t i = body; i < n; ++i) s = s + (a[i] > 0.0 ? b[i] : -b[i]);
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d r = _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    _mm256_storeu_pd(y + i, r);
  }
  for (; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void soft_threshold(const double* v, double tau, double* out, std::size_t n) {
  const __m256d sign_bit = _mm256_set1_pd(-0.0);
  const __m256d vt = _mm256_set1_pd(tau);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d x = _mm256_loadu_pd(v + i);
    const __m256d mag = _mm256_max_pd(_mm256_sub_pd(abs_pd(x), vt), zero);
    _mm256_storeu_pd(out + i, _mm256_or_pd(mag, _mm256_and_pd(x, sign_bit)));
  }
  for (; i < n; ++i) {
    const double mag = std::fabs(v[i]) - tau;
    out[i] = std::copysign(mag > 0.0 ? mag : 0.0, v[i]);
  }
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{Isa::avx2, dot,  abs_sum,       abs_diff_sum,
                                 sign_dot,  axpy, soft_threshold};
  return table;
}

}  // namespace sl1::simd
