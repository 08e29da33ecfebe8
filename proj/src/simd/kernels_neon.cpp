// aarch64 only. Four float64x2 accumulators cover the 8 lanes of the shared
// reduction order (lanes 0-1, 2-3, 4-5, 6-7).

#include <arm_neon.h>

#include <cmath>
#include <cstddef>

#include "sl1/simd.hpp"

namespace sl1::simd {
namespace {

constexpr std::size_t kLanes = 8;

struct Acc {
  float64x2_t q[4] = {vdupq_n_f64(0.0), vdupq_n_f64(0.0), vdupq_n_f64(0.0), vdupq_n_f64(0.0)};

  double combine() const {
    double l[kLanes];
    for (int k = 0; k < 4; ++k) vst1q_f64(l + 2 * k, q[k]);
    return ((l[0] + l[1]) + (l[2] + l[3])) + ((l[4] + l[5]) + (l[6] + l[7]));
  }
};

inline float64x2_t signed_select(float64x2_t a, float64x2_t b) {
  const uint64x2_t positive = vcgtq_f64(a, vdupq_n_f64(0.0));
  return vbslq_f64(positive, b, vnegq_f64(b));
}

double dot(const double* a, const double* b, std::size_t n) {
  Acc acc;
  const std::size_t body = n - n % kLanes;
  for (std::size_t i = 0; i < body; i += kLanes) {
    for (int k = 0; k < 4; ++k) {
      acc.q[k] = vaddq_f64(acc.q[k], vmulq_f64(vld1q_f64(a + i + 2 * k), vld1q_f64(b + i + 2 * k)));
    }
  }
  double s = acc.combine();
  for (std::size_t i = body; i < n; ++i) s = s + a[i] * b[i];
  return s;
}

double abs_sum(const double* a, std::size_t n) {
  Acc acc;
  const std::size_t body = n - n % kLanes;
  for (std::size_t i = 0; i < body; i += kLanes) {
    for (int k = 0; k < 4; ++k) acc.q[k] = vaddq_f64(acc.q[k], vabsq_f64(vld1q_f64(a + i + 2 * k)));
  }
  double s = acc.combine();
  for (std::size_t i = body; i < n; ++i) s = s + std::fabs(a[i]);
  return s;
}

double abs_diff_sum(const double* a, const double* b, std::size_t n) {
  Acc acc;
  const std::size_t body = n - n % kLanes;
  for (std::size_t i = 0; i < body; i += kLanes) {
    for (int k = 0; k < 4; ++k) {
      acc.q[k] = vaddq_f64(acc.q[k],
                           vabsq_f64(vsubq_f64(vld1q_f64(a + i + 2 * k), vld1q_f64(b + i + 2 * k))));
    }
  }
  double s = acc.combine();
  for (std::size_t i = body; i < n; ++i) s = s + std::fabs(a[i] - b[i]);
  return s;
}

double sign_dot(const double* a, const double* b, std::size_t n) {
  Acc acc;
  const std::size_t body = n - n % kLanes;
  for (std::size_t i = 0; i < body; i += kLanes) {
    for (int k = 0; k < 4; ++k) {
      acc.q[k] = vaddq_f64(acc.q[k], signed_select(vld1q_f64(a + i + 2 * k), vld1q_f64(b + i + 2 * k)));
    }
  }
  double s = acc.combine();
  for (std::size_t i = body; i < n; ++i) s = s + (a[i] > 0.0 ? b[i] : -b[i]);
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
  }
  for (; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void soft_threshold(const double* v, double tau, double* out, std::size_t n) {
  std::size_t i = 0;
  const float64x2_t vt = vdupq_n_f64(tau);
  const float64x2_t zero = vdupq_n_f64(0.0);
  const uint64x2_t sign_bit = vdupq_n_u64(0x8000000000000000ULL);
  for (; i + 2 <= n; i += 2) {
    const float64x2_t x = vld1q_f64(v + i);
    const float64x2_t mag = vmaxq_f64(vsubq_f64(vabsq_f64(x), vt), zero);
    const uint64x2_t bits =
        vorrq_u64(vreinterpretq_u64_f64(mag), vandq_u64(vreinterpretq_u64_f64(x), sign_bit));
    vst1q_f64(out + i, vreinterpretq_f64_u64(bits));
  }
  for (; i < n; ++i) {
    const double mag = std::fabs(v[i]) - tau;
    out[i] = std::copysign(mag > 0.0 ? mag : 0.0, v[i]);
  }
}

}  // namespace

const KernelTable& neon_table() {
  static const KernelTable table{Isa::neon, dot,  abs_sum,       abs_diff_sum,
                                 sign_dot,  axpy, soft_threshold};
  return table;
}

}  // namespace sl1::simd
