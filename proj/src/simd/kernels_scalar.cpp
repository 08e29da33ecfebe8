#include <cmath>
#include <cstddef>

#include "sl1/simd.hpp"

namespace sl1::simd {
namespace {

constexpr std::size_t kLanes = 8;

inline double combine(const double (&l)[kLanes]) {
  return ((l[0] + l[1]) + (l[2] + l[3])) + ((l[4] + l[5]) + (l[6] + l[7]));
}

double dot(const double* a, const double* b, std::size_t n) {
  double acc[kLanes] = {};
  const std::size_t body = n - n % kLanes;
  for (std::size_t i = 0; i < body; i += kLanes) {
    for (std::size_t j = 0; j < kLanes; ++j) acc[j] = acc[j] + a[i + j] * b[i + j];
  }
  double s = combine(acc);
  for (std::size_t i = body; i < n; ++i) s = s + a[i] * b[i];
  return s;
}

double abs_sum(const double* a, std::size_t n) {
  double acc[kLanes] = {};
  const std::size_t body = n - n % kLanes;
  for (std::size_t i = 0; i < body; i += kLanes) {
    for (std::size_t j = 0; j < kLanes; ++j) acc[j] = acc[j] + std::fabs(a[i + j]);
  }
  double s = combine(acc);
  for (std::size_t i = body; i < n; ++i) s = s + std::fabs(a[i]);
  return s;
}

double abs_diff_sum(const double* a, const double* b, std::size_t n) {
  double acc[kLanes] = {};
  const std::size_t body = n - n % kLanes;
  for (std::size_t i = 0; i < body; i += kLanes) {
    for (std::size_t j = 0; j < kLanes; ++j) acc[j] = acc[j] + std::fabs(a[i + j] - b[i + j]);
  }
  double s = combine(acc);
  for (std::size_t i = body; i < n; ++i) s = s + std::fabs(a[i] - b[i]);
  return s;
}

double sign_dot(const double* a, const double* b, std::size_t n) {
  double acc[kLanes] = {};
  const std::size_t body = n - n % kLanes;
  for (std::size_t i = 0; i < body; i += kLanes) {
    for (std::size_t j = 0; j < kLanes; ++j) {
      acc[j] = acc[j] + (a[i + j] > 0.0 ? b[i + j] : -b[i + j]);
    }
  }
  double s = combine(acc);
  for (std::size_t i = body; i < n; ++i) s = s + (a[i] > 0.0 ? b[i] : -b[i]);
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void soft_threshold(const double* v, double tau, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double mag = std::fabs(v[i]) - tau;
    out[i] = std::copysign(mag > 0.0 ? mag : 0.0, v[i]);
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{Isa::scalar, dot,  abs_sum,       abs_diff_sum,
                                 sign_dot,    axpy, soft_threshold};
  return table;
}

}  // namespace sl1::simd
