#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "sl1/simd.hpp"
#include "sl1/solver.hpp"

namespace sl1 {

RealVector soft_threshold(std::span<const double> v, double tau) {
  if (!(tau >= 0.0)) throw std::invalid_argument("soft_threshold: tau must be >= 0");
  RealVector out(v.size());
  simd::kernels().soft_threshold(v.data(), tau, out.data(), v.size());
  return out;
}

RealVector project_l1_ball(std::span<const double> v, double radius) {
  if (!(radius >= 0.0)) throw std::invalid_argument("project_l1_ball: radius must be >= 0");
  if (norm_lp(v, Norm::l1) <= radius) return RealVector(v.begin(), v.end());
  if (radius == 0.0) return RealVector(v.size(), 0.0);

  std::vector<double> mag(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) mag[i] = std::fabs(v[i]);
  std::sort(mag.begin(), mag.end(), std::greater<>());

  // Largest rho with mag[rho-1] > (sum_{i<rho} mag[i] - radius) / rho.
  double prefix = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < mag.size(); ++j) {
    prefix += mag[j];
    const double candidate = (prefix - radius) / static_cast<double>(j + 1);
    if (mag[j] > candidate) theta = candidate;
  }
  return soft_threshold(v, std::max(theta, 0.0));
}

double operator_norm_estimate(const DenseMatrix& phi, std::size_t iters, const RngSpec& spec) {
  if (iters == 0) throw std::invalid_argument("operator_norm_estimate: iters must be >= 1");
  Rng rng(spec);
  RealVector v(phi.cols());
  for (double& e : v) e = rng.normal();
  double nv = norm_lp(v);
  for (double& e : v) e /= nv;

  double estimate = norm_lp(mat_vec(phi, v));
  for (std::size_t it = 0; it < iters; ++it) {
    RealVector w = mat_transpose_vec(phi, mat_vec(phi, v));
    nv = norm_lp(w);
    if (nv == 0.0) break;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = w[i] / nv;
    estimate = norm_lp(mat_vec(phi, v));
  }
  return estimate;
}

double dual_objective(const DenseMatrix& phi, std::span<const double> y, double epsilon,
                      std::span<const double> z) {
  const double scale = std::max(1.0, norm_lp(mat_transpose_vec(phi, z), Norm::linf));
  return (dot(z, y) - epsilon * norm_lp(z, Norm::linf)) / scale;
}

}  // namespace sl1
