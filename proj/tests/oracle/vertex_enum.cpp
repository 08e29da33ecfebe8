#include "vertex_enum.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace oracle {

std::optional<VertexOptimum> bpdn_l1_by_vertices(const std::vector<double>& phi, std::size_t m, std::size_t n,
                                                  const std::vector<double>& y, double eps) {
  const int d = static_cast<int>(2 * n + m);  // (u, w, t)
  const int rows = static_cast<int>(2 * n + 2 * m + 1);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(rows, d);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(rows);
  int r = 0;
  const int nn = static_cast<int>(n), mm = static_cast<int>(m);
  for (int j = 0; j < nn; ++j, ++r) {  // u - w <= 0
    g(r, j) = 1.0;
    g(r, nn + j) = -1.0;
  }
  for (int j = 0; j < nn; ++j, ++r) {  // -u - w <= 0
    g(r, j) = -1.0;
    g(r, nn + j) = -1.0;
  }
  for (int i = 0; i < mm; ++i, ++r) {  // Phi u - t <= y
    for (int j = 0; j < nn; ++j) g(r, j) = phi[static_cast<std::size_t>(i) * n + static_cast<std::size_t>(j)];
    g(r, 2 * nn + i) = -1.0;
    h(r) = y[static_cast<std::size_t>(i)];
  }
  for (int i = 0; i < mm; ++i, ++r) {  // -Phi u - t <= -y
    for (int j = 0; j < nn; ++j) g(r, j) = -phi[static_cast<std::size_t>(i) * n + static_cast<std::size_t>(j)];
    g(r, 2 * nn + i) = -1.0;
    h(r) = -y[static_cast<std::size_t>(i)];
  }
  for (int i = 0; i < mm; ++i) g(r, 2 * nn + i) = 1.0;  // sum t <= eps
  h(r) = eps;

  std::optional<VertexOptimum> best;
  std::size_t found = 0;
  std::vector<int> pick(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) pick[static_cast<std::size_t>(i)] = i;
  while (true) {
    Eigen::MatrixXd a(d, d);
    Eigen::VectorXd b(d);
    for (int i = 0; i < d; ++i) {
      a.row(i) = g.row(pick[static_cast<std::size_t>(i)]);
      b(i) = h(pick[static_cast<std::size_t>(i)]);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (lu.rank() == d) {
      const Eigen::VectorXd z = lu.solve(b);
      const Eigen::VectorXd slack = h - g * z;
      const double scale = 1.0 + h.cwiseAbs().maxCoeff() + z.cwiseAbs().maxCoeff();
      if (slack.minCoeff() >= -1e-10 * scale) {
        ++found;
        double obj = 0.0;
        for (int j = 0; j < nn; ++j) obj += std::fabs(z(j));
        if (!best || obj < best->objective) {
          best = VertexOptimum{obj, std::vector<double>(z.data(), z.data() + nn), 0};
        }
      }
    }
    int i = d;
    while (i > 0 && pick[static_cast<std::size_t>(i - 1)] == rows - d + i - 1) --i;
    if (i == 0) break;
    ++pick[static_cast<std::size_t>(i - 1)];
    for (int j = i; j < d; ++j) pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
  }
  if (best) best->vertices = found;
  return best;
}

}  // namespace oracle
