#include "sl1/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "sl1/simd.hpp"

namespace sl1 {

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + ": non-finite entry");
  }
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols)
    : DenseMatrix(rows, cols, std::vector<double>(rows * cols, 0.0)) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  if (rows == 0 || cols == 0) throw std::invalid_argument("DenseMatrix: zero dimension");
  if (data_.size() != rows * cols) {
    throw std::invalid_argument("DenseMatrix: entry count " + std::to_string(data_.size()) +
                                " != rows*cols " + std::to_string(rows * cols));
  }
  require_finite(data_, "DenseMatrix");
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> d) {
  DenseMatrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

DenseMatrix DenseMatrix::select_columns(std::span<const std::size_t> columns) const {
  if (columns.empty()) throw std::invalid_argument("select_columns: empty column list");
  std::vector<double> out(rows_ * columns.size());
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t k = 0; k < columns.size(); ++k) {
      if (columns[k] >= cols_) throw std::invalid_argument("select_columns: column out of range");
      out[i * columns.size() + k] = (*this)(i, columns[k]);
    }
  }
  return DenseMatrix(rows_, columns.size(), std::move(out));
}

double DenseMatrix::frobenius_norm() const { return norm_lp(data_, Norm::l2); }

SupportSet::SupportSet(std::vector<std::size_t> indices, std::size_t dimension)
    : indices_(std::move(indices)), dimension_(dimension) {
  for (std::size_t k = 0; k < indices_.size(); ++k) {
    if (indices_[k] >= dimension_) {
      throw std::invalid_argument("SupportSet: index " + std::to_string(indices_[k]) +
                                  " out of range for dimension " + std::to_string(dimension_));
    }
    if (k > 0 && indices_[k] <= indices_[k - 1]) {
      throw std::invalid_argument("SupportSet: indices must be strictly increasing");
    }
  }
}

SupportSet SupportSet::from_unsorted(std::vector<std::size_t> indices, std::size_t dimension) {
  std::sort(indices.begin(), indices.end());
  return SupportSet(std::move(indices), dimension);
}

SupportSet SupportSet::full(std::size_t dimension) {
  std::vector<std::size_t> idx(dimension);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return SupportSet(std::move(idx), dimension);
}

SupportSet SupportSet::of(std::span<const double> v) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] != 0.0) idx.push_back(i);
  }
  return SupportSet(std::move(idx), v.size());
}

bool SupportSet::contains(std::size_t i) const {
  return std::binary_search(indices_.begin(), indices_.end(), i);
}

SupportSet SupportSet::complement() const {
  std::vector<std::size_t> idx;
  idx.reserve(dimension_ - indices_.size());
  std::size_t next = 0;
  for (std::size_t i = 0; i < dimension_; ++i) {
    if (next < indices_.size() && indices_[next] == i) {
      ++next;
    } else {
      idx.push_back(i);
    }
  }
  return SupportSet(std::move(idx), dimension_);
}

SupportSet SupportSet::unite(const SupportSet& other) const {
  if (other.dimension_ != dimension_) throw std::invalid_argument("SupportSet: dimension mismatch");
  std::vector<std::size_t> idx;
  std::set_union(indices_.begin(), indices_.end(), other.indices_.begin(), other.indices_.end(),
                 std::back_inserter(idx));
  return SupportSet(std::move(idx), dimension_);
}

bool SupportSet::disjoint_from(const SupportSet& other) const {
  auto a = indices_.begin();
  auto b = other.indices_.begin();
  while (a != indices_.end() && b != other.indices_.end()) {
    if (*a == *b) return false;
    if (*a < *b) {
      ++a;
    } else {
      ++b;
    }
  }
  return true;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  return simd::kernels().dot(a.data(), b.data(), a.size());
}

double norm_lp(std::span<const double> v, Norm p) {
  switch (p) {
    case Norm::l0:
      return static_cast<double>(std::count_if(v.begin(), v.end(), [](double x) { return x != 0.0; }));
    case Norm::l1:
      return simd::kernels().abs_sum(v.data(), v.size());
    case Norm::l2:
      return std::sqrt(simd::kernels().dot(v.data(), v.data(), v.size()));
    case Norm::linf: {
      double m = 0.0;
      for (double x : v) m = std::max(m, std::fabs(x));
      return m;
    }
  }
  return 0.0;
}

namespace {

// Orders indices by decreasing magnitude, lower index first on ties.
struct ByMagnitude {
  std::span<const double> v;
  bool operator()(std::size_t a, std::size_t b) const {
    const double ma = std::fabs(v[a]);
    const double mb = std::fabs(v[b]);
    if (ma != mb) return ma > mb;
    return a < b;
  }
};

}  // namespace

std::vector<std::size_t> top_k_indices(std::span<const double> v, std::size_t k) {
  if (k > v.size()) {
    throw std::invalid_argument("hard threshold: K=" + std::to_string(k) + " exceeds dimension " +
                                std::to_string(v.size()));
  }
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    ByMagnitude{v});
  idx.resize(k);
  return idx;
}

RealVector hard_threshold(std::span<const double> v, std::size_t k) {
  RealVector out(v.size(), 0.0);
  for (std::size_t i : top_k_indices(v, k)) out[i] = v[i];
  return out;
}

RealVector sign_vec(std::span<const double> v) {
  RealVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] > 0.0 ? 1.0 : -1.0;
  return out;
}

double compress_error_e0(std::span<const double> x, std::size_t k) {
  if (k == 0 || k > x.size()) {
    throw std::invalid_argument("compress_error_e0: K=" + std::to_string(k) +
                                " outside [1, " + std::to_string(x.size()) + "]");
  }
  const RealVector xk = hard_threshold(x, k);
  const double tail = simd::kernels().abs_diff_sum(x.data(), xk.data(), x.size());
  return tail / std::sqrt(static_cast<double>(k));
}

SupportPartition partition_support(std::span<const double> h, const SupportSet& t0, std::size_t k) {
  if (t0.dimension() != h.size()) {
    throw std::invalid_argument("partition_support: t0 dimension " + std::to_string(t0.dimension()) +
                                " != vector dimension " + std::to_string(h.size()));
  }
  if (k == 0 || k > h.size()) throw std::invalid_argument("partition_support: K out of range");
  if (t0.size() > k) throw std::invalid_argument("partition_support: |t0| exceeds K");

  std::vector<std::size_t> rest = t0.complement().indices();
  std::stable_sort(rest.begin(), rest.end(), ByMagnitude{h});

  SupportPartition part{t0, {}};
  for (std::size_t start = 0; start < rest.size(); start += k) {
    const std::size_t stop = std::min(rest.size(), start + k);
    std::vector<std::size_t> block(rest.begin() + static_cast<std::ptrdiff_t>(start),
                                   rest.begin() + static_cast<std::ptrdiff_t>(stop));
    part.blocks.push_back(SupportSet::from_unsorted(std::move(block), h.size()));
  }
  return part;
}

RealVector restrict_to(std::span<const double> v, const SupportSet& s) {
  if (s.dimension() != v.size()) {
    throw std::invalid_argument("restrict: support dimension " + std::to_string(s.dimension()) +
                                " != vector dimension " + std::to_string(v.size()));
  }
  RealVector out(v.size(), 0.0);
  for (std::size_t i : s.indices()) out[i] = v[i];
  return out;
}

RealVector mat_vec(const DenseMatrix& a, std::span<const double> v) {
  if (v.size() != a.cols()) {
    throw std::invalid_argument("mat_vec: matrix has " + std::to_string(a.cols()) +
                                " columns, vector has " + std::to_string(v.size()));
  }
  const auto& k = simd::kernels();
  RealVector out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) out[i] = k.dot(a.row(i).data(), v.data(), v.size());
  return out;
}

RealVector mat_transpose_vec(const DenseMatrix& a, std::span<const double> w) {
  if (w.size() != a.rows()) {
    throw std::invalid_argument("mat_transpose_vec: matrix has " + std::to_string(a.rows()) +
                                " rows, vector has " + std::to_string(w.size()));
  }
  const auto& k = simd::kernels();
  RealVector out(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) k.axpy(w[i], a.row(i).data(), out.data(), a.cols());
  return out;
}

double residual_l1(const DenseMatrix& a, std::span<const double> u, std::span<const double> y) {
  if (y.size() != a.rows()) throw std::invalid_argument("residual_l1: y length does not match rows");
  const RealVector au = mat_vec(a, u);
  return simd::kernels().abs_diff_sum(y.data(), au.data(), y.size());
}

}  // namespace sl1
