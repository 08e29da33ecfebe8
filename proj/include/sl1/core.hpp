#pragma once

// Vector/matrix model shared by the whole library: dense row-major matrices,
// supports, norms, hard thresholding, the sign convention, and the
// compressibility error e0(K).

#include <cstddef>
#include <span>
#include <vector>

namespace sl1 {

using RealVector = std::vector<double>;

// M x N real matrix, row-major, finite entries.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  // Zero matrix. Throws std::invalid_argument on a zero dimension.
  DenseMatrix(std::size_t rows, std::size_t cols);
  // Throws std::invalid_argument when entries.size() != rows * cols or an
  // entry is not finite.
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix diagonal(std::span<const double> d);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }

  const std::vector<double>& entries() const { return data_; }

  // Copy of the listed columns, in the given order.
  DenseMatrix select_columns(std::span<const std::size_t> columns) const;

  double frobenius_norm() const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Strictly increasing 0-based indices into [0, dimension).
class SupportSet {
 public:
  SupportSet() = default;
  // Throws std::invalid_argument unless indices are strictly increasing and
  // below dimension.
  SupportSet(std::vector<std::size_t> indices, std::size_t dimension);

  // Sorts and validates; duplicates are rejected.
  static SupportSet from_unsorted(std::vector<std::size_t> indices, std::size_t dimension);
  static SupportSet full(std::size_t dimension);
  // Indices of the nonzero entries of v.
  static SupportSet of(std::span<const double> v);

  const std::vector<std::size_t>& indices() const { return indices_; }
  std::size_t size() const { return indices_.size(); }
  bool empty() const { return indices_.empty(); }
  std::size_t dimension() const { return dimension_; }
  bool contains(std::size_t i) const;

  SupportSet complement() const;
  SupportSet unite(const SupportSet& other) const;
  bool disjoint_from(const SupportSet& other) const;

  friend bool operator==(const SupportSet&, const SupportSet&) = default;

 private:
  std::vector<std::size_t> indices_;
  std::size_t dimension_ = 0;
};

// T0 followed by the blocks T1, T2, ... of the complement ordered by
// decreasing magnitude of the vector used to build it. Every block has K
// indices except possibly the last.
struct SupportPartition {
  SupportSet t0;
  std::vector<SupportSet> blocks;
};

enum class Norm { l0, l1, l2, linf };

double norm_lp(std::span<const double> v, Norm p = Norm::l2);

double dot(std::span<const double> a, std::span<const double> b);

// Indices of the k largest magnitudes, magnitude ties broken by lower index.
// Returned in selection order (largest first).
std::vector<std::size_t> top_k_indices(std::span<const double> v, std::size_t k);

// Keeps the K largest-magnitude entries (ties: lower index wins).
RealVector hard_threshold(std::span<const double> v, std::size_t k);

// +1 for strictly positive entries, -1 otherwise (including 0).
RealVector sign_vec(std::span<const double> v);

// ||x - H_K(x)||_1 / sqrt(K).
double compress_error_e0(std::span<const double> x, std::size_t k);

SupportPartition partition_support(std::span<const double> h, const SupportSet& t0, std::size_t k);

// v on s, zero elsewhere.
RealVector restrict_to(std::span<const double> v, const SupportSet& s);

// Row-wise dot products; the reduction order is fixed (see simd.hpp).
RealVector mat_vec(const DenseMatrix& a, std::span<const double> v);
// A^T w accumulated row by row.
RealVector mat_transpose_vec(const DenseMatrix& a, std::span<const double> w);

// ||y - A u||_1.
double residual_l1(const DenseMatrix& a, std::span<const double> u, std::span<const double> y);

void require_finite(std::span<const double> v, const char* what);

}  // namespace sl1
