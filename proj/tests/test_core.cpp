#include <doctest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "sl1/core.hpp"
#include "sl1/rng.hpp"

using namespace sl1;

namespace {

RealVector random_vector(Rng& rng, std::size_t n, bool with_ties = false) {
  RealVector v(n);
  for (double& x : v) x = with_ties ? static_cast<double>(static_cast<int>(rng.below(5)) - 2) : rng.normal();
  return v;
}

double l1(const RealVector& v) {
  double s = 0.0;
  for (double x : v) s += std::fabs(x);
  return s;
}

}  // namespace

TEST_CASE("norm examples") {
  const RealVector v{3.0, -4.0};
  CHECK(norm_lp(v, Norm::l2) == 5.0);
  CHECK(norm_lp(v, Norm::l1) == 7.0);
  CHECK(norm_lp(v, Norm::linf) == 4.0);
  CHECK(norm_lp(RealVector{0.0, 0.0, 2.0}, Norm::l0) == 1.0);
  CHECK(norm_lp(RealVector{}, Norm::l2) == 0.0);
}

TEST_CASE("hard_threshold examples") {
  CHECK(hard_threshold(RealVector{3, -1, 0, 2}, 2) == RealVector{3, 0, 0, 2});
  const RealVector v{0.5, -2, 7, 1e-3};
  CHECK(hard_threshold(v, v.size()) == v);
  CHECK(hard_threshold(RealVector{1, -1, 0}, 1) == RealVector{1, 0, 0});
  CHECK(hard_threshold(RealVector{1, 2}, 0) == RealVector{0, 0});
  CHECK_THROWS_AS(hard_threshold(RealVector{1, 2}, 3), std::invalid_argument);
}

TEST_CASE("top_k_indices orders by magnitude, ties by index") {
  CHECK(top_k_indices(RealVector{1, -3, 3, 2}, 3) == std::vector<std::size_t>{1, 2, 3});
}

TEST_CASE("hard_threshold is the best K-term approximation") {
  Rng rng(RngSpec{21, 0});
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(10);
    const std::size_t k = rng.below(n + 1);
    const RealVector v = random_vector(rng, n, trial % 2 == 0);
    const RealVector h = hard_threshold(v, k);
    CHECK(norm_lp(h, Norm::l0) <= static_cast<double>(k));
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) err += std::fabs(v[i] - h[i]);
    double best = std::numeric_limits<double>::infinity();
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      if (static_cast<std::size_t>(std::popcount(mask)) > k) continue;
      double e = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        if (!(mask >> i & 1u)) e += std::fabs(v[i]);
      best = std::min(best, e);
    }
    CHECK(err == doctest::Approx(best).epsilon(1e-14));
  }
}

TEST_CASE("sign_vec convention") {
  CHECK(sign_vec(RealVector{2.5, -3, 0}) == RealVector{1, -1, -1});
  CHECK(sign_vec(RealVector{0, 0, 0}) == RealVector{-1, -1, -1});
  CHECK(sign_vec(RealVector{-0.0}) == RealVector{-1});
  CHECK(sign_vec(RealVector{1e-300, 4}) == RealVector{1, 1});
}

TEST_CASE("sign_vec properties") {
  Rng rng(RngSpec{22, 0});
  for (int trial = 0; trial < 50; ++trial) {
    RealVector v = random_vector(rng, 1 + rng.below(20), trial % 3 == 0);
    const RealVector s = sign_vec(v);
    for (double x : s) CHECK((x == 1.0 || x == -1.0));
    bool has_zero = false;
    for (double x : v) has_zero = has_zero || x == 0.0;
    if (has_zero) continue;
    RealVector neg = v;
    for (double& x : neg) x = -x;
    const RealVector sn = sign_vec(neg);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(sn[i] == -s[i]);
  }
}

TEST_CASE("compress_error_e0 examples") {
  CHECK(compress_error_e0(RealVector{0, 5, 0, -1}, 2) == 0.0);
  CHECK(compress_error_e0(RealVector{1, 1, 1, 1}, 1) == 3.0);
  CHECK(compress_error_e0(RealVector{2, 1, 1}, 1) == 2.0);
  CHECK(compress_error_e0(RealVector{4, 1, 1, 1, 1}, 4) == doctest::Approx(1.0 / 2.0));
  CHECK_THROWS_AS(compress_error_e0(RealVector{1, 2}, 0), std::invalid_argument);
  CHECK_THROWS_AS(compress_error_e0(RealVector{1, 2}, 3), std::invalid_argument);
}

TEST_CASE("compress_error_e0 vanishes exactly on K-sparse vectors") {
  Rng rng(RngSpec{23, 0});
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(12);
    RealVector v = random_vector(rng, n, true);
    const std::size_t k = 1 + rng.below(n);
    const bool sparse = norm_lp(v, Norm::l0) <= static_cast<double>(k);
    CHECK((compress_error_e0(v, k) == 0.0) == sparse);
  }
}

TEST_CASE("partition_support examples") {
  const RealVector h{5, -4, 3, 2, 1, 0.5};
  const auto p = partition_support(h, SupportSet({0, 1}, 6), 2);
  CHECK(p.t0 == SupportSet({0, 1}, 6));
  REQUIRE(p.blocks.size() == 2);
  CHECK(p.blocks[0].indices() == std::vector<std::size_t>{2, 3});
  CHECK(p.blocks[1].indices() == std::vector<std::size_t>{4, 5});

  const RealVector z{7, 0, 0, 0, 0};
  const auto q = partition_support(z, SupportSet({0}, 5), 2);
  REQUIRE(q.blocks.size() == 2);
  CHECK(q.blocks[0].indices() == std::vector<std::size_t>{1, 2});
  CHECK(q.blocks[1].indices() == std::vector<std::size_t>{3, 4});

  const auto r = partition_support(RealVector{1, 2, 3, 4}, SupportSet({}, 4), 3);
  REQUIRE(r.blocks.size() == 2);
  CHECK(r.blocks[1].size() == 1);

  CHECK_THROWS_AS(partition_support(h, SupportSet({0}, 7), 2), std::invalid_argument);
  CHECK_THROWS_AS(partition_support(h, SupportSet({0}, 6), 0), std::invalid_argument);
}

TEST_CASE("partition blocks are ordered and cover the complement") {
  Rng rng(RngSpec{24, 0});
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(30);
    const RealVector h = random_vector(rng, n, trial % 2 == 0);
    const std::size_t k = 1 + rng.below(n - 1);
    const auto t0v = top_k_indices(random_vector(rng, n), k);
    const SupportSet t0 = SupportSet::from_unsorted(t0v, n);
    const auto p = partition_support(h, t0, k);
    std::vector<int> seen(n, 0);
    for (std::size_t i : t0.indices()) ++seen[i];
    for (std::size_t b = 0; b < p.blocks.size(); ++b) {
      if (b + 1 < p.blocks.size()) CHECK(p.blocks[b].size() == k);
      for (std::size_t i : p.blocks[b].indices()) ++seen[i];
      if (b == 0) continue;
      double mx = 0.0, mn = std::numeric_limits<double>::infinity();
      for (std::size_t i : p.blocks[b].indices()) mx = std::max(mx, std::fabs(h[i]));
      for (std::size_t i : p.blocks[b - 1].indices()) mn = std::min(mn, std::fabs(h[i]));
      CHECK(mx <= mn);
    }
    for (int c : seen) CHECK(c == 1);
  }
}

TEST_CASE("restrict_to") {
  CHECK(restrict_to(RealVector{1, 2, 3}, SupportSet({1}, 3)) == RealVector{0, 2, 0});
  const RealVector v{1, -2, 3};
  CHECK(restrict_to(v, SupportSet::full(3)) == v);
  CHECK(restrict_to(v, SupportSet({}, 3)) == RealVector{0, 0, 0});
  CHECK_THROWS_AS(restrict_to(v, SupportSet({3}, 4)), std::invalid_argument);
  Rng rng(RngSpec{25, 0});
  for (int trial = 0; trial < 30; ++trial) {
    const RealVector w = random_vector(rng, 10);
    const SupportSet s = SupportSet::from_unsorted(top_k_indices(random_vector(rng, 10), rng.below(11)), 10);
    const RealVector once = restrict_to(w, s);
    CHECK(restrict_to(once, s) == once);
  }
}

TEST_CASE("SupportSet validation and set operations") {
  CHECK_THROWS_AS(SupportSet({2, 1}, 3), std::invalid_argument);
  CHECK_THROWS_AS(SupportSet({1, 1}, 3), std::invalid_argument);
  CHECK_THROWS_AS(SupportSet({3}, 3), std::invalid_argument);
  CHECK_THROWS_AS(SupportSet::from_unsorted({1, 1}, 3), std::invalid_argument);
  const SupportSet a = SupportSet::from_unsorted({4, 0}, 5);
  CHECK(a.indices() == std::vector<std::size_t>{0, 4});
  CHECK(a.complement().indices() == std::vector<std::size_t>{1, 2, 3});
  CHECK(a.disjoint_from(a.complement()));
  CHECK(a.unite(a.complement()) == SupportSet::full(5));
  CHECK(SupportSet::of(RealVector{0, 1, 0, -2}).indices() == std::vector<std::size_t>{1, 3});
  CHECK(a.contains(4));
  CHECK_FALSE(a.contains(2));
}

TEST_CASE("DenseMatrix construction") {
  CHECK_THROWS_AS(DenseMatrix(0, 3), std::invalid_argument);
  CHECK_THROWS_AS(DenseMatrix(2, 2, {1, 2, 3}), std::invalid_argument);
  CHECK_THROWS_AS(DenseMatrix(1, 1, {std::nan("")}), std::invalid_argument);
  CHECK_THROWS_AS(DenseMatrix(1, 1, {std::numeric_limits<double>::infinity()}), std::invalid_argument);
  const DenseMatrix a(2, 3, {1, 2, 3, 4, 5, 6});
  CHECK(a(1, 2) == 6.0);
  const std::vector<std::size_t> cols{2, 0};
  CHECK(a.select_columns(cols) == DenseMatrix(2, 2, {3, 1, 6, 4}));
  CHECK(a.frobenius_norm() == doctest::Approx(std::sqrt(91.0)));
  const RealVector d{3, 1};
  CHECK(DenseMatrix::diagonal(d) == DenseMatrix(2, 2, {3, 0, 0, 1}));
}

TEST_CASE("mat_vec examples") {
  CHECK(mat_vec(DenseMatrix::identity(2), RealVector{3, 4}) == RealVector{3, 4});
  CHECK(mat_vec(DenseMatrix(3, 2), RealVector{3, 4}) == RealVector{0, 0, 0});
  const DenseMatrix a(2, 2, {1, 2, 3, 4});
  CHECK(mat_vec(a, RealVector{1, 1}) == RealVector{3, 7});
  CHECK(mat_transpose_vec(a, RealVector{1, 1}) == RealVector{4, 6});
  CHECK_THROWS_AS(mat_vec(a, RealVector{1, 1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(mat_transpose_vec(a, RealVector{1}), std::invalid_argument);
  CHECK(residual_l1(a, RealVector{1, 1}, RealVector{0, 0}) == 10.0);
}

TEST_CASE("mat_vec agrees with a naive product") {
  Rng rng(RngSpec{26, 0});
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 1 + rng.below(15), n = 1 + rng.below(40);
    std::vector<double> e(m * n);
    for (double& x : e) x = rng.normal();
    const DenseMatrix a(m, n, e);
    const RealVector v = random_vector(rng, n);
    const RealVector w = random_vector(rng, m);
    const RealVector av = mat_vec(a, v);
    const RealVector atw = mat_transpose_vec(a, w);
    for (std::size_t i = 0; i < m; ++i) {
      long double s = 0;
      for (std::size_t j = 0; j < n; ++j) s += static_cast<long double>(a(i, j)) * v[j];
      CHECK(av[i] == doctest::Approx(static_cast<double>(s)).epsilon(1e-12).scale(l1(v)));
    }
    for (std::size_t j = 0; j < n; ++j) {
      long double s = 0;
      for (std::size_t i = 0; i < m; ++i) s += static_cast<long double>(a(i, j)) * w[i];
      CHECK(atw[j] == doctest::Approx(static_cast<double>(s)).epsilon(1e-12).scale(l1(w)));
    }
  }
}

TEST_CASE("require_finite") {
  CHECK_NOTHROW(require_finite(RealVector{1, 2}, "v"));
  CHECK_THROWS_AS(require_finite(RealVector{1, std::nan("")}, "v"), std::invalid_argument);
}
