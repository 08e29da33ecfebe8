#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <stdexcept>

#include "sl1/generators.hpp"
#include "sl1/io.hpp"

using namespace sl1;
namespace fs = std::filesystem;

namespace {

// Regularized lower incomplete gamma P(a, x) by its power series.
double gamma_p(double a, double x) {
  long double term = 1.0L / a, sum = term;
  for (int n = 1; n < 100000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (term < sum * 1e-19L) break;
  }
  return static_cast<double>(std::exp(a * std::log(x) - x - std::lgamma(a)) * sum);
}

std::size_t nnz(const RealVector& v) {
  return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](double x) { return x != 0.0; }));
}

}  // namespace

TEST_CASE("RngSpec children are deterministic and distinct") {
  const RngSpec r{5, 7};
  CHECK(r.child(1) == r.child(1));
  CHECK_FALSE(r.child(1) == r.child(2));
  CHECK_FALSE(r.child(1) == RngSpec{5, 8}.child(1));
  Rng a(r), b(r);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(r);
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform();
    CHECK((u >= 0.0 && u < 1.0));
    const double p = c.uniform_pos();
    CHECK((p > 0.0 && p <= 1.0));
    CHECK(c.below(7) < 7);
  }
}

TEST_CASE("gen_gaussian_matrix") {
  const RngSpec r{100, 0};
  CHECK(gen_gaussian_matrix(20, 10, r) == gen_gaussian_matrix(20, 10, r));
  CHECK_FALSE(gen_gaussian_matrix(20, 10, r) == gen_gaussian_matrix(20, 10, RngSpec{100, 1}));
  CHECK_THROWS_AS(gen_gaussian_matrix(0, 10, r), std::invalid_argument);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const DenseMatrix a = gen_gaussian_matrix(200, 50, RngSpec{seed, 0});
    double mean = 0.0;
    for (double x : a.entries()) mean += x;
    mean /= 10000.0;
    double var = 0.0;
    for (double x : a.entries()) var += (x - mean) * (x - mean);
    var /= 9999.0;
    CHECK(std::fabs(mean) <= 0.05);
    CHECK(var >= 0.9);
    CHECK(var <= 1.1);
  }
}

TEST_CASE("gen_sparse_signal") {
  const RealVector full = gen_sparse_signal(10, 10, {}, RngSpec{1, 0});
  for (double x : full) CHECK(std::fabs(x) == 1.0);
  CHECK(gen_sparse_signal(6, 2, {}, RngSpec{9, 0}) == gen_sparse_signal(6, 2, {}, RngSpec{9, 0}));
  CHECK_THROWS_AS(gen_sparse_signal(3, 4, {}, RngSpec{1, 0}), std::invalid_argument);
  CHECK_THROWS_AS(gen_sparse_signal(3, 0, {}, RngSpec{1, 0}), std::invalid_argument);
  const Amplitude gauss{Amplitude::Law::gaussian};
  const Amplitude unif{Amplitude::Law::uniform, -2.0, 3.0};
  std::set<std::size_t> hit;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const std::size_t n = 1 + s % 30, k = 1 + s % n;
    CHECK(nnz(gen_sparse_signal(n, k, {}, RngSpec{s, 1})) == k);
    CHECK(nnz(gen_sparse_signal(n, k, gauss, RngSpec{s, 2})) == k);
    const RealVector u = gen_sparse_signal(n, k, unif, RngSpec{s, 3});
    CHECK(nnz(u) == k);
    for (double x : u) CHECK((x >= -2.0 && x <= 3.0));
    const RealVector one = gen_sparse_signal(8, 1, {}, RngSpec{s, 4});
    hit.insert(static_cast<std::size_t>(std::find_if(one.begin(), one.end(), [](double x) { return x != 0.0; }) -
                                        one.begin()));
  }
  CHECK(hit.size() == 8);
}

TEST_CASE("gen_compressible_signal") {
  RealVector x = gen_compressible_signal(3, 1.0, RngSpec{4, 0});
  std::vector<double> mags;
  for (double v : x) mags.push_back(std::fabs(v));
  std::sort(mags.begin(), mags.end());
  CHECK(mags == std::vector<double>{1.0 / 3.0, 1.0 / 2.0, 1.0});
  CHECK_THROWS_AS(gen_compressible_signal(3, 0.0, RngSpec{4, 0}), std::invalid_argument);
  CHECK_THROWS_AS(gen_compressible_signal(3, -1.0, RngSpec{4, 0}), std::invalid_argument);

  const RealVector steep = gen_compressible_signal(16, 10.0, RngSpec{5, 0});
  const RealVector h = hard_threshold(steep, 1);
  CHECK(norm_lp(h, Norm::l1) >= 0.999 * norm_lp(steep, Norm::l1));
  CHECK(compress_error_e0(gen_compressible_signal(16, 1.0, RngSpec{5, 0}), 4) > 0.0);
}

TEST_CASE("gen_sparse_noise hits the budget exactly") {
  CHECK(gen_sparse_noise(5, 2, 0.0, RngSpec{1, 0}) == RealVector(5, 0.0));
  const RealVector dense = gen_sparse_noise(5, 5, 1.0, RngSpec{1, 0});
  CHECK(nnz(dense) == 5);
  CHECK(norm_lp(dense, Norm::l1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(gen_sparse_noise(3, 4, 1.0, RngSpec{1, 0}), std::invalid_argument);
  CHECK_THROWS_AS(gen_sparse_noise(3, 1, -1.0, RngSpec{1, 0}), std::invalid_argument);
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    Rng r(RngSpec{seed, 99});
    const std::size_t m = 1 + r.below(200);
    const std::size_t s = 1 + r.below(m);
    const double eps = std::exp(10.0 * r.normal());
    const RealVector n = gen_sparse_noise(m, s, eps, RngSpec{seed, 0});
    CHECK(nnz(n) == s);
    const double l1 = norm_lp(n, Norm::l1);
    CHECK(std::fabs(l1 - eps) <= 2.0 * (std::nextafter(eps, 2.0 * eps) - eps));
    long double exact = 0;
    for (double v : n) exact += std::fabs(static_cast<long double>(v));
    CHECK(static_cast<double>(std::fabs(exact - eps)) <= 1e-14 * eps);
  }
}

TEST_CASE("gamma_quantile matches the incomplete gamma function") {
  for (double a : {1.0, 3.0, 100.0})
    for (double q : {0.01, 0.5, 0.99}) CHECK(gamma_p(a, gamma_quantile(a, q)) == doctest::Approx(q).epsilon(1e-9));
  CHECK_THROWS_AS(gamma_quantile(1.0, 1.0), std::invalid_argument);
}

TEST_CASE("gen_laplacian_noise") {
  for (double q : {0.5, 0.9, 0.99}) {
    const auto one = gen_laplacian_noise(1, q, RngSpec{3, 0});
    CHECK(one.epsilon == doctest::Approx(-std::log1p(-q)).epsilon(1e-12));
  }
  CHECK(gen_laplacian_noise(10, 0.9, RngSpec{3, 0}).n == gen_laplacian_noise(10, 0.9, RngSpec{3, 0}).n);
  CHECK_THROWS_AS(gen_laplacian_noise(10, 0.0, RngSpec{3, 0}), std::invalid_argument);
  CHECK_THROWS_AS(gen_laplacian_noise(10, 1.0, RngSpec{3, 0}), std::invalid_argument);

  std::size_t covered = 0;
  const std::size_t draws = 10000;
  for (std::size_t t = 0; t < draws; ++t) {
    const auto lap = gen_laplacian_noise(100, 0.99, RngSpec{2024, t});
    CHECK(lap.exceeded == (norm_lp(lap.n, Norm::l1) > lap.epsilon));
    covered += !lap.exceeded;
  }
  const double frac = static_cast<double>(covered) / draws;
  CHECK(frac >= 0.985);
  CHECK(frac <= 0.995);
}

TEST_CASE("make_instance invariants") {
  InstanceSpec spec;
  spec.n = 30;
  spec.m = 20;
  spec.k = 3;
  const SparseInstance clean = make_instance(spec, RngSpec{8, 0});
  CHECK(clean.epsilon == 0.0);
  CHECK(clean.y == mat_vec(clean.phi, clean.x));
  CHECK(nnz(clean.x) == 3);

  spec.noise = {NoiseSpec::Kind::sparse, 4, 2.5, 0.99};
  for (std::uint64_t t = 0; t < 20; ++t) {
    const SparseInstance inst = make_instance(spec, RngSpec{8, t});
    RealVector y = mat_vec(inst.phi, inst.x);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += inst.n[i];
    CHECK(inst.y == y);
    CHECK(norm_lp(inst.n, Norm::l1) <= inst.epsilon * (1 + 1e-15));
    CHECK(nnz(inst.n) == 4);
  }
  const SparseInstance a = make_instance(spec, RngSpec{8, 3});
  const SparseInstance b = make_instance(spec, RngSpec{8, 3});
  CHECK(a.phi == b.phi);
  CHECK(a.x == b.x);
  CHECK(a.y == b.y);

  spec.noise = {NoiseSpec::Kind::laplacian, 0, 0.0, 0.9};
  const SparseInstance lap = make_instance(spec, RngSpec{8, 0});
  CHECK(lap.epsilon == doctest::Approx(gamma_quantile(20.0, 0.9)));

  spec.k = 31;
  CHECK_THROWS_AS(make_instance(spec, RngSpec{8, 0}), std::invalid_argument);
}

TEST_CASE("instance spec JSON round trip") {
  InstanceSpec spec;
  spec.n = 12;
  spec.m = 7;
  spec.k = 2;
  spec.signal.kind = SignalSpec::Kind::compressible;
  spec.signal.decay = 1.5;
  spec.noise = {NoiseSpec::Kind::sparse, 3, 0.25, 0.99};
  const InstanceSpec back = instance_spec_from_json(to_json(spec));
  CHECK(to_json(back) == to_json(spec));
  CHECK_THROWS(instance_spec_from_json(nlohmann::json{{"N", 2}, {"M", 2}, {"noise", {{"kind", "bogus"}}}}));
  CHECK(rng_spec_from_json(to_json(RngSpec{3, 4})) == RngSpec{3, 4});
}

TEST_CASE("bundle round trip") {
  const fs::path dir = fs::temp_directory_path() / "sl1_gen_bundle" / "nested";
  fs::remove_all(dir.parent_path());
  InstanceSpec spec;
  spec.n = 9;
  spec.m = 6;
  spec.k = 2;
  spec.noise = {NoiseSpec::Kind::sparse, 2, 0.5, 0.99};
  const RngSpec rng{77, 1};
  const SparseInstance inst = make_instance(spec, rng);
  write_bundle(dir, inst, bundle_meta(inst, spec, rng));
  for (const char* f : {"phi.bin", "x.csv", "n.csv", "y.csv", "meta.json"}) CHECK(fs::exists(dir / f));
  const Bundle b = read_bundle(dir);
  CHECK(b.instance.phi == inst.phi);
  CHECK(b.instance.x == inst.x);
  CHECK(b.instance.n == inst.n);
  CHECK(b.instance.y == inst.y);
  CHECK(b.instance.epsilon == inst.epsilon);
  CHECK(b.instance.k == 2);
  CHECK(b.meta.at("N") == 9);
  CHECK(b.meta.at("M") == 6);
  CHECK(b.meta.at("rng").at("seed") == 77);
  CHECK(b.meta.at("sampler") == std::string(kSamplerName));
  CHECK(b.meta.at("spec_revision") == std::string(kFormatRevision));

  io::atomic_write_file(dir / "y.csv", "1\n2\n");
  CHECK_THROWS_AS(read_bundle(dir), io::IoError);
  fs::remove(dir / "meta.json");
  CHECK_THROWS_AS(read_bundle(dir), io::IoError);
  fs::remove_all(dir.parent_path());
}
