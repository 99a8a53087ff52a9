#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <vector>

#include "navfield/kernels.hpp"
#include "navfield/rng.hpp"

using namespace navfield;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng, double lo = -3.0,
                               double hi = 3.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("scalar kernels match handwritten loops") {
  const auto& k = kernels::scalar_table();
  Rng rng(11);
  auto a = random_vec(37, rng), b = random_vec(37, rng);
  std::vector<double> out(37), want(37);

  k.add(a.data(), b.data(), out.data(), 37);
  for (std::size_t i = 0; i < 37; ++i) want[i] = a[i] + b[i];
  CHECK(bitwise_equal(out, want));

  k.mul(a.data(), b.data(), out.data(), 37);
  for (std::size_t i = 0; i < 37; ++i) want[i] = a[i] * b[i];
  CHECK(bitwise_equal(out, want));

  k.relu(a.data(), out.data(), 37);
  for (std::size_t i = 0; i < 37; ++i) want[i] = a[i] > 0.0 ? a[i] : 0.0;
  CHECK(bitwise_equal(out, want));

  std::vector<double> y = b;
  k.axpy(0.75, a.data(), y.data(), 37);
  for (std::size_t i = 0; i < 37; ++i) want[i] = b[i] + 0.75 * a[i];
  CHECK(bitwise_equal(y, want));
}

TEST_CASE("scalar gemm matches a naive triple loop") {
  const auto& k = kernels::scalar_table();
  Rng rng(12);
  const std::size_t m = 5, kk = 7, n = 4;
  auto a = random_vec(m * kk, rng), b = random_vec(kk * n, rng);
  std::vector<double> c(m * n, 0.0), want(m * n, 0.0);
  k.gemm(m, kk, n, a.data(), b.data(), c.data(), false);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < kk; ++p)
      for (std::size_t j = 0; j < n; ++j)
        want[i * n + j] += a[i * kk + p] * b[p * n + j];
  for (std::size_t i = 0; i < m * n; ++i)
    CHECK(c[i] == doctest::Approx(want[i]).epsilon(1e-12));

  // accumulate adds on top of existing C
  std::vector<double> c2 = c;
  k.gemm(m, kk, n, a.data(), b.data(), c2.data(), true);
  for (std::size_t i = 0; i < m * n; ++i)
    CHECK(c2[i] == doctest::Approx(2.0 * c[i]).epsilon(1e-12));
}

TEST_CASE("vector backend is bitwise identical to the scalar reference") {
  const auto* vec = kernels::avx2_table();
  if (!vec) {
    MESSAGE("avx2 not available; skipping equivalence checks");
    return;
  }
  const auto& ref = kernels::scalar_table();
  Rng rng(13);
  // sizes straddling the vector width and its remainders
  for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 31u, 64u, 257u}) {
    auto a = random_vec(n, rng), b = random_vec(n, rng, 0.5, 3.0);
    std::vector<double> r(n), v(n);
    ref.add(a.data(), b.data(), r.data(), n);
    vec->add(a.data(), b.data(), v.data(), n);
    CHECK(bitwise_equal(r, v));
    ref.sub(a.data(), b.data(), r.data(), n);
    vec->sub(a.data(), b.data(), v.data(), n);
    CHECK(bitwise_equal(r, v));
    ref.mul(a.data(), b.data(), r.data(), n);
    vec->mul(a.data(), b.data(), v.data(), n);
    CHECK(bitwise_equal(r, v));
    ref.div(a.data(), b.data(), r.data(), n);
    vec->div(a.data(), b.data(), v.data(), n);
    CHECK(bitwise_equal(r, v));
    ref.scale(a.data(), -1.37, r.data(), n);
    vec->scale(a.data(), -1.37, v.data(), n);
    CHECK(bitwise_equal(r, v));
    ref.relu(a.data(), r.data(), n);
    vec->relu(a.data(), v.data(), n);
    CHECK(bitwise_equal(r, v));
    std::vector<double> yr = b, yv = b;
    ref.axpy(0.421, a.data(), yr.data(), n);
    vec->axpy(0.421, a.data(), yv.data(), n);
    CHECK(bitwise_equal(yr, yv));
  }
}

TEST_CASE("gemm and transpose are bitwise identical across backends") {
  const auto* vec = kernels::avx2_table();
  if (!vec) {
    MESSAGE("avx2 not available; skipping equivalence checks");
    return;
  }
  const auto& ref = kernels::scalar_table();
  Rng rng(14);
  const std::size_t dims[] = {1, 2, 3, 4, 5, 8, 13, 17};
  for (std::size_t m : dims)
    for (std::size_t k : dims)
      for (std::size_t n : dims) {
        auto a = random_vec(m * k, rng);
        auto b = random_vec(k * n, rng);
        std::vector<double> cr(m * n, 0.5), cv(m * n, 0.5);
        ref.gemm(m, k, n, a.data(), b.data(), cr.data(), false);
        vec->gemm(m, k, n, a.data(), b.data(), cv.data(), false);
        REQUIRE(bitwise_equal(cr, cv));
        ref.gemm(m, k, n, a.data(), b.data(), cr.data(), true);
        vec->gemm(m, k, n, a.data(), b.data(), cv.data(), true);
        REQUIRE(bitwise_equal(cr, cv));
      }
  for (std::size_t r : dims)
    for (std::size_t c : dims) {
      auto src = random_vec(r * c, rng);
      std::vector<double> tr(r * c), tv(r * c);
      ref.transpose(r, c, src.data(), tr.data());
      vec->transpose(r, c, src.data(), tv.data());
      REQUIRE(bitwise_equal(tr, tv));
    }
}

TEST_CASE("backend selection") {
  kernels::force_backend("scalar");
  CHECK(std::string(kernels::active().name) == "scalar");
  if (kernels::avx2_table()) {
    kernels::force_backend("avx2");
    CHECK(std::string(kernels::active().name) == "avx2");
  }
  CHECK_THROWS(kernels::force_backend("neon"));
  kernels::force_backend(nullptr);  // back to auto-detection
}
