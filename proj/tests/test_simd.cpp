#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "dbm/simd.hpp"

using namespace dbm::simd;

namespace {

std::vector<double> random_points(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  std::vector<double> a(n);
  for (auto& v : a) v = u(rng);
  return a;
}

const std::size_t kSizes[] = {1, 3, 4, 7, 8, 16, 33, 200, 1001};

}  // namespace

TEST_CASE("inverse square distance sum: avx2 matches scalar") {
  for (std::size_t n : kSizes) {
    auto a = random_points(n, n);
    for (double x : {-2.0, 0.1, 0.77}) {
      for (double y : {0.0, 1e-3, 0.5}) {
        const double s = scalar::inv_sq_dist_sum(a, x, y);
        const double v = avx2::inv_sq_dist_sum(a, x, y);
        CHECK(std::abs(s - v) <= 1e-13 * std::abs(s));
      }
    }
  }
}

TEST_CASE("inverse cube sum: avx2 matches scalar") {
  for (std::size_t n : kSizes) {
    auto a = random_points(n, 7 * n);
    double scale = 0.0;
    for (double x : {-2.0, 2.5}) {
      for (double aj : a) scale += std::abs(1.0 / std::pow(x - aj, 3));
      CHECK(std::abs(scalar::inv_cube_sum(a, x) - avx2::inv_cube_sum(a, x)) <= 1e-13 * scale);
    }
  }
}

TEST_CASE("compensated Cauchy sum: avx2 matches scalar and a long double reference") {
  for (std::size_t n : kSizes) {
    auto a = random_points(n, 11 * n);
    for (cplx z : {cplx{0.3, 1e-4}, cplx{-1.0, 0.5}, cplx{3.0, 0.0}}) {
      long double rr = 0, ri = 0, mag = 0;
      for (double aj : a) {
        const std::complex<long double> d = std::complex<long double>(z) - (long double)aj;
        const auto term = 1.0L / d;
        rr += term.real();
        ri += term.imag();
        mag += std::abs(term);
      }
      const cplx s = scalar::cauchy_sum(a, z), v = avx2::cauchy_sum(a, z);
      CHECK(std::abs(s - v) <= 1e-14 * double(mag));
      CHECK(std::abs(s - cplx(double(rr), double(ri))) <= 1e-14 * double(mag));
    }
  }
}

TEST_CASE("log product: avx2 matches scalar modulo 2 pi i") {
  for (std::size_t n : kSizes) {
    auto a = random_points(n, 13 * n);
    for (cplx z : {cplx{0.3, 0.05}, cplx{-1.0, 0.5}, cplx{3.0, 0.0}, cplx{0.2, 40.0}}) {
      const cplx s = scalar::log_prod(a, z), v = avx2::log_prod(a, z);
      double ref = 0.0;
      for (double aj : a) ref += std::log(std::abs(z - aj));
      CHECK(std::abs(s.real() - ref) <= 1e-12 * (1.0 + std::abs(ref)));
      CHECK(std::abs(v.real() - ref) <= 1e-12 * (1.0 + std::abs(ref)));
      CHECK(std::abs(std::exp(cplx(0.0, s.imag() - v.imag())) - 1.0) <= 1e-11);
    }
  }
}

TEST_CASE("log product survives products far outside double range") {
  std::vector<double> a(2000, 0.0);
  for (std::size_t j = 0; j < a.size(); ++j) a[j] = 1e-3 * double(j);
  const cplx z{1e6, 1.0};
  const cplx s = scalar::log_prod(a, z), v = avx2::log_prod(a, z);
  CHECK(std::isfinite(s.real()));
  CHECK(std::abs(s.real() - v.real()) <= 1e-12 * std::abs(s.real()));
  const cplx zero = scalar::log_prod(a, cplx{a[5], 0.0});
  CHECK(zero.real() == -INFINITY);
}

TEST_CASE("Cauchy matvec: avx2 matches scalar") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (std::size_t m : {1, 5, 64, 333}) {
    std::vector<double> wr(m), wi(m), cr(m), ci(m);
    for (std::size_t j = 0; j < m; ++j) {
      wr[j] = g(rng);
      wi[j] = g(rng);
      cr[j] = g(rng);
      ci[j] = g(rng);
    }
    std::vector<cplx> z{{0.1, 3.0}, {-4.0, 0.2}, {10.0, -10.0}};
    std::vector<cplx> s(z.size()), v(z.size());
    scalar::cauchy_matvec(wr, wi, cr, ci, z, s);
    avx2::cauchy_matvec(wr, wi, cr, ci, z, v);
    for (std::size_t i = 0; i < z.size(); ++i) {
      double mag = 0.0;
      for (std::size_t j = 0; j < m; ++j) mag += std::abs(cplx(cr[j], ci[j]) / (z[i] - cplx(wr[j], wi[j])));
      CHECK(std::abs(s[i] - v[i]) <= 1e-13 * mag);
    }
  }
}

TEST_CASE("dispatch honours force_scalar") {
  auto a = random_points(37, 1);
  force_scalar(true);
  const double s = inv_sq_dist_sum(a, 0.2, 0.1);
  force_scalar(false);
  CHECK(s == scalar::inv_sq_dist_sum(a, 0.2, 0.1));
}
