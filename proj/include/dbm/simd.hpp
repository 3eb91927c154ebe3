#pragma once

// Reductions over the initial points a_j. Every kernel has a scalar
// reference (namespace scalar) and an AVX2+FMA variant (namespace avx2);
// the unqualified entry points dispatch at runtime.

#include <complex>
#include <cstddef>
#include <span>

namespace dbm::simd {

using cplx = std::complex<double>;

// sum_j 1 / ((x - a_j)^2 + y^2)
double inv_sq_dist_sum(std::span<const double> a, double x, double y);
// sum_j 1 / (x - a_j)^3, for x off the points
double inv_cube_sum(std::span<const double> a, double x);
// sum_j 1 / (z - a_j), compensated
cplx cauchy_sum(std::span<const double> a, cplx z);
// sum_j log(z - a_j) modulo 2 pi i (imaginary part in (-pi, pi])
cplx log_prod(std::span<const double> a, cplx z);
// out_i = sum_j c_j / (z_i - w_j), complex sources in split layout
void cauchy_matvec(std::span<const double> w_re, std::span<const double> w_im,
                   std::span<const double> c_re, std::span<const double> c_im,
                   std::span<const cplx> z, std::span<cplx> out);

bool avx2_available();
// Force the scalar path (tests, benchmarking). Not thread-safe; call before work.
void force_scalar(bool on);

namespace scalar {
// log-sum fallback used when the renormalized product leaves double range
cplx log_sum(std::span<const double> a, cplx z);
double inv_sq_dist_sum(std::span<const double> a, double x, double y);
double inv_cube_sum(std::span<const double> a, double x);
cplx cauchy_sum(std::span<const double> a, cplx z);
cplx log_prod(std::span<const double> a, cplx z);
void cauchy_matvec(std::span<const double> w_re, std::span<const double> w_im,
                   std::span<const double> c_re, std::span<const double> c_im,
                   std::span<const cplx> z, std::span<cplx> out);
}  // namespace scalar

namespace avx2 {
double inv_sq_dist_sum(std::span<const double> a, double x, double y);
double inv_cube_sum(std::span<const double> a, double x);
cplx cauchy_sum(std::span<const double> a, cplx z);
cplx log_prod(std::span<const double> a, cplx z);
void cauchy_matvec(std::span<const double> w_re, std::span<const double> w_im,
                   std::span<const double> c_re, std::span<const double> c_im,
                   std::span<const cplx> z, std::span<cplx> out);
}  // namespace avx2

}  // namespace dbm::simd
