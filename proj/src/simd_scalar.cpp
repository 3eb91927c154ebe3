#include <algorithm>
#include <cmath>
#include <numbers>

#include "dbm/simd.hpp"

namespace dbm::simd::scalar {

double inv_sq_dist_sum(std::span<const double> a, double x, double y) {
  const double y2 = y * y;
  double s = 0.0;
  for (double aj : a) {
    const double d = x - aj;
    s += 1.0 / (d * d + y2);
  }
  return s;
}

double inv_cube_sum(std::span<const double> a, double x) {
  double s = 0.0;
  for (double aj : a) {
    const double d = x - aj;
    s += 1.0 / (d * d * d);
  }
  return s;
}

namespace {

// Neumaier compensated accumulation.
struct Compensated {
  double sum = 0.0;
  double err = 0.0;
  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      err += (sum - t) + v;
    } else {
      err += (v - t) + sum;
    }
    sum = t;
  }
  double value() const { return sum + err; }
};

}  // namespace

cplx log_sum(std::span<const double> a, cplx z) {
  double re = 0.0, im = 0.0;
  for (double aj : a) {
    const cplx l = std::log(z - aj);
    re += l.real();
    im += l.imag();
  }
  im = std::remainder(im, 2.0 * std::numbers::pi);
  return {re, im};
}

cplx cauchy_sum(std::span<const double> a, cplx z) {
  Compensated re, im;
  const double zr = z.real(), zi = z.imag();
  for (double aj : a) {
    const double dr = zr - aj;
    const double inv = 1.0 / (dr * dr + zi * zi);
    re.add(dr * inv);
    im.add(-zi * inv);
  }
  return {re.value(), im.value()};
}

cplx log_prod(std::span<const double> a, cplx z) {
  double mr = 1.0, mi = 0.0;
  double exponent = 0.0;
  std::size_t since = 0;
  for (double aj : a) {
    const double fr = z.real() - aj, fi = z.imag();
    const double nr = mr * fr - mi * fi;
    const double ni = mr * fi + mi * fr;
    mr = nr;
    mi = ni;
    if (++since == 16) {
      since = 0;
      const double big = std::max(std::abs(mr), std::abs(mi));
      if (big == 0.0) return {-INFINITY, 0.0};
      if (!std::isfinite(big)) return log_sum(a, z);
      int e = 0;
      std::frexp(big, &e);
      mr = std::ldexp(mr, -e);
      mi = std::ldexp(mi, -e);
      exponent += e;
    }
  }
  const cplx m{mr, mi};
  if (m == cplx{}) return {-INFINITY, 0.0};
  if (!std::isfinite(mr) || !std::isfinite(mi)) return log_sum(a, z);
  return std::log(m) + cplx{exponent * std::numbers::ln2, 0.0};
}

void cauchy_matvec(std::span<const double> w_re, std::span<const double> w_im,
                   std::span<const double> c_re, std::span<const double> c_im,
                   std::span<const cplx> z, std::span<cplx> out) {
  const std::size_t m = w_re.size();
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double zr = z[i].real(), zi = z[i].imag();
    double sr = 0.0, si = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double dr = zr - w_re[j], di = zi - w_im[j];
      const double inv = 1.0 / (dr * dr + di * di);
      sr += (c_re[j] * dr + c_im[j] * di) * inv;
      si += (c_im[j] * dr - c_re[j] * di) * inv;
    }
    out[i] = {sr, si};
  }
}

}  // namespace dbm::simd::scalar
