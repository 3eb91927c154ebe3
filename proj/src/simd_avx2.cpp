#include <cmath>
#include <numbers>

#include "dbm/simd.hpp"

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#define DBM_AVX2 __attribute__((target("avx2,fma")))
#define DBM_HAS_X86 1
#endif

namespace dbm::simd::avx2 {

#ifdef DBM_HAS_X86

namespace {

DBM_AVX2 inline double hsum(__m256d v) {
  alignas(32) double t[4];
  _mm256_store_pd(t, v);
  return (t[0] + t[1]) + (t[2] + t[3]);
}

DBM_AVX2 inline __m256d vabs(__m256d v) {
  return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v);
}

}  // namespace

DBM_AVX2 double inv_sq_dist_sum(std::span<const double> a, double x, double y) {
  const std::size_t n = a.size();
  const __m256d vx = _mm256_set1_pd(x);
  const __m256d vy2 = _mm256_set1_pd(y * y);
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d acc = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d d = _mm256_sub_pd(vx, _mm256_loadu_pd(a.data() + j));
    acc = _mm256_add_pd(acc, _mm256_div_pd(one, _mm256_fmadd_pd(d, d, vy2)));
  }
  double s = hsum(acc);
  const double y2 = y * y;
  for (; j < n; ++j) {
    const double d = x - a[j];
    s += 1.0 / (d * d + y2);
  }
  return s;
}

DBM_AVX2 double inv_cube_sum(std::span<const double> a, double x) {
  const std::size_t n = a.size();
  const __m256d vx = _mm256_set1_pd(x);
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d acc = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d d = _mm256_sub_pd(vx, _mm256_loadu_pd(a.data() + j));
    acc = _mm256_add_pd(acc, _mm256_div_pd(one, _mm256_mul_pd(_mm256_mul_pd(d, d), d)));
  }
  double s = hsum(acc);
  for (; j < n; ++j) {
    const double d = x - a[j];
    s += 1.0 / (d * d * d);
  }
  return s;
}

namespace {

// Lane-wise Neumaier step.
DBM_AVX2 inline void neumaier(__m256d& sum, __m256d& err, __m256d v) {
  const __m256d t = _mm256_add_pd(sum, v);
  const __m256d big = _mm256_cmp_pd(vabs(sum), vabs(v), _CMP_GE_OQ);
  const __m256d e1 = _mm256_add_pd(_mm256_sub_pd(sum, t), v);
  const __m256d e2 = _mm256_add_pd(_mm256_sub_pd(v, t), sum);
  err = _mm256_add_pd(err, _mm256_blendv_pd(e2, e1, big));
  sum = t;
}

struct Comp {
  double sum = 0.0, err = 0.0;
  void add(double v) {
    const double t = sum + v;
    err += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
};

}  // namespace

DBM_AVX2 cplx cauchy_sum(std::span<const double> a, cplx z) {
  const std::size_t n = a.size();
  const __m256d zr = _mm256_set1_pd(z.real());
  const __m256d zi2 = _mm256_set1_pd(z.imag() * z.imag());
  const __m256d nzi = _mm256_set1_pd(-z.imag());
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d rs = _mm256_setzero_pd(), re = _mm256_setzero_pd();
  __m256d is = _mm256_setzero_pd(), ie = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d dr = _mm256_sub_pd(zr, _mm256_loadu_pd(a.data() + j));
    const __m256d inv = _mm256_div_pd(one, _mm256_fmadd_pd(dr, dr, zi2));
    neumaier(rs, re, _mm256_mul_pd(dr, inv));
    neumaier(is, ie, _mm256_mul_pd(nzi, inv));
  }
  alignas(32) double b[4][4];
  _mm256_store_pd(b[0], rs);
  _mm256_store_pd(b[1], re);
  _mm256_store_pd(b[2], is);
  _mm256_store_pd(b[3], ie);
  Comp r, im;
  for (int l = 0; l < 4; ++l) {
    r.add(b[0][l]);
    im.add(b[2][l]);
  }
  r.err += (b[1][0] + b[1][1]) + (b[1][2] + b[1][3]);
  im.err += (b[3][0] + b[3][1]) + (b[3][2] + b[3][3]);
  for (; j < n; ++j) {
    const double dr = z.real() - a[j];
    const double inv = 1.0 / (dr * dr + z.imag() * z.imag());
    r.add(dr * inv);
    im.add(-z.imag() * inv);
  }
  return {r.sum + r.err, im.sum + im.err};
}

DBM_AVX2 cplx log_prod(std::span<const double> a, cplx z) {
  const std::size_t n = a.size();
  if (n < 8) return scalar::log_prod(a, z);
  const __m256d zr = _mm256_set1_pd(z.real());
  const __m256d zi = _mm256_set1_pd(z.imag());
  const __m256i expmask = _mm256_set1_epi64x(0x7ff);
  const __m256i bias = _mm256_set1_epi64x(1022);
  const __m256i unbias = _mm256_set1_epi64x(1023);
  __m256d mr = _mm256_set1_pd(1.0), mi = _mm256_setzero_pd();
  __m256d ex = _mm256_setzero_pd();
  std::size_t j = 0;
  int since = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d fr = _mm256_sub_pd(zr, _mm256_loadu_pd(a.data() + j));
    const __m256d nr = _mm256_fmsub_pd(mr, fr, _mm256_mul_pd(mi, zi));
    const __m256d ni = _mm256_fmadd_pd(mr, zi, _mm256_mul_pd(mi, fr));
    mr = nr;
    mi = ni;
    if (++since == 16) {
      since = 0;
      const __m256d big = _mm256_max_pd(vabs(mr), vabs(mi));
      const __m256i field = _mm256_and_si256(_mm256_srli_epi64(_mm256_castpd_si256(big), 52), expmask);
      // exponent e with big = f * 2^e, f in [0.5, 1); clamp zero/subnormal/inf lanes
      __m256i e = _mm256_sub_epi64(field, bias);
      const __m256i lo = _mm256_set1_epi64x(-1000), hi = _mm256_set1_epi64x(1000);
      e = _mm256_blendv_epi8(e, lo, _mm256_cmpgt_epi64(lo, e));
      e = _mm256_blendv_epi8(e, hi, _mm256_cmpgt_epi64(e, hi));
      const __m256d scale = _mm256_castsi256_pd(_mm256_slli_epi64(_mm256_sub_epi64(unbias, e), 52));
      mr = _mm256_mul_pd(mr, scale);
      mi = _mm256_mul_pd(mi, scale);
      alignas(32) long long ev[4];
      _mm256_store_si256(reinterpret_cast<__m256i*>(ev), e);
      ex = _mm256_add_pd(ex, _mm256_setr_pd(double(ev[0]), double(ev[1]), double(ev[2]), double(ev[3])));
    }
  }
  alignas(32) double r[4], im[4], e[4];
  _mm256_store_pd(r, mr);
  _mm256_store_pd(im, mi);
  _mm256_store_pd(e, ex);
  double pr = 1.0, pi = 0.0, pe = 0.0;
  auto renorm = [&] {
    const double big = std::max(std::abs(pr), std::abs(pi));
    if (big == 0.0 || !std::isfinite(big)) return;
    int k = 0;
    std::frexp(big, &k);
    pr = std::ldexp(pr, -k);
    pi = std::ldexp(pi, -k);
    pe += k;
  };
  for (int l = 0; l < 4; ++l) {
    const double nr = pr * r[l] - pi * im[l];
    const double ni = pr * im[l] + pi * r[l];
    pr = nr;
    pi = ni;
    pe += e[l];
    renorm();
  }
  for (; j < n; ++j) {
    const double fr = z.real() - a[j];
    const double nr = pr * fr - pi * z.imag();
    const double ni = pr * z.imag() + pi * fr;
    pr = nr;
    pi = ni;
  }
  if (pr == 0.0 && pi == 0.0) return {-INFINITY, 0.0};
  if (!std::isfinite(pr) || !std::isfinite(pi)) return scalar::log_sum(a, z);
  return std::log(cplx{pr, pi}) + cplx{pe * std::numbers::ln2, 0.0};
}

DBM_AVX2 void cauchy_matvec(std::span<const double> w_re, std::span<const double> w_im,
                            std::span<const double> c_re, std::span<const double> c_im,
                            std::span<const cplx> z, std::span<cplx> out) {
  const std::size_t m = w_re.size();
  const __m256d one = _mm256_set1_pd(1.0);
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double zr = z[i].real(), zi = z[i].imag();
    const __m256d vzr = _mm256_set1_pd(zr), vzi = _mm256_set1_pd(zi);
    __m256d sr = _mm256_setzero_pd(), si = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j + 4 <= m; j += 4) {
      const __m256d dr = _mm256_sub_pd(vzr, _mm256_loadu_pd(w_re.data() + j));
      const __m256d di = _mm256_sub_pd(vzi, _mm256_loadu_pd(w_im.data() + j));
      const __m256d inv = _mm256_div_pd(one, _mm256_fmadd_pd(dr, dr, _mm256_mul_pd(di, di)));
      const __m256d cr = _mm256_loadu_pd(c_re.data() + j);
      const __m256d ci = _mm256_loadu_pd(c_im.data() + j);
      sr = _mm256_fmadd_pd(_mm256_fmadd_pd(cr, dr, _mm256_mul_pd(ci, di)), inv, sr);
      si = _mm256_fmadd_pd(_mm256_fmsub_pd(ci, dr, _mm256_mul_pd(cr, di)), inv, si);
    }
    double r = hsum(sr), s = hsum(si);
    for (; j < m; ++j) {
      const double dr = zr - w_re[j], di = zi - w_im[j];
      const double inv = 1.0 / (dr * dr + di * di);
      r += (c_re[j] * dr + c_im[j] * di) * inv;
      s += (c_im[j] * dr - c_re[j] * di) * inv;
    }
    out[i] = {r, s};
  }
}

#else

double inv_sq_dist_sum(std::span<const double> a, double x, double y) { return scalar::inv_sq_dist_sum(a, x, y); }
double inv_cube_sum(std::span<const double> a, double x) { return scalar::inv_cube_sum(a, x); }
cplx cauchy_sum(std::span<const double> a, cplx z) { return scalar::cauchy_sum(a, z); }
cplx log_prod(std::span<const double> a, cplx z) { return scalar::log_prod(a, z); }
void cauchy_matvec(std::span<const double> w_re, std::span<const double> w_im,
                   std::span<const double> c_re, std::span<const double> c_im,
                   std::span<const cplx> z, std::span<cplx> out) {
  scalar::cauchy_matvec(w_re, w_im, c_re, c_im, z, out);
}

#endif

}  // namespace dbm::simd::avx2
