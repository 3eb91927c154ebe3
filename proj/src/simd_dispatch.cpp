#include <atomic>

#include "dbm/simd.hpp"

namespace dbm::simd {

namespace {

bool detect_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const bool kHasAvx2 = detect_avx2();
std::atomic<bool> g_force_scalar{false};

bool use_avx2() { return kHasAvx2 && !g_force_scalar.load(std::memory_order_relaxed); }

}  // namespace

bool avx2_available() { return kHasAvx2; }
void force_scalar(bool on) { g_force_scalar.store(on); }

double inv_sq_dist_sum(std::span<const double> a, double x, double y) {
  return use_avx2() ? avx2::inv_sq_dist_sum(a, x, y) : scalar::inv_sq_dist_sum(a, x, y);
}

double inv_cube_sum(std::span<const double> a, double x) {
  return use_avx2() ? avx2::inv_cube_sum(a, x) : scalar::inv_cube_sum(a, x);
}

cplx cauchy_sum(std::span<const double> a, cplx z) {
  return use_avx2() ? avx2::cauchy_sum(a, z) : scalar::cauchy_sum(a, z);
}

cplx log_prod(std::span<const double> a, cplx z) {
  return use_avx2() ? avx2::log_prod(a, z) : scalar::log_prod(a, z);
}

void cauchy_matvec(std::span<const double> w_re, std::span<const double> w_im,
                   std::span<const double> c_re, std::span<const double> c_im,
                   std::span<const cplx> z, std::span<cplx> out) {
  if (use_avx2()) {
    avx2::cauchy_matvec(w_re, w_im, c_re, c_im, z, out);
  } else {
    scalar::cauchy_matvec(w_re, w_im, c_re, c_im, z, out);
  }
}

}  // namespace dbm::simd
