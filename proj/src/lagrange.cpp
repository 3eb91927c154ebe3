#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <type_traits>

#ifdef DBM_HAVE_QUADMATH
#include <quadmath.h>
#endif

#include "dbm/errors.hpp"
#include "dbm/io.hpp"
#include "dbm/kernel.hpp"
#include "dbm/quadrature.hpp"
#include "dbm/simd.hpp"

namespace dbm {

namespace {

#ifdef DBM_HAVE_QUADMATH
using wide = __float128;
inline wide xexp(wide v) { return expq(v); }
inline wide xlog(wide v) { return logq(v); }
inline wide xsqrt(wide v) { return sqrtq(v); }
inline wide xabs(wide v) { return fabsq(v); }
constexpr double kWideEps = 1.9259299443872359e-34;
const wide kWidePi = M_PIq;
#else
using wide = long double;
inline wide xexp(wide v) { return std::exp(v); }
inline wide xlog(wide v) { return std::log(v); }
inline wide xsqrt(wide v) { return std::sqrt(v); }
inline wide xabs(wide v) { return std::fabs(v); }
constexpr double kWideEps = std::numeric_limits<long double>::epsilon();
const wide kWidePi = std::numbers::pi_v<long double>;
#endif
inline double xexp(double v) { return std::exp(v); }
inline double xlog(double v) { return std::log(v); }
inline double xsqrt(double v) { return std::sqrt(v); }
inline double xabs(double v) { return std::fabs(v); }

template <class T>
constexpr double eps_of() {
  if constexpr (std::is_same_v<T, double>) return std::numeric_limits<double>::epsilon();
  else return kWideEps;
}

template <class T>
T pi_of() {
  if constexpr (std::is_same_v<T, double>) return std::numbers::pi;
  else return kWidePi;
}

constexpr std::size_t kMaxM = 512;
// rounding error allowed relative to max(|K~|, 1) before switching precision
constexpr double kRoundTol = 1e-10;

template <class T>
struct HalfRule {
  std::vector<T> nodes;  // tau_m > 0
  std::vector<T> weights;
};

// Positive half of the M-point rule for exp(-tau^2/2); M even.
const HalfRule<double>& half_rule_double(std::size_t M) {
  static std::mutex mu;
  static std::map<std::size_t, HalfRule<double>> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(M);
  if (it != cache.end()) return it->second;
  const auto& r = quad::gauss_hermite(M);
  HalfRule<double> h;
  for (std::size_t i = M / 2; i < M; ++i) {
    h.nodes.push_back(r.nodes[i]);
    h.weights.push_back(r.weights[i]);
  }
  return cache.emplace(M, std::move(h)).first->second;
}

// Same rule with nodes polished by Newton in extended precision.
const HalfRule<wide>& half_rule_wide(std::size_t M) {
  static std::mutex mu;
  static std::map<std::size_t, HalfRule<wide>> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(M);
  if (it != cache.end()) return it->second;
  const auto& r = quad::gauss_hermite(M);
  const wide two_pi = wide(2) * kWidePi;
  const wide psi0 = xexp(-xlog(two_pi) / 4);
  // orthonormal recurrence psi_{k+1} = (tau psi_k - sqrt(k) psi_{k-1}) / sqrt(k+1)
  auto eval = [&](wide tau, wide& prev) {
    wide p1 = psi0, p0 = 0;
    for (std::size_t k = 0; k + 1 <= M; ++k) {
      const wide p2 = (tau * p1 - xsqrt(wide(k)) * p0) / xsqrt(wide(k + 1));
      p0 = p1;
      p1 = p2;
    }
    prev = p0;
    return p1;
  };
  HalfRule<wide> h;
  for (std::size_t i = M / 2; i < M; ++i) {
    wide tau = r.nodes[i];
    wide prev = 0;
    for (int it = 0; it < 4; ++it) {
      const wide val = eval(tau, prev);
      tau -= val / (xsqrt(wide(M)) * prev);
    }
    eval(tau, prev);
    h.nodes.push_back(tau);
    h.weights.push_back(wide(1) / (wide(M) * prev * prev));
  }
  return cache.emplace(M, std::move(h)).first->second;
}

template <class T>
const HalfRule<T>& half_rule(std::size_t M) {
  if constexpr (std::is_same_v<T, double>) return half_rule_double(M);
  else return half_rule_wide(M);
}

}  // namespace

struct KernelEvaluator::Impl {
  InitialConfiguration config;
  std::vector<double> a;
  double t = 0.0;
  double x0 = 0.0;
  KernelOptions options;
  double eps_split = 0.0;
  std::vector<double> logw;  // log |prod_{j != k} (a_k - a_j)|
  std::vector<wide> logw_wide;
  std::vector<int> sign_w;
};

namespace {

using Impl = KernelEvaluator::Impl;

// p^_k(x) = sign_k exp(log_abs_k); exp(log_bound_k) bounds the sum of |contributions|.
template <class T>
struct PRow {
  std::vector<T> log_abs;
  std::vector<T> log_bound;
  std::vector<int> sign;
};

template <class T>
PRow<T> p_row(const Impl& im, double x, std::size_t M) {
  const std::size_t n = im.a.size();
  const HalfRule<T>& rule = half_rule<T>(M);
  const std::size_t h = rule.nodes.size();
  const T tt = im.t, nn = T(n);
  const T sigma = xsqrt(tt / nn);
  const T pref = xlog(xsqrt(nn / tt) / (T(2) * pi_of<T>()));

  std::vector<T> s(h), ell(h), c_re(h), c_im(h);
  for (std::size_t m = 0; m < h; ++m) s[m] = sigma * rule.nodes[m];

  if constexpr (std::is_same_v<T, double>) {
    std::vector<double> arg(h);
    for (std::size_t m = 0; m < h; ++m) {
      const auto lp = simd::log_prod(im.a, {x, s[m]});
      ell[m] = std::log(rule.weights[m]) + lp.real();
      arg[m] = lp.imag();
    }
    const double lmax = *std::max_element(ell.begin(), ell.end());
    for (std::size_t m = 0; m < h; ++m) {
      const double r = std::exp(ell[m] - lmax);
      c_re[m] = r * std::cos(arg[m]);
      c_im[m] = r * std::sin(arg[m]);
    }
    std::vector<double> w_re(h, x);
    std::vector<cplx> targets(n), out(n);
    for (std::size_t k = 0; k < n; ++k) targets[k] = {im.a[k], 0.0};
    // out_k = sum_m c_m / (a_k - z_m)
    simd::cauchy_matvec(w_re, s, c_re, c_im, targets, out);
    PRow<double> row;
    row.log_abs.resize(n);
    row.log_bound.resize(n);
    row.sign.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double d = -2.0 * out[k].real();
      const double dx = x - im.a[k];
      double bound = 0.0;
      for (std::size_t m = 0; m < h; ++m)
        bound += std::hypot(c_re[m], c_im[m]) / std::hypot(dx, s[m]);
      bound *= 2.0;
      const double base = pref + lmax - im.logw[k];
      row.log_abs[k] = base + std::log(std::abs(d));
      row.log_bound[k] = base + std::log(bound);
      row.sign[k] = (d > 0.0 ? 1 : (d < 0.0 ? -1 : 0)) * im.sign_w[k];
    }
    return row;
  } else {
    // products fit the extended exponent range, no renormalization needed
    std::vector<T> p_re(h), p_im(h);
    for (std::size_t m = 0; m < h; ++m) {
      T re = 1, imv = 0;
      for (double aj : im.a) {
        const T dr = T(x) - T(aj);
        const T nr = re * dr - imv * s[m];
        imv = re * s[m] + imv * dr;
        re = nr;
      }
      p_re[m] = re * rule.weights[m];
      p_im[m] = imv * rule.weights[m];
    }
    PRow<T> row;
    row.log_abs.resize(n);
    row.log_bound.resize(n);
    row.sign.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const T dx = T(x) - T(im.a[k]);
      T d = 0, bound = 0;
      for (std::size_t m = 0; m < h; ++m) {
        const T den = dx * dx + s[m] * s[m];
        d += (p_re[m] * dx + p_im[m] * s[m]) / den;
        bound += xsqrt((p_re[m] * p_re[m] + p_im[m] * p_im[m]) / den);
      }
      d *= 2;
      bound *= 2;
      const T base = pref - im.logw_wide[k];
      row.log_abs[k] = base + xlog(xabs(d));
      row.log_bound[k] = base + xlog(bound);
      row.sign[k] = (d > 0 ? 1 : (d < 0 ? -1 : 0)) * im.sign_w[k];
    }
    return row;
  }
}

struct RowValue {
  ScaledValue value;
  double abs_scaled = 0.0;  // sum of |terms| in units of exp(log_scale)
};

template <class T>
std::vector<RowValue> combine(const Impl& im, const PRow<T>& row, std::span<const double> ys) {
  const std::size_t n = im.a.size();
  const T c = T(n) / (T(2) * T(im.t));
  std::vector<RowValue> out(ys.size());
  std::vector<T> e(n);
  for (std::size_t i = 0; i < ys.size(); ++i) {
    T smax = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
      const T d = T(ys[i]) - T(im.a[k]);
      e[k] = -c * d * d;
      smax = std::max(smax, row.log_bound[k] + e[k]);
    }
    const double sd = double(smax);
    T sum = 0, abs_sum = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (row.sign[k] != 0) sum += T(row.sign[k]) * xexp(row.log_abs[k] + e[k] - T(sd));
      abs_sum += xexp(row.log_bound[k] + e[k] - T(sd));
    }
    out[i].value = {double(sum), sd};
    out[i].abs_scaled = double(abs_sum);
  }
  return out;
}

// Rounding estimate, relative: kernel values deep in a gap are tiny but still wanted
// to full relative accuracy, so there is no absolute floor.
bool rounding_ok(const RowValue& r, double eps, std::size_t n) {
  return (16.0 + double(n)) * eps * r.abs_scaled <= kRoundTol * std::abs(r.value.mantissa);
}

template <class T>
bool evaluate_level(const Impl& im, double x, std::span<const double> ys, std::size_t M, std::vector<RowValue>& out) {
  out = combine(im, p_row<T>(im, x, M), ys);
  for (const auto& r : out)
    if (!rounding_ok(r, eps_of<T>(), im.a.size())) return false;
  return true;
}

double condition(const RowValue& r) {
  return std::abs(r.value.mantissa) > 0.0 ? r.abs_scaled / std::abs(r.value.mantissa)
                                          : std::numeric_limits<double>::infinity();
}

std::size_t even_start(std::size_t M) {
  M = std::max<std::size_t>(M, 2);
  return M + (M % 2);
}

template <class T>
bool run_doubling(const Impl& im, double x, std::span<const double> ys, std::vector<RowValue>& result,
                  LagrangeDiagnostics* diag) {
  std::size_t M = even_start(im.options.quadrature_M);
  std::vector<RowValue> prev, cur;
  if (!evaluate_level<T>(im, x, ys, M, prev)) {
    result = std::move(prev);
    return false;
  }
  for (;;) {
    const std::size_t M2 = 2 * M;
    if (M2 > kMaxM) {
      std::ostringstream os;
      os << "Lagrange kernel quadrature did not converge at x = " << fmt17(x) << " up to M = " << M;
      throw NumericalError(os.str());
    }
    if (!evaluate_level<T>(im, x, ys, M2, cur)) {
      result = std::move(cur);
      return false;
    }
    bool ok = true;
    std::size_t worst = 0;
    double worst_gap = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
      const ScaledValue& a = cur[i].value;
      const ScaledValue& b = prev[i].value;
      const double b_in_a = b.mantissa == 0.0 ? 0.0 : b.mantissa * std::exp(b.log_scale - a.log_scale);
      const double gap = std::abs(a.mantissa - b_in_a);
      const double floor = std::abs(a.mantissa);
      const double allowed = im.options.tolerance * floor + (16.0 + double(im.a.size())) * eps_of<T>() * cur[i].abs_scaled;
      if (!(gap <= allowed)) {
        ok = false;
        if (gap / floor > worst_gap) {
          worst_gap = gap / floor;
          worst = i;
        }
      }
    }
    if (ok) break;
    if (2 * M2 > kMaxM) {
      std::ostringstream os;
      os << "Lagrange kernel quadrature did not converge at (x, y) = (" << fmt17(x) << ", " << fmt17(ys[worst])
         << "): M = " << M << " gives " << fmt17(prev[worst].value.value()) << ", M = " << M2 << " gives "
         << fmt17(cur[worst].value.value());
      throw NumericalError(os.str());
    }
    prev.swap(cur);
    M = M2;
  }
  result = std::move(cur);
  if (diag) {
    diag->M = 2 * M;
    diag->extended_precision = !std::is_same_v<T, double>;
    diag->condition = 0.0;
    for (const auto& r : result) diag->condition = std::max(diag->condition, condition(r));
  }
  return true;
}

std::vector<RowValue> evaluate_row(const Impl& im, double x, std::span<const double> ys, LagrangeDiagnostics* diag) {
  if (!std::isfinite(x)) throw ValidationError("kernel argument x must be finite");
  for (double y : ys)
    if (!std::isfinite(y)) throw ValidationError("kernel argument y must be finite");
  std::vector<RowValue> out;
  if (run_doubling<double>(im, x, ys, out, diag)) return out;
  if (run_doubling<wide>(im, x, ys, out, diag)) return out;
  double worst = 0.0;
  for (const auto& r : out) worst = std::max(worst, condition(r));
  std::ostringstream os;
  os << "Lagrange kernel at x = " << fmt17(x) << " cancels beyond extended precision (condition "
     << fmt_human(worst) << "); use the double-contour evaluator";
  throw PrecisionExhausted(os.str());
}

}  // namespace

KernelEvaluator::KernelEvaluator(InitialConfiguration config, double t, double x0, KernelOptions options) {
  if (!(t > 0.0) || !std::isfinite(t)) throw ValidationError("kernel evaluator needs t > 0");
  if (!std::isfinite(x0)) throw ValidationError("gauge base x0 must be finite");
  if (options.quadrature_M < 2 || options.quadrature_M > kMaxM / 2)
    throw ValidationError("quadrature_M must be in [2, 256]");
  if (!(options.tolerance > 0.0)) throw ValidationError("quadrature tolerance must be positive");
  auto im = std::make_shared<Impl>();
  im->t = t;
  im->x0 = x0;
  im->options = options;
  const auto p = config.measure.points();
  if (p.empty()) throw ValidationError("kernel evaluator needs at least one point");
  im->a.assign(p.begin(), p.end());
  im->config = std::move(config);

  // split exact duplicates symmetrically: a group of r copies moves to v + (i - (r-1)/2) eps
  auto& a = im->a;
  const double spread = a.back() - a.front();
  const double eps = 1e-9 * (spread > 0.0 ? spread : std::max(1.0, std::abs(a.front())));
  for (std::size_t i = 0; i < a.size();) {
    std::size_t j = i + 1;
    while (j < a.size() && a[j] == a[i]) ++j;
    if (j - i > 1) {
      if (!options.split_duplicates) {
        std::ostringstream os;
        os << "duplicate initial point " << fmt17(a[i])
           << "; the Lagrange kernel needs distinct points (enable epsilon-splitting)";
        throw ValidationError(os.str());
      }
      const double r = double(j - i);
      const double v = a[i];
      for (std::size_t k = i; k < j; ++k) a[k] = v + (double(k - i) - 0.5 * (r - 1.0)) * eps;
      im->eps_split = eps;
    }
    i = j;
  }
  if (im->eps_split > 0.0) {
    std::sort(a.begin(), a.end());
    for (std::size_t i = 1; i < a.size(); ++i)
      if (!(a[i] > a[i - 1])) throw ValidationError("epsilon-splitting left coincident points; spread too small");
  }

  const std::size_t n = a.size();
  im->logw.assign(n, 0.0);
  im->logw_wide.assign(n, 0);
  im->sign_w.assign(n, 1);
  for (std::size_t k = 0; k < n; ++k) {
    double s = 0.0;
    wide sw = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == k) continue;
      const double d = std::abs(a[k] - a[j]);
      s += std::log(d);
      sw += xlog(xabs(wide(a[k]) - wide(a[j])));
    }
    im->logw[k] = s;
    im->logw_wide[k] = sw;
    im->sign_w[k] = ((n - 1 - k) % 2 == 0) ? 1 : -1;
  }
  impl_ = std::move(im);
}

const InitialConfiguration& KernelEvaluator::config() const { return impl_->config; }
std::span<const double> KernelEvaluator::points() const { return impl_->a; }
std::size_t KernelEvaluator::n() const { return impl_->a.size(); }
double KernelEvaluator::t() const { return impl_->t; }
double KernelEvaluator::x0() const { return impl_->x0; }
const KernelOptions& KernelEvaluator::options() const { return impl_->options; }
double KernelEvaluator::eps_split() const { return impl_->eps_split; }

KernelEvaluator KernelEvaluator::with_gauge(double x0) const {
  if (!std::isfinite(x0)) throw ValidationError("gauge base x0 must be finite");
  KernelEvaluator out = *this;
  auto im = std::make_shared<Impl>(*impl_);
  im->x0 = x0;
  out.impl_ = std::move(im);
  return out;
}

ScaledValue KernelEvaluator::ktilde(double x, double y, LagrangeDiagnostics* diag) const {
  const double ys[1] = {y};
  return evaluate_row(*impl_, x, ys, diag).front().value;
}

std::vector<ScaledValue> KernelEvaluator::ktilde_row(double x, std::span<const double> ys,
                                                     LagrangeDiagnostics* diag) const {
  if (ys.empty()) return {};
  auto rows = evaluate_row(*impl_, x, ys, diag);
  std::vector<ScaledValue> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.value);
  return out;
}

namespace {

template <class T>
bool p_hat_level(const Impl& im, double x, std::size_t M, std::vector<double>& out) {
  const auto row = p_row<T>(im, x, M);
  out.resize(row.sign.size());
  bool ok = true;
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = row.sign[k] == 0 ? 0.0 : row.sign[k] * double(xexp(row.log_abs[k]));
    const double bound = double(xexp(row.log_bound[k]));
    if ((16.0 + double(out.size())) * eps_of<T>() * bound > kRoundTol * std::max(std::abs(out[k]), 1.0)) ok = false;
  }
  return ok;
}

template <class T>
bool p_hat_doubling(const Impl& im, double x, std::vector<double>& out, LagrangeDiagnostics* diag) {
  std::size_t M = even_start(im.options.quadrature_M);
  std::vector<double> prev, cur;
  if (!p_hat_level<T>(im, x, M, prev)) return false;
  for (;;) {
    if (2 * M > kMaxM) throw NumericalError("p_hat quadrature did not converge at x = " + fmt17(x));
    if (!p_hat_level<T>(im, x, 2 * M, cur)) return false;
    bool ok = true;
    for (std::size_t k = 0; k < cur.size(); ++k)
      ok &= std::abs(cur[k] - prev[k]) <= im.options.tolerance * std::max(std::abs(cur[k]), 1.0);
    M *= 2;
    if (ok) break;
    prev.swap(cur);
  }
  out = std::move(cur);
  if (diag) {
    diag->M = M;
    diag->extended_precision = !std::is_same_v<T, double>;
  }
  return true;
}

}  // namespace

std::vector<double> KernelEvaluator::p_hat(double x, LagrangeDiagnostics* diag) const {
  if (!std::isfinite(x)) throw ValidationError("p_hat argument must be finite");
  std::vector<double> out;
  if (p_hat_doubling<double>(*impl_, x, out, diag)) return out;
  if (p_hat_doubling<wide>(*impl_, x, out, diag)) return out;
  throw PrecisionExhausted("p_hat at x = " + fmt17(x) + " cancels beyond extended precision");
}

double kernel_lagrange(const KernelEvaluator& ev, double x, double y) { return ev.ktilde(x, y).value(); }

double gauge_exponent(const KernelEvaluator& ev, double x, double y) {
  const double c = double(ev.n()) / ev.t();
  return 0.5 * c * (y * y - x * x) - c * ev.x0() * (y - x);
}

double gauge_to_paper(const KernelEvaluator& ev, double x, double y, double ktilde) {
  if (x == y) return ktilde;
  return ktilde * std::exp(gauge_exponent(ev, x, y));
}

double kernel_gauged(const KernelEvaluator& ev, double x, double y) {
  return ev.ktilde(x, y).value_times_exp(x == y ? 0.0 : gauge_exponent(ev, x, y));
}

double lagrange_p_hat(const KernelEvaluator& ev, std::size_t j, double x) {
  if (j < 1 || j > ev.n()) throw ValidationError("p_hat index must be in [1, n]");
  return ev.p_hat(x)[j - 1];
}

double biorthogonality_check(const KernelEvaluator& ev) {
  const auto a = ev.points();
  const std::size_t n = a.size();
  const auto& rule = quad::gauss_hermite(128);
  const double sigma = std::sqrt(ev.t() / double(n));
  double worst = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<double> acc(n, 0.0);
    for (std::size_t m = 0; m < rule.nodes.size(); ++m) {
      const auto p = ev.p_hat(a[k] + sigma * rule.nodes[m]);
      for (std::size_t j = 0; j < n; ++j) acc[j] += rule.weights[m] * p[j];
    }
    for (std::size_t j = 0; j < n; ++j) worst = std::max(worst, std::abs(sigma * acc[j] - (j == k ? 1.0 : 0.0)));
  }
  return worst;
}

}  // namespace dbm
