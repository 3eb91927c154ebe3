#include "dbm/freeconv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/tools/toms748_solve.hpp>

#include "dbm/errors.hpp"
#include "dbm/io.hpp"
#include "dbm/quadrature.hpp"
#include "dbm/simd.hpp"

namespace dbm {

namespace {

constexpr double kRelTol = 1e-13;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Breakpoints for the offset d = s - x on [lo, hi] - x: measure kinks, the
// peak d = 0 and a geometric grading of width y around it. Working in offsets
// keeps x - s exact near the peak.
std::vector<double> peaked_offsets(const MeasureSpec& mu, const Interval& iv, double x, double y) {
  const double lo = iv.lo - x, hi = iv.hi - x;
  std::vector<double> b{lo, hi};
  for (double p : mu.breakpoints())
    if (p - x > lo && p - x < hi) b.push_back(p - x);
  if (0.0 > lo && 0.0 < hi) b.push_back(0.0);
  if (y > 0.0) {
    for (double w = y; w < 2.0 * iv.length(); w *= 4.0) {
      if (-w > lo && -w < hi) b.push_back(-w);
      if (w > lo && w < hi) b.push_back(w);
    }
  }
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return b;
}

// int density(s) f(s - x) ds over the support.
template <class F>
auto integrate_measure(const MeasureSpec& mu, double x, double y, F&& f) {
  using T = decltype(f(0.0));
  T total{};
  for (const auto& iv : mu.support()) {
    auto pts = peaked_offsets(mu, iv, x, y);
    total += quad::tanh_sinh_panels([&](double d) { return mu.density(std::clamp(x + d, iv.lo, iv.hi)) * f(d); }, pts, kRelTol, 1e-300).value;
  }
  return total;
}

double support_distance(const MeasureSpec& mu, double x) {
  double d = kInf;
  for (const auto& iv : mu.support()) {
    if (iv.contains(x)) return 0.0;
    d = std::min(d, x < iv.lo ? iv.lo - x : x - iv.hi);
  }
  return d;
}

double safe_density(const MeasureSpec& mu, double x) {
  return support_distance(mu, x) == 0.0 ? mu.density(x) : 0.0;
}

// int dmu(s)/(x - s)^2 for x on the closed support. Returns +inf when divergent.
double on_support_square_moment(const MeasureSpec& mu, double x) {
  if (mu.kind() == MeasureKind::power && x == mu.center()) {
    const double k = mu.exponent();
    if (k <= 1.0) return kInf;
    const Interval h = mu.hull();
    return mu.power_constant() * (std::pow(x - h.lo, k - 1.0) + std::pow(h.hi - x, k - 1.0)) / (k - 1.0);
  }
  const double len = mu.hull().length();
  const double eta = 1e-9 * len;
  const double near = std::max({safe_density(mu, x), safe_density(mu, x - eta), safe_density(mu, x + eta)});
  if (near > 1e-12) return kInf;
  // dyadic annuli towards x
  auto f = [&](double s) { return 1.0 / ((x - s) * (x - s)); };
  double partial = 0.0;
  double r_out = 2.0 * len;
  for (int k = 1; k <= 80; ++k) {
    const double r_in = len * std::ldexp(1.0, -k);
    double add = 0.0;
    for (const auto& iv : mu.support()) {
      for (auto [a, b] : {std::pair{x - r_out, x - r_in}, std::pair{x + r_in, x + r_out}}) {
        const double lo = std::max(a, iv.lo), hi = std::min(b, iv.hi);
        if (hi > lo) {
          std::vector<double> pts{lo, hi};
          for (double p : mu.breakpoints())
            if (p > lo && p < hi) pts.push_back(p);
          std::sort(pts.begin(), pts.end());
          add += quad::tanh_sinh_panels([&](double s) { return mu.density(s) * f(s); }, pts, kRelTol, 1e-300).value;
        }
      }
    }
    partial += add;
    if (partial > 1e12) return kInf;
    if (k > 8 && add <= 1e-15 * partial) return partial;
    r_out = r_in;
  }
  return partial;
}

}  // namespace

SpectralMeasure::SpectralMeasure(MeasureSpec mu, bool force_quadrature)
    : src_(std::move(mu)), force_quadrature_(force_quadrature) {}

SpectralMeasure::SpectralMeasure(EmpiricalMeasure mu_n) : src_(std::move(mu_n)) {}

Interval SpectralMeasure::hull() const { return empirical() ? discrete().hull() : continuous().hull(); }

bool SpectralMeasure::in_support(double x) const {
  if (empirical()) {
    const auto p = discrete().points();
    return std::binary_search(p.begin(), p.end(), x);
  }
  return support_distance(continuous(), x) == 0.0;
}

double SpectralMeasure::density(double x) const { return empirical() ? 0.0 : safe_density(continuous(), x); }

cplx SpectralMeasure::stieltjes(cplx z) const {
  if (empirical()) {
    const auto p = discrete().points();
    if (z.imag() == 0.0 && std::binary_search(p.begin(), p.end(), z.real()))
      throw ValidationError("Stieltjes transform evaluated at an atom");
    return simd::cauchy_sum(p, z) / double(p.size());
  }
  const MeasureSpec& mu = continuous();
  if (z.imag() < 0.0) throw ValidationError("Stieltjes transform needs Im z >= 0");
  if (z.imag() == 0.0 && support_distance(mu, z.real()) == 0.0)
    throw ValidationError("principal value required; use hilbert_transform");
  if (!force_quadrature_) {
    if (mu.kind() == MeasureKind::semicircle) {
      const double r = mu.hull().hi;
      return (z - std::sqrt(z - r) * std::sqrt(z + r)) / (2.0 * mu.variance());
    }
    if (mu.kind() == MeasureKind::uniform) {
      const Interval h = mu.hull();
      return (std::log(z - h.lo) - std::log(z - h.hi)) / h.length();
    }
  }
  return integrate_measure(mu, z.real(), z.imag(), [&](double d) { return 1.0 / cplx(-d, z.imag()); });
}

double SpectralMeasure::inverse_square_moment(double x, double y) const {
  if (empirical()) {
    const auto p = discrete().points();
    return simd::inv_sq_dist_sum(p, x, std::abs(y)) / double(p.size());
  }
  const MeasureSpec& mu = continuous();
  y = std::abs(y);
  if (y == 0.0) {
    if (support_distance(mu, x) == 0.0) return on_support_square_moment(mu, x);
    if (!force_quadrature_ && mu.kind() == MeasureKind::uniform) {
      const Interval h = mu.hull();
      return (x > h.hi ? 1.0 / (x - h.hi) - 1.0 / (x - h.lo) : 1.0 / (h.lo - x) - 1.0 / (h.hi - x)) / h.length();
    }
    if (!force_quadrature_ && mu.kind() == MeasureKind::semicircle) {
      const double s = mu.variance(), ax = std::abs(x);
      return (ax / std::sqrt(ax * ax - 4.0 * s) - 1.0) / (2.0 * s);
    }
    return integrate_measure(mu, x, 0.0, [&](double d) { return 1.0 / (d * d); });
  }
  if (!force_quadrature_ && mu.kind() == MeasureKind::semicircle) return -stieltjes({x, y}).imag() / y;
  if (!force_quadrature_ && mu.kind() == MeasureKind::uniform) {
    const Interval h = mu.hull();
    return (std::atan((h.hi - x) / y) - std::atan((h.lo - x) / y)) / (h.length() * y);
  }
  const double y2 = y * y;
  return integrate_measure(mu, x, y, [&](double d) { return 1.0 / (d * d + y2); });
}

cplx stieltjes(const SpectralMeasure& src, cplx z) { return src.stieltjes(z); }

double hilbert_transform(const MeasureSpec& mu, double x) {
  const double dist = support_distance(mu, x);
  if (dist > 0.0) {
    return integrate_measure(mu, x, 0.0, [&](double d) { return -1.0 / d; });
  }
  // excision half-width: stay clear of every other breakpoint
  const Interval h = mu.hull();
  double R = h.length();
  for (double b : mu.breakpoints())
    if (b != x) R = std::min(R, std::abs(b - x));
  R *= 0.5;
  auto g = [&](double hh) { return (safe_density(mu, x - hh) - safe_density(mu, x + hh)) / hh; };
  // a jump of the density at x makes the principal value diverge logarithmically
  const double probe = R * 1e-10;
  const double jump = std::abs(safe_density(mu, x - probe) - safe_density(mu, x + probe));
  double scale = 0.0;
  for (const auto& iv : mu.support())
    for (int k = 0; k <= 64; ++k) scale = std::max(scale, safe_density(mu, iv.lo + iv.length() * k / 64.0));
  if (jump > 1e-6 * scale) {
    std::ostringstream os;
    os << "non-integrable singularity in the principal value at x = " << fmt17(x);
    throw ValidationError(os.str());
  }
  // outer part
  double outer = 0.0;
  for (const auto& iv : mu.support()) {
    for (auto [a, b] : {std::pair{iv.lo, x - R}, std::pair{x + R, iv.hi}}) {
      const double lo = std::max(a, iv.lo), hi = std::min(b, iv.hi);
      if (hi <= lo) continue;
      std::vector<double> pts{lo, hi};
      for (double p : mu.breakpoints())
        if (p > lo && p < hi) pts.push_back(p);
      std::sort(pts.begin(), pts.end());
      outer += quad::tanh_sinh_panels([&](double s) { return mu.density(s) / (x - s); }, pts, kRelTol, 1e-300).value;
    }
  }
  // excised window folded onto (r, R); Richardson in r over odd powers
  constexpr int levels = 4;
  double table[levels][levels];
  for (int k = 0; k < levels; ++k) {
    const double r = R * std::ldexp(1.0, -(k + 4));
    table[k][0] = quad::tanh_sinh(g, r, R, kRelTol, 1e-300).value;
    for (int j = 1; j <= k; ++j) {
      const double f = std::ldexp(1.0, 2 * j - 1);
      table[k][j] = (f * table[k][j - 1] - table[k - 1][j - 1]) / (f - 1.0);
    }
  }
  return outer + table[levels - 1][levels - 1];
}

double t_critical(const MeasureSpec& mu, double x_star) {
  const SpectralMeasure src(mu);
  const double m = src.inverse_square_moment(x_star, 0.0);
  if (!std::isfinite(m) || m <= 0.0) return 0.0;
  return 1.0 / m;
}

FreeConvolutionState::FreeConvolutionState(SpectralMeasure mu, double t) : mu_(std::move(mu)), t_(t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw ValidationError("free convolution time must be positive");
}

double FreeConvolutionState::y_t(double x) const {
  const double target = 1.0 / t_;
  const double m0 = mu_.inverse_square_moment(x, 0.0);
  if (m0 <= target) return 0.0;
  double lo = 0.0, hi = std::sqrt(t_);
  const double tol = 1e-12 * hi;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double m = mu_.inverse_square_moment(x, mid);
    if (!std::isfinite(m)) {
      std::ostringstream os;
      os << "quadrature failure in y_t at x = " << fmt17(x) << ", y = " << fmt17(mid) << " (residual " << m << ")";
      throw NumericalError(os.str());
    }
    (m > target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

cplx FreeConvolutionState::boundary_stieltjes(double x, double y) const {
  if (y > 0.0) return mu_.stieltjes({x, y});
  if (mu_.empirical() || !mu_.in_support(x)) return mu_.stieltjes({x, 0.0});
  return {hilbert_transform(mu_.continuous(), x), -std::numbers::pi * mu_.density(x)};
}

cplx FreeConvolutionState::H_map(cplx z) const {
  const double yg = y_t(z.real());
  if (z.imag() < yg - 1e-9 * std::sqrt(t_)) {
    std::ostringstream os;
    os << "outside Omega: Im z = " << fmt17(z.imag()) << " below the graph value " << fmt17(yg);
    throw ValidationError(os.str());
  }
  const double y = std::max(z.imag(), 0.0);
  if (y == 0.0) return z + t_ * boundary_stieltjes(z.real(), 0.0);
  return z + t_ * mu_.stieltjes({z.real(), y});
}

double FreeConvolutionState::forward_map(double x) const {
  const double y = y_t(x);
  return x + t_ * boundary_stieltjes(x, y).real();
}

cplx FreeConvolutionState::inverse_map(double xi) const {
  const double st = std::sqrt(t_);
  const Interval h = mu_.hull();
  const double scale = std::max({1.0, std::abs(xi), std::abs(h.lo), std::abs(h.hi)});
  double lo = xi - st * (1.0 + 1e-9) - 1e-12 * scale;
  double hi = xi + st * (1.0 + 1e-9) + 1e-12 * scale;
  auto f = [&](double x) { return forward_map(x) - xi; };
  double flo = f(lo), fhi = f(hi);
  for (int widen = 0; widen < 8 && (flo > 0.0 || fhi < 0.0); ++widen) {
    const double w = (hi - lo);
    if (flo > 0.0) flo = f(lo -= w);
    if (fhi < 0.0) fhi = f(hi += w);
  }
  if (flo > 0.0 || fhi < 0.0) {
    std::ostringstream os;
    os << "inverse map: no bracket for xi = " << fmt17(xi) << " in [" << fmt17(lo) << ", " << fmt17(hi) << "]";
    throw NumericalError(os.str());
  }
  double x;
  if (flo == 0.0) {
    x = lo;
  } else if (fhi == 0.0) {
    x = hi;
  } else {
    const double tol = 2e-15 * scale;
    std::uintmax_t iters = 300;
    auto [a, b] = boost::math::tools::toms748_solve(
        f, lo, hi, flo, fhi, [&](double l, double r) { return std::abs(r - l) <= tol; }, iters);
    if (std::abs(b - a) > tol) {
      std::ostringstream os;
      os << "inverse map did not converge for xi = " << fmt17(xi) << "; bracket [" << fmt17(a) << ", " << fmt17(b)
         << "]";
      throw NumericalError(os.str());
    }
    x = 0.5 * (a + b);
  }
  return {x, y_t(x)};
}

double FreeConvolutionState::psi_t(double xi) const {
  const cplx z = inverse_map(xi);
  return std::max(0.0, -boundary_stieltjes(z.real(), z.imag()).imag() / std::numbers::pi);
}

std::pair<double, double> FreeConvolutionState::psi_t_parametric(double x) const {
  const double y = y_t(x);
  return {x + t_ * boundary_stieltjes(x, y).real(), y / (std::numbers::pi * t_)};
}

std::vector<Interval> FreeConvolutionState::graph_support() const {
  if (!mu_.empirical()) throw ValidationError("graph_support is implemented for empirical measures");
  const auto a = mu_.discrete().points();
  const double n = double(a.size());
  const double inv_t = 1.0 / t_;
  auto h = [&](double x) { return simd::inv_sq_dist_sum(a, x, 0.0) / n - inv_t; };
  auto hp = [&](double x) { return -2.0 * simd::inv_cube_sum(a, x) / n; };
  // root of h on (l, r) given the sign pattern h(l) * h(r) < 0
  // sign change of h on (l, r); rising means h(l) < 0 < h(r)
  auto root = [&](double l, double r, bool rising) {
    for (int it = 0; it < 200; ++it) {
      const double m = std::midpoint(l, r);
      if (m <= l || m >= r) break;
      ((h(m) < 0.0) == rising ? l : r) = m;
    }
    return std::midpoint(l, r);
  };
  std::vector<double> d(a.begin(), a.end());
  d.erase(std::unique(d.begin(), d.end()), d.end());
  const double st = std::sqrt(t_);
  std::vector<Interval> out;
  double start = root(d.front() - st, d.front(), true);
  for (std::size_t i = 0; i + 1 < d.size(); ++i) {
    double l = d[i], r = d[i + 1];
    for (int it = 0; it < 200; ++it) {
      const double m = std::midpoint(l, r);
      if (m <= l || m >= r) break;
      (hp(m) < 0.0 ? l : r) = m;
    }
    const double xm = std::midpoint(l, r);
    if (h(xm) < 0.0) {
      out.push_back({start, root(d[i], xm, false)});
      start = root(xm, d[i + 1], true);
    }
  }
  out.push_back({start, root(d.back(), d.back() + st, false)});
  return out;
}

double Window::step(std::size_t n) const {
  if (scaling == WindowScaling::epsilon) return epsilon;
  if (!(c_t > 0.0)) throw ValidationError("density-scaled window needs c_t > 0");
  return 1.0 / (double(n) * c_t);
}

nlohmann::json Window::to_json() const {
  nlohmann::json j{{"x_star", x_star}, {"t", t}, {"x_star_t", x_star_t}, {"c_t", c_t}};
  if (scaling == WindowScaling::epsilon) {
    j["scaling"] = "epsilon";
    j["epsilon"] = epsilon;
  }
  return j;
}

Window make_window(const FreeConvolutionState& limit, double x_star, std::vector<double> u_grid) {
  Window w;
  w.x_star = x_star;
  w.t = limit.t();
  const auto [xt, c] = limit.psi_t_parametric(x_star);
  w.x_star_t = xt;
  w.c_t = c;
  w.u_grid = std::move(u_grid);
  if (!(w.c_t > 0.0)) {
    std::ostringstream os;
    os << "psi_t vanishes at x*_t = " << fmt17(xt) << "; use an epsilon-scaled window";
    throw ValidationError(os.str());
  }
  return w;
}

Window make_epsilon_window(const FreeConvolutionState& limit, double x_star, double epsilon,
                           std::vector<double> u_grid) {
  if (!(epsilon > 0.0)) throw ValidationError("window epsilon must be positive");
  Window w;
  w.x_star = x_star;
  w.t = limit.t();
  const auto [xt, c] = limit.psi_t_parametric(x_star);
  w.x_star_t = xt;
  w.c_t = c;
  w.u_grid = std::move(u_grid);
  w.scaling = WindowScaling::epsilon;
  w.epsilon = epsilon;
  return w;
}

SaddlePair saddle_points(const FreeConvolutionState& finite, const Window& window, double u, double v) {
  if (!finite.measure().empirical()) throw ValidationError("saddle points are defined for the finite-n measure");
  const std::size_t n = finite.measure().discrete().size();
  const double xu = window.position(n, u), xv = window.position(n, v);
  SaddlePair p;
  p.z = finite.inverse_map(xu);
  p.w = (u == v) ? p.z : finite.inverse_map(xv);
  p.x_n = p.z.real();
  p.residual = std::max(std::abs(finite.H_map(p.z) - xu), std::abs(finite.H_map(p.w) - xv));
  if (p.residual > 1e-9 * std::max(1.0, std::abs(xu))) {
    std::ostringstream os;
    os << "saddle equation residual " << p.residual << " exceeds 1e-9";
    throw NumericalError(os.str());
  }
  return p;
}

SaddlePair saddle_points(const InitialConfiguration& config, double t, const Window& window, double u, double v) {
  return saddle_points(FreeConvolutionState(SpectralMeasure(config.measure), t), window, u, v);
}

}  // namespace dbm
