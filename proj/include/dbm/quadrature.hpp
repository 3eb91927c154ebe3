#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "dbm/errors.hpp"
#include "dbm/io.hpp"

namespace dbm::quad {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Legendre on [-1, 1]. Cached; the reference stays valid for the process lifetime.
const Rule& gauss_legendre(std::size_t p);

// Gauss-Hermite for the weight exp(-tau^2/2) on the real line (weights sum to sqrt(2 pi)).
// Nodes ascending. Cached. p <= 512.
const Rule& gauss_hermite(std::size_t p);

// Map a Gauss-Legendre rule onto [a, b] and integrate f.
template <class F>
auto gl_integrate(F&& f, double a, double b, std::size_t p) {
  const Rule& r = gauss_legendre(p);
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  decltype(f(c)) s{};
  for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * f(c + h * r.nodes[i]);
  return s * h;
}

template <class T>
struct Estimate {
  T value{};
  double error = 0.0;
  std::size_t evaluations = 0;
};

// Tanh-sinh quadrature on a finite interval. Robust to integrable endpoint
// singularities; nodes never touch the endpoints.
template <class F>
auto tanh_sinh(F&& f, double a, double b, double rel_tol, double abs_tol = 0.0) {
  using T = decltype(f(a));
  Estimate<T> out;
  if (!(b > a)) return out;
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const double half_pi = 0.5 * std::numbers::pi;
  // panels a few ulps wide: nodes collapse onto the same doubles, use the midpoint
  if (b - a <= 1e-12 * std::max(std::abs(a), std::abs(b))) {
    out.value = f(c) * (b - a);
    out.evaluations = 1;
    return out;
  }

  // Contribution of the symmetric pair at abscissa u > 0 (or the centre at u = 0).
  auto pair = [&](double u) -> T {
    const double v = half_pi * std::sinh(u);
    const double ev = std::exp(-2.0 * v);
    const double delta = h * 2.0 * ev / (1.0 + ev);  // distance to the endpoint
    const double ch = std::cosh(v);
    const double w = half_pi * std::cosh(u) / (ch * ch);
    if (u == 0.0) return w * f(c);
    const double xl = a + delta, xr = b - delta;
    T acc{};
    if (xl != a) acc += f(xl), ++out.evaluations;
    if (xr != b) acc += f(xr), ++out.evaluations;
    return w * acc;
  };
  constexpr double u_max = 4.0;
  double step = 1.0;
  T sum = pair(0.0);
  for (double u = step; u <= u_max; u += step) sum += pair(u);
  T prev = sum * step * h;
  double last_diff = 0.0;
  for (int level = 1; level <= 11; ++level) {
    step *= 0.5;
    for (double u = step; u <= u_max; u += 2.0 * step) sum += pair(u);
    const T cur = sum * step * h;
    const double diff = std::abs(cur - prev);
    if (level >= 3 && diff <= std::max(abs_tol, rel_tol * std::abs(cur))) {
      out.value = cur;
      out.error = diff;
      return out;
    }
    prev = cur;
    last_diff = diff;
  }
  // rounding-limited integrands stall above rel_tol; accept a stalled but small difference.
  // On narrow panels far from 0 the nodes themselves are quantised to ~eps * |x| / (b - a).
  const double resolution = 64.0 * 2.220446049250313e-16 * std::max(std::abs(a), std::abs(b)) / (b - a);
  if (last_diff <= std::max(abs_tol, std::max(1e-9, resolution) * std::abs(prev))) {
    out.value = prev;
    out.error = last_diff;
    return out;
  }
  throw NumericalError("tanh-sinh quadrature did not converge on [" + fmt17(a) + ", " + fmt17(b) +
                       "], last difference " + fmt17(last_diff) + " against " + fmt17(std::abs(prev)));
}

// Sum of tanh-sinh panels between consecutive (sorted, deduplicated) breakpoints.
template <class F>
auto tanh_sinh_panels(F&& f, const std::vector<double>& breakpoints, double rel_tol, double abs_tol = 0.0) {
  using T = decltype(f(0.0));
  Estimate<T> out;
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    if (!(breakpoints[i + 1] > breakpoints[i])) continue;
    const auto e = tanh_sinh(f, breakpoints[i], breakpoints[i + 1], rel_tol, abs_tol);
    out.value += e.value;
    out.error += e.error;
    out.evaluations += e.evaluations;
  }
  return out;
}

}  // namespace dbm::quad
