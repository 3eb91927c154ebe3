#include "dbm/contour.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "dbm/errors.hpp"
#include "dbm/io.hpp"
#include "dbm/quadrature.hpp"
#include "dbm/simd.hpp"

namespace dbm {

namespace {

constexpr double kDecay = 45.0;      // truncate L once Re a falls this far below its maximum
constexpr double kPanelWidth = 0.5;  // L panel width in units of sqrt(t/n)
constexpr double kRelTol = 1e-9;
constexpr double kAbsTolPerPoint = 1e-11;
// without the subtraction term, gamma nodes this far below the largest weight are dropped
constexpr double kPrune = 46.0;

}  // namespace

DoubleContourPhase::DoubleContourPhase(std::span<const double> points, double t)
    : a_(points.begin(), points.end()), t_(t), finite_(SpectralMeasure(EmpiricalMeasure(a_)), t) {
  if (a_.empty()) throw ValidationError("double-contour phase needs at least one point");
  if (!(t > 0.0)) throw ValidationError("double-contour phase needs t > 0");
  std::sort(a_.begin(), a_.end());
  build_polygon();
}

const DoubleContourPhase::Nodes& DoubleContourPhase::nodes(std::size_t level) const {
  std::call_once(cache_->once[level], [&] { cache_->nodes[level] = discretize(kOrders[level]); });
  return cache_->nodes[level];
}

cplx DoubleContourPhase::g(cplx z) const { return simd::log_prod(a_, z) / double(n()); }

cplx DoubleContourPhase::phi(cplx z, double x) const {
  const double c = double(n()) / (2.0 * t_);
  return c * (z - x) * (z - x) + simd::log_prod(a_, z);
}

void DoubleContourPhase::build_polygon() {
  loops_ = finite_.graph_support();
  const double sigma = std::sqrt(t_ / double(n()));
  auto nearest_atom = [&](cplx p) {
    auto it = std::lower_bound(a_.begin(), a_.end(), p.real());
    double d = std::numeric_limits<double>::infinity();
    if (it != a_.end()) d = std::min(d, std::abs(p - *it));
    if (it != a_.begin()) d = std::min(d, std::abs(p - *(it - 1)));
    return d;
  };
  const double reach = std::max(1.0, a_.back() - a_.front() + 2.0 * std::sqrt(t_));
  const double max_len = 4.0 * t_ / (double(n()) * reach);
  polygon_.clear();
  for (const auto& loop : loops_) {
    std::vector<double> xs{loop.lo, loop.hi};
    for (double aj : a_)
      if (aj > loop.lo && aj < loop.hi) xs.push_back(aj);
    std::sort(xs.begin(), xs.end());
    // clusters of split duplicates collapse to one vertex
    const double merge = 1e-6 * sigma;
    std::vector<double> kept{xs.front()};
    for (std::size_t i = 1; i < xs.size(); ++i)
      if (xs[i] - kept.back() > merge) kept.push_back(xs[i]);
    if (kept.back() != loop.hi) kept.back() = loop.hi;
    auto height = [&](double x) { return (x <= loop.lo || x >= loop.hi) ? 0.0 : finite_.y_t(x); };

    std::vector<cplx> verts{{kept.front(), 0.0}};
    for (std::size_t i = 1; i < kept.size(); ++i) {
      const double xr = kept[i];
      // midpoint, then adaptive bisection
      std::vector<std::pair<cplx, int>> stack{{cplx(xr, height(xr)), 0}};
      const double xm = 0.5 * (verts.back().real() + xr);
      stack.push_back({cplx(xm, height(xm)), 0});
      while (!stack.empty()) {
        const auto [p, depth] = stack.back();
        const cplx q = verts.back();
        const double len = std::abs(p - q);
        const double xmid = 0.5 * (p.real() + q.real());
        const cplx chord = 0.5 * (p + q);
        // short against the distance to the nearest atom and against the Gaussian phase scale
        const bool close = len > 0.5 * nearest_atom(chord);
        const bool long_phase = len > max_len;
        if (depth < 40 && (p.real() - q.real()) > 1e-12 * (1.0 + std::abs(xmid)) && (close || long_phase)) {
          const double ymid = height(xmid);
          stack.back().second = depth + 1;
          stack.push_back({cplx(xmid, ymid), depth + 1});
        } else {
          verts.push_back(p);
          stack.pop_back();
        }
      }
    }
    verts.back() = {loop.hi, 0.0};
    std::reverse(verts.begin(), verts.end());  // upper half runs right to left
    polygon_.push_back(std::move(verts));
  }
}

DoubleContourPhase::Nodes DoubleContourPhase::discretize(std::size_t order) const {
  const auto& gl = quad::gauss_legendre(order);
  Nodes up;
  std::vector<cplx> w;
  for (const auto& verts : polygon_) {
    for (std::size_t i = 0; i + 1 < verts.size(); ++i) {
      const cplx mid = 0.5 * (verts[i] + verts[i + 1]);
      const cplx half = 0.5 * (verts[i + 1] - verts[i]);
      for (std::size_t k = 0; k < order; ++k) {
        w.push_back(mid + half * gl.nodes[k]);
        up.omega.push_back(half * gl.weights[k]);
      }
    }
  }
  Nodes out;
  const std::size_t m = w.size();
  out.w_re.resize(2 * m);
  out.w_im.resize(2 * m);
  out.omega.resize(2 * m);
  out.ng.resize(2 * m);
  for (std::size_t j = 0; j < m; ++j) {
    const cplx ng = simd::log_prod(a_, w[j]);
    out.w_re[j] = w[j].real();
    out.w_im[j] = w[j].imag();
    out.omega[j] = up.omega[j];
    out.ng[j] = ng;
    // lower half: mirror image traversed left to right
    out.w_re[m + j] = w[j].real();
    out.w_im[m + j] = -w[j].imag();
    out.omega[m + j] = -std::conj(up.omega[j]);
    out.ng[m + j] = std::conj(ng);
  }
  return out;
}

std::vector<ScaledValue> DoubleContourPhase::row_at(std::size_t level, double x, std::span<const double> ys,
                                                    double gauge_x0, double line_x) const {
  const Nodes& N = nodes(level);
  const std::size_t p = kOrders[level];
  const double nn = double(n());
  const double c = nn / (2.0 * t_);
  const double sigma = std::sqrt(t_ / nn);

  // height where L meets gamma, if it does
  double s = 0.0;
  bool crossing = false;
  for (std::size_t l = 0; l < loops_.size(); ++l) {
    if (line_x > loops_[l].lo && line_x < loops_[l].hi) {
      const auto& v = polygon_[l];
      for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        if (v[i].real() >= line_x && line_x >= v[i + 1].real()) {
          const double f = (v[i].real() - line_x) / (v[i].real() - v[i + 1].real());
          s = v[i].imag() + f * (v[i + 1].imag() - v[i].imag());
          break;
        }
      }
      crossing = true;
    }
  }

  auto a0 = [&](cplx z) { return c * (z - x) * (z - x) + simd::log_prod(a_, z); };
  const double width = kPanelWidth * sigma;
  double top = 0.0, ra_max = a0({line_x, 0.0}).real();
  for (int k = 1;; ++k) {
    if (k > 200000) throw NumericalError("double contour: no decay along the vertical line");
    top = k * width;
    const double ra = a0({line_x, top}).real();
    ra_max = std::max(ra_max, ra);
    if (top >= s + width && ra < ra_max - kDecay) break;
  }

  std::vector<double> tau, wl;
  const auto& gl = quad::gauss_legendre(p);
  auto add_panels = [&](double lo, double hi) {
    if (!(hi > lo)) return;
    const int m = std::max(1, int(std::ceil((hi - lo) / width)));
    const double step = (hi - lo) / m;
    for (int i = 0; i < m; ++i) {
      const double ctr = lo + (i + 0.5) * step, half = 0.5 * step;
      for (std::size_t k = 0; k < p; ++k) {
        tau.push_back(ctr + half * gl.nodes[k]);
        wl.push_back(half * gl.weights[k]);
      }
    }
  };
  add_panels(0.0, s);
  add_panels(s, top);

  const std::size_t nl = tau.size();
  std::vector<cplx> z(nl), av(nl), t2;
  double a_ref = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < nl; ++i) {
    z[i] = {line_x, tau[i]};
    av[i] = a0(z[i]);
    a_ref = std::max(a_ref, av[i].real());
  }
  for (auto& v : av) v = std::exp(v - a_ref);
  if (crossing) {
    t2.resize(nl);
    std::vector<double> o_re(N.omega.size()), o_im(N.omega.size());
    for (std::size_t j = 0; j < N.omega.size(); ++j) {
      o_re[j] = N.omega[j].real();
      o_im[j] = N.omega[j].imag();
    }
    simd::cauchy_matvec(N.w_re, N.w_im, o_re, o_im, z, t2);
  }

  const std::size_t nw = N.w_re.size();
  std::vector<double> c_re(nw), c_im(nw), keep_re(crossing ? 0 : nw), keep_im(crossing ? 0 : nw);
  std::vector<cplx> b(nw), t1(nl);
  std::vector<ScaledValue> out;
  out.reserve(ys.size());
  const double pref = nn / (2.0 * std::numbers::pi * std::numbers::pi * t_);
  for (double y : ys) {
    double b_ref = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < nw; ++j) {
      const cplx d(N.w_re[j] - y, N.w_im[j]);
      b[j] = c * d * d + N.ng[j];
      b_ref = std::min(b_ref, b[j].real());
    }
    if (crossing) {
      for (std::size_t j = 0; j < nw; ++j) {
        const cplx cj = N.omega[j] * std::exp(b_ref - b[j]);
        c_re[j] = cj.real();
        c_im[j] = cj.imag();
      }
      simd::cauchy_matvec(N.w_re, N.w_im, c_re, c_im, z, t1);
    } else {
      std::size_t kept = 0;
      for (std::size_t j = 0; j < nw; ++j) {
        if (b[j].real() - b_ref > kPrune) continue;
        const cplx cj = N.omega[j] * std::exp(b_ref - b[j]);
        keep_re[kept] = N.w_re[j];
        keep_im[kept] = N.w_im[j];
        c_re[kept] = cj.real();
        c_im[kept] = cj.imag();
        ++kept;
      }
      simd::cauchy_matvec(std::span(keep_re).first(kept), std::span(keep_im).first(kept),
                          std::span(c_re).first(kept), std::span(c_im).first(kept), z, t1);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < nl; ++i) {
      cplx f = av[i] * t1[i];
      if (crossing) {
        // e^{a(z) - b(z)} in closed form; |.| is constant along L
        const cplx lc = c * (2.0 * z[i] * (y - x) + x * x - y * y) - a_ref + b_ref;
        if (lc.real() > 700.0) throw NumericalError("double contour: subtraction term out of range");
        f -= std::exp(lc) * t2[i];
      }
      sum += wl[i] * f.imag();
    }
    const double gauge = -c * (x * x - y * y) + (nn / t_) * (x - y) * gauge_x0;
    out.push_back({pref * sum, a_ref - b_ref + gauge});
  }
  return out;
}

std::vector<ScaledValue> DoubleContourPhase::kernel_row(double x, std::span<const double> ys, double gauge_x0,
                                                        double line_x) const {
  if (!std::isfinite(x) || !std::isfinite(gauge_x0) || !std::isfinite(line_x))
    throw ValidationError("double contour arguments must be finite");
  for (double y : ys)
    if (!std::isfinite(y)) throw ValidationError("double contour arguments must be finite");
  if (ys.empty()) return {};
  auto prev = row_at(0, x, ys, gauge_x0, line_x);
  for (std::size_t level = 1; level < kOrders.size(); ++level) {
    auto cur = row_at(level, x, ys, gauge_x0, line_x);
    bool ok = true;
    std::size_t worst = 0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
      const double b = prev[i].mantissa == 0.0
                           ? 0.0
                           : prev[i].mantissa * std::exp(prev[i].log_scale - cur[i].log_scale);
      const double gap = std::abs(cur[i].mantissa - b);
      const double allowed =
          kRelTol * std::abs(cur[i].mantissa) + kAbsTolPerPoint * double(n()) * std::exp(-cur[i].log_scale);
      if (!(gap <= allowed)) {
        ok = false;
        worst = i;
      }
    }
    if (ok) return cur;
    if (level + 1 == kOrders.size()) {
      std::ostringstream os;
      os << "double contour did not converge at (x, y) = (" << fmt17(x) << ", " << fmt17(ys[worst]) << "): order "
         << kOrders[level - 1] << " gives " << fmt17(prev[worst].value()) << ", order " << kOrders[level] << " gives "
         << fmt17(cur[worst].value());
      throw NumericalError(os.str());
    }
    prev = std::move(cur);
  }
  return prev;
}

ScaledValue DoubleContourPhase::kernel(double x, double y, double gauge_x0, double line_x) const {
  const double ys[1] = {y};
  return kernel_row(x, ys, gauge_x0, line_x).front();
}

std::vector<DoubleContourValue> kernel_double_contour_row(const KernelEvaluator& ev, const DoubleContourPhase& phase,
                                                          const Window& window, double u, std::span<const double> vs) {
  const std::size_t n = ev.n();
  if (phase.n() != n) throw ValidationError("phase and evaluator disagree on n");
  const double h = window.step(n);
  const double x = window.position(n, u);
  const cplx zn = phase.finite().inverse_map(x);
  std::vector<double> ys;
  ys.reserve(vs.size());
  for (double v : vs) ys.push_back(window.position(n, v));
  const auto k = phase.kernel_row(x, ys, zn.real(), zn.real());
  const double theta = h * zn.imag() * double(n) / ev.t();
  std::vector<DoubleContourValue> out(vs.size());
  for (std::size_t i = 0; i < vs.size(); ++i) {
    auto& r = out[i];
    r.value = h * k[i].value();
    r.s = zn.imag();
    r.x_n = zn.real();
    const double d = u - vs[i];
    r.A_n = d == 0.0 ? theta / std::numbers::pi : std::sin(d * theta) / (std::numbers::pi * d);
    r.I_n = r.value - r.A_n;
  }
  return out;
}

DoubleContourValue kernel_double_contour(const KernelEvaluator& ev, const DoubleContourPhase& phase,
                                         const Window& window, double u, double v) {
  const double vs[1] = {v};
  return kernel_double_contour_row(ev, phase, window, u, vs).front();
}

}  // namespace dbm
