#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "dbm/freeconv.hpp"
#include "dbm/kernel.hpp"

namespace dbm {

// Double-contour form of the kernel: a vertical line L and a closed polygon
// gamma through the graph of y_{t,mu_n}, one loop per graph-support interval.
// The inner integrand is taken in the subtracted form
//   (Psi(w) - Psi(z)) / (z - w),
// which is analytic in w, so the crossing of L and gamma needs no special care;
// the subtracted Cauchy term reproduces the segment (sine) term exactly.
class DoubleContourPhase {
 public:
  DoubleContourPhase(std::span<const double> points, double t);
  explicit DoubleContourPhase(const KernelEvaluator& ev) : DoubleContourPhase(ev.points(), ev.t()) {}

  std::size_t n() const { return a_.size(); }
  double t() const { return t_; }
  std::span<const double> points() const { return a_; }
  const FreeConvolutionState& finite() const { return finite_; }
  const std::vector<Interval>& loops() const { return loops_; }
  // vertices of the upper half of gamma, right to left within each loop
  const std::vector<std::vector<cplx>>& polygon() const { return polygon_; }

  // g_{mu_n}(z) = (1/n) sum log(z - a_j), principal branches
  cplx g(cplx z) const;
  // phi_n(z) = (n/2t)[(z - x)^2 + 2t g(z)] for the window position x
  cplx phi(cplx z, double x) const;

  // K(x, y) in the gauge x0 = gauge_x0, with L = line_x + iR.
  ScaledValue kernel(double x, double y, double gauge_x0, double line_x) const;
  std::vector<ScaledValue> kernel_row(double x, std::span<const double> ys, double gauge_x0, double line_x) const;

  // Orders tried on every gamma segment and L panel, coarse to fine.
  static constexpr std::array<std::size_t, 3> kOrders{8, 16, 32};

 private:
  struct Nodes {
    std::vector<double> w_re, w_im;
    std::vector<cplx> omega;
    std::vector<cplx> ng;  // n g(w)
  };
  // gamma nodes per order, built on first use (finer orders are rarely needed)
  struct NodeCache {
    std::array<std::once_flag, 3> once;
    std::array<Nodes, 3> nodes;
  };
  void build_polygon();
  Nodes discretize(std::size_t order) const;
  const Nodes& nodes(std::size_t level) const;
  std::vector<ScaledValue> row_at(std::size_t level, double x, std::span<const double> ys, double gauge_x0,
                                  double line_x) const;

  std::vector<double> a_;
  double t_;
  FreeConvolutionState finite_;
  std::vector<Interval> loops_;
  std::vector<std::vector<cplx>> polygon_;
  std::shared_ptr<NodeCache> cache_ = std::make_shared<NodeCache>();
};

// Rescaled value h K(x*_t + u h, x*_t + v h) with gauge and line through x_n = Re z_n(u),
// split as I_n + A_n with A_n = sin((u - v) theta) / (pi (u - v)), theta = h s n / t.
struct DoubleContourValue {
  double value = 0.0;
  double I_n = 0.0;
  double A_n = 0.0;
  double s = 0.0;
  double x_n = 0.0;
};

DoubleContourValue kernel_double_contour(const KernelEvaluator& ev, const DoubleContourPhase& phase,
                                         const Window& window, double u, double v);
std::vector<DoubleContourValue> kernel_double_contour_row(const KernelEvaluator& ev, const DoubleContourPhase& phase,
                                                          const Window& window, double u, std::span<const double> vs);

}  // namespace dbm
