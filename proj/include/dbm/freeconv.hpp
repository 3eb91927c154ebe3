#pragma once

#include <complex>
#include <cstddef>
#include <variant>
#include <vector>

#include "dbm/measures.hpp"

namespace dbm {

using cplx = std::complex<double>;

// Source of a Stieltjes transform: a reference measure mu or an empirical mu_n.
class SpectralMeasure {
 public:
  SpectralMeasure(MeasureSpec mu, bool force_quadrature = false);
  SpectralMeasure(EmpiricalMeasure mu_n);

  bool empirical() const { return std::holds_alternative<EmpiricalMeasure>(src_); }
  const MeasureSpec& continuous() const { return std::get<MeasureSpec>(src_); }
  const EmpiricalMeasure& discrete() const { return std::get<EmpiricalMeasure>(src_); }
  Interval hull() const;
  bool in_support(double x) const;
  double density(double x) const;  // 0 for empirical sources

  // G(z) for Im z > 0, or real z at positive distance from the support.
  cplx stieltjes(cplx z) const;
  // int dmu(s) / ((x - s)^2 + y^2). For y = 0 returns +inf when the integral diverges.
  double inverse_square_moment(double x, double y) const;

 private:
  std::variant<MeasureSpec, EmpiricalMeasure> src_;
  bool force_quadrature_ = false;
};

cplx stieltjes(const SpectralMeasure& src, cplx z);

// Principal value int dmu(s) / (x - s).
double hilbert_transform(const MeasureSpec& mu, double x);

// t_cr(x*) = 1 / int dmu(s)/(s - x*)^2, and 0 when the integral diverges.
double t_critical(const MeasureSpec& mu, double x_star);

// Free convolution with the semicircle of variance t, via the subordination graph y_{t,mu}.
class FreeConvolutionState {
 public:
  FreeConvolutionState(SpectralMeasure mu, double t);

  const SpectralMeasure& measure() const { return mu_; }
  double t() const { return t_; }

  double y_t(double x) const;
  // G on the closed graph / real axis, as the limit from the upper half plane.
  cplx boundary_stieltjes(double x, double y) const;
  cplx H_map(cplx z) const;
  double forward_map(double x) const;
  cplx inverse_map(double xi) const;
  // Density of mu boxplus sigma_t at xi, through the inverse map.
  double psi_t(double xi) const;
  // Same density through the graph parametrization: pair {x_t, y(x)/(pi t)}.
  std::pair<double, double> psi_t_parametric(double x) const;
  // Closed intervals where y_{t,mu} > 0 (empirical sources only).
  std::vector<Interval> graph_support() const;

 private:
  SpectralMeasure mu_;
  double t_;
};

enum class WindowScaling { density, epsilon };

// Bulk observation frame around x*_t.
struct Window {
  double x_star = 0.0;
  double t = 0.0;
  double x_star_t = 0.0;
  double c_t = 0.0;
  std::vector<double> u_grid;
  WindowScaling scaling = WindowScaling::density;
  double epsilon = 0.0;

  // Spatial step per unit of u at size n: 1/(n c_t) or epsilon.
  double step(std::size_t n) const;
  double position(std::size_t n, double u) const { return x_star_t + u * step(n); }
  nlohmann::json to_json() const;
};

Window make_window(const FreeConvolutionState& limit, double x_star, std::vector<double> u_grid);
Window make_epsilon_window(const FreeConvolutionState& limit, double x_star, double epsilon,
                           std::vector<double> u_grid);

struct SaddlePair {
  cplx z;
  cplx w;
  double x_n = 0.0;
  double residual = 0.0;  // max |H(z) - target| over the pair
};

SaddlePair saddle_points(const FreeConvolutionState& finite, const Window& window, double u, double v);
SaddlePair saddle_points(const InitialConfiguration& config, double t, const Window& window, double u, double v);

}  // namespace dbm
