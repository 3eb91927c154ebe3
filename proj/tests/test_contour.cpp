#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "dbm/contour.hpp"
#include "dbm/errors.hpp"
#include "dbm/rescaled.hpp"

using namespace dbm;
using std::numbers::pi;

namespace {

InitialConfiguration uniform_quantiles(std::size_t n) {
  return make_configuration(Generator{QuantilesOf{MeasureSpec::uniform(-1, 1)}}, n);
}

RescaledKernelFrame uniform_frame(std::size_t n, double t) {
  const FreeConvolutionState limit(SpectralMeasure(MeasureSpec::uniform(-1, 1)), t);
  return make_frame(KernelEvaluator(uniform_quantiles(n), t), make_window(limit, 0.0, {-2, -1, 0, 1, 2}));
}

// winding number of the closed polygon (upper half plus mirror) around a real point
double winding(const std::vector<cplx>& upper, double a) {
  std::vector<cplx> loop(upper);
  for (auto it = upper.rbegin(); it != upper.rend(); ++it) loop.push_back(std::conj(*it));
  double turn = 0;
  for (std::size_t i = 0; i < loop.size(); ++i) {
    const cplx p = loop[i] - a, q = loop[(i + 1) % loop.size()] - a;
    turn += std::arg(q / p);
  }
  return turn / (2 * pi);
}

}  // namespace

TEST_CASE("single point closed form") {
  const double a = 0.2, t = 0.6, x0 = -0.4;
  DoubleContourPhase phase(std::vector<double>{a}, t);
  for (auto [x, y] : {std::pair{0.1, 0.5}, std::pair{-0.7, 0.3}, std::pair{0.4, 0.4}}) {
    const double direct = std::exp(-(y - a) * (y - a) / (2 * t)) / std::sqrt(2 * pi * t) *
                          std::exp((y * y - x * x) / (2 * t) - (y - x) * x0 / t);
    for (double line : {0.2, 0.5, 2.5}) CHECK(phase.kernel(x, y, x0, line).value() == doctest::Approx(direct).epsilon(1e-10));
  }
}

TEST_CASE("polygon encloses every atom once") {
  const std::vector<double> a{-1.0, -0.95, -0.2, 0.0, 0.6, 1.3};
  for (double t : {0.002, 0.05, 0.5}) {
    DoubleContourPhase phase(a, t);
    CHECK(phase.loops().size() == phase.polygon().size());
    for (double ak : a) {
      double total = 0;
      for (const auto& p : phase.polygon()) total += winding(p, ak);
      CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
    // upper half is a graph over the real axis, traversed right to left
    for (const auto& p : phase.polygon())
      for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        CHECK(p[i + 1].real() < p[i].real());
        CHECK(p[i].imag() >= 0.0);
      }
  }
}

TEST_CASE("independent of the vertical line") {
  const std::vector<double> a{-1.0, -0.5, -0.1, 0.3, 0.35, 0.9, 1.2, 1.6};
  DoubleContourPhase phase(a, 0.3);
  for (auto [x, y] : {std::pair{0.0, 0.2}, std::pair{0.5, -0.4}}) {
    const double ref = phase.kernel(x, y, x, x).value();
    for (double shift : {-0.3, 0.3}) CHECK(phase.kernel(x, y, x, x + shift).value() == doctest::Approx(ref).epsilon(1e-9));
  }
}

TEST_CASE("agrees with the Lagrange form") {
  auto ev = KernelEvaluator(uniform_quantiles(20), 0.5, 0.1);
  DoubleContourPhase phase(ev);
  for (double x : {-0.6, 0.05})
    for (double y : {-0.3, 0.05, 0.4}) {
      const double lag = kernel_gauged(ev, x, y);
      CHECK(std::abs(phase.kernel(x, y, 0.1, x).value() - lag) <= std::max(1e-6, 1e-4 * std::abs(lag)));
    }
  auto fr = uniform_frame(30, 0.5);
  const std::vector<double> vs{-1.5, 0.0, 1.0};
  for (double u : {-1.0, 0.5}) {
    const auto row = rescaled_kernel_row(fr, u, vs);
    for (std::size_t j = 0; j < vs.size(); ++j) {
      const double lag = rescaled_kernel_lagrange(fr, u, vs[j]);
      CHECK(std::abs(row[j].value - lag) <= std::max(1e-6, 1e-4 * std::abs(lag)));
      CHECK(row[j].value == doctest::Approx(row[j].I_n + row[j].A_n).epsilon(1e-14));
    }
  }
}

TEST_CASE("segment term") {
  auto fr = uniform_frame(30, 0.5);
  const double u = 0.7;
  const auto row = rescaled_kernel_row(fr, u, std::vector<double>{u, -0.4});
  const double theta = row[0].s / (fr.window.c_t * fr.window.t);
  CHECK(row[0].s > 0);
  CHECK(row[0].A_n == doctest::Approx(theta / pi).epsilon(1e-14));
  CHECK(row[1].A_n == doctest::Approx(std::sin((u + 0.4) * theta) / (pi * (u + 0.4))).epsilon(1e-14));

  // inside a gap the saddle sits on the real axis and the segment term vanishes
  const double delta = 0.3, t = 0.01 * delta * delta;
  auto base = std::make_shared<const Generator>(Generator{Equispaced{-1, 1}});
  auto cfg = make_configuration(Generator{GapInserted{base, 0.0, delta}}, 40);
  const FreeConvolutionState finite(SpectralMeasure(cfg.measure), t);
  auto gap = make_frame(KernelEvaluator(cfg, t), make_epsilon_window(finite, 0.0, delta / 10, {0.0}));
  const auto v = rescaled_kernel_row(gap, 0.5, std::vector<double>{0.5, -1.0});
  CHECK(v[0].s == 0.0);
  CHECK(v[0].A_n == 0.0);
  CHECK(v[1].A_n == 0.0);
  CHECK(std::abs(v[1].value) <= 0.05);
}

TEST_CASE("saddle point is stationary for the phase") {
  auto fr = uniform_frame(40, 0.5);
  const auto& phase = *fr.phase;
  for (double u : {-1.0, 0.0, 1.5}) {
    const double x = fr.window.position(40, u);
    const cplx z = phase.finite().inverse_map(x);
    CHECK(z.imag() > 0);
    const double h = 1e-5;
    const cplx d = (phase.phi(z + h, x) - phase.phi(z - h, x)) / (2 * h);
    CHECK(std::abs(d) <= 1e-6 * 40 / 0.5);
  }
}

TEST_CASE("symmetric configuration") {
  auto fr50 = uniform_frame(50, 0.5);
  const std::vector<std::pair<double, double>> pairs{{0.5, -1.0}, {1.5, 0.25}, {-2.0, 1.0}};
  double dev50 = 0;
  for (auto [u, v] : pairs) {
    const double k = rescaled_kernel(fr50, u, v);
    // point reflection is exact
    CHECK(rescaled_kernel(fr50, -u, -v) == doctest::Approx(k).epsilon(1e-8));
    // the gauge-invariant product is symmetric under (u, v) -> (-v, -u)
    const double kt = rescaled_kernel(fr50, v, u);
    const double m1 = rescaled_kernel(fr50, -v, -u), m2 = rescaled_kernel(fr50, -u, -v);
    CHECK(k * kt == doctest::Approx(m1 * m2).epsilon(1e-8));
    dev50 = std::max(dev50, std::abs(k - m1));
  }
  // the kernel itself only approaches the (u, v) -> (-v, -u) symmetry as n grows
  auto fr100 = uniform_frame(100, 0.5);
  double dev100 = 0;
  for (auto [u, v] : pairs) dev100 = std::max(dev100, std::abs(rescaled_kernel(fr100, u, v) - rescaled_kernel(fr100, -v, -u)));
  CHECK(dev100 < dev50);
}

TEST_CASE("frame metadata") {
  auto fr = uniform_frame(20, 0.5);
  const auto j = fr.to_json();
  for (const char* key : {"n", "t", "x_star", "x_star_t", "c_t", "x0", "quadrature_M", "eps_split_applied"})
    CHECK(j.contains(key));
  CHECK(j["n"] == 20);
  CHECK(std::abs(j["x0"].get<double>()) < 1e-12);
}

TEST_CASE("argument validation") {
  CHECK_THROWS_AS(DoubleContourPhase(std::vector<double>{}, 0.5), ValidationError);
  CHECK_THROWS_AS(DoubleContourPhase(std::vector<double>{0.0}, 0.0), ValidationError);
  DoubleContourPhase phase(std::vector<double>{-1.0, 1.0}, 0.5);
  CHECK_THROWS_AS(phase.kernel(NAN, 0.0, 0.0, 0.0), ValidationError);
  auto ev = KernelEvaluator(uniform_quantiles(3), 0.5);
  const FreeConvolutionState limit(SpectralMeasure(MeasureSpec::uniform(-1, 1)), 0.5);
  CHECK_THROWS_AS(kernel_double_contour(ev, phase, make_window(limit, 0.0, {0.0}), 0.0, 0.0), ValidationError);
}
