#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "dbm/errors.hpp"
#include "dbm/freeconv.hpp"

using namespace dbm;
using std::numbers::pi;

namespace {

// independent closed form for the power kind with exponent 2 on [-1, 1]
cplx power2_stieltjes(cplx z) { return 1.5 * (-2.0 * z + z * z * (std::log(z + 1.0) - std::log(z - 1.0))); }

double semicircle_density(double s, double x) {
  const double r2 = 4.0 * s - x * x;
  return r2 <= 0 ? 0.0 : std::sqrt(r2) / (2 * pi * s);
}

}  // namespace

TEST_CASE("Stieltjes transform examples") {
  SpectralMeasure two(EmpiricalMeasure({-1.0, 1.0}));
  CHECK(std::abs(stieltjes(two, {0.0, 1.0}) - cplx(0.0, -0.5)) < 1e-15);
  SpectralMeasure sc(MeasureSpec::semicircle(1.0));
  CHECK(std::abs(stieltjes(sc, 3.0) - (3.0 - std::sqrt(5.0)) / 2.0) < 1e-15);
  const cplx far{0.3, 1e6};
  CHECK(std::abs(stieltjes(SpectralMeasure(MeasureSpec::power(0.5, 0, -1, 1)), far) * far - 1.0) < 1e-10);
  CHECK_THROWS_AS(stieltjes(sc, 0.5), ValidationError);
}

TEST_CASE("quadrature route agrees with closed forms") {
  for (const auto& m : {MeasureSpec::semicircle(1.0), MeasureSpec::uniform(-1, 1)}) {
    SpectralMeasure exact(m), num(m, true);
    for (cplx z : {cplx{0.3, 1e-6}, cplx{0.3, 0.01}, cplx{-1.9, 0.2}, cplx{2.5, 0.0}, cplx{0.0, 5.0}}) {
      CHECK(std::abs(exact.stieltjes(z) - num.stieltjes(z)) <= 1e-11 * std::abs(exact.stieltjes(z)));
      if (z.imag() > 0)
        CHECK(exact.inverse_square_moment(z.real(), z.imag()) ==
              doctest::Approx(num.inverse_square_moment(z.real(), z.imag())).epsilon(1e-11));
    }
  }
  SpectralMeasure p2(MeasureSpec::power(2.0, 0.0, -1, 1));
  for (cplx z : {cplx{0.3, 1e-5}, cplx{0.0, 0.1}, cplx{-0.99, 0.02}, cplx{1.5, 0.0}})
    CHECK(std::abs(p2.stieltjes(z) - power2_stieltjes(z)) <= 1e-11 * std::abs(power2_stieltjes(z)));
}

TEST_CASE("Hilbert transform examples") {
  const auto u = MeasureSpec::uniform(-1, 1);
  CHECK(hilbert_transform(u, 0.5) == doctest::Approx(0.5 * std::log(3.0)).epsilon(1e-12));
  CHECK(hilbert_transform(u, 2.0) == doctest::Approx(0.5 * std::log(3.0)).epsilon(1e-12));
  CHECK(std::abs(hilbert_transform(u, 0.0)) < 1e-14);
  CHECK(hilbert_transform(MeasureSpec::semicircle(1.0), 0.7) == doctest::Approx(0.35).epsilon(1e-11));
  const auto p2 = MeasureSpec::power(2.0, 0.0, -1, 1);
  for (double x : {0.0, 0.25, -0.6})
    CHECK(std::abs(hilbert_transform(p2, x) - power2_stieltjes({x, 1e-300}).real()) < 1e-11);
  CHECK(std::abs(hilbert_transform(MeasureSpec::power(0.5, 0.0, -1, 1), 0.0)) < 1e-12);
  CHECK_THROWS_AS(hilbert_transform(u, 1.0), ValidationError);
}

TEST_CASE("y_t examples") {
  FreeConvolutionState su(SpectralMeasure(MeasureSpec::uniform(-1, 1)), 0.25);
  CHECK(su.y_t(1.5) == 0.0);
  CHECK(su.y_t(-1.6) == 0.0);
  FreeConvolutionState sc(SpectralMeasure(MeasureSpec::semicircle(1.0)), 1.0);
  CHECK(sc.y_t(0.0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-11));
  FreeConvolutionState p2(SpectralMeasure(MeasureSpec::power(2.0, 0.0, -1, 1)), 0.2);
  CHECK(p2.y_t(0.0) == 0.0);
}

TEST_CASE("t_critical examples") {
  CHECK(t_critical(MeasureSpec::power(2.0, 0.0, -1, 1), 0.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(t_critical(MeasureSpec::uniform(-1, 1), 2.0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(t_critical(MeasureSpec::uniform(-1, 1), 0.0) == 0.0);
  CHECK(t_critical(MeasureSpec::power(0.5, 0.0, -1, 1), 0.0) == 0.0);
  CHECK(t_critical(MeasureSpec::power(1.0, 0.0, -1, 1), 0.0) == 0.0);
  CHECK(t_critical(MeasureSpec::semicircle(1.0), 2.0) == 0.0);
  // numeric fallback: piecewise density vanishing quadratically at an interior point
  const auto pw = MeasureSpec::piecewise({{-1.0, 0.0, {0.0, 0.0, 1.5}}, {0.0, 1.0, {0.0, 0.0, 1.5}}});
  CHECK(t_critical(pw, 0.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("H map, forward map and inverse map examples") {
  FreeConvolutionState sc(SpectralMeasure(MeasureSpec::semicircle(1.0)), 1.0);
  CHECK(std::abs(sc.H_map({0.0, 1.0 / std::sqrt(2.0)})) < 1e-11);
  CHECK_THROWS_AS(sc.H_map({0.0, 0.3}), ValidationError);
  const cplx big{30.0, 40.0};
  CHECK(std::abs(sc.H_map(big) - (big + 1.0 / big)) < 1e-4);
  CHECK(std::abs(sc.forward_map(0.0)) < 1e-14);
  const cplx f0 = sc.inverse_map(0.0);
  CHECK(std::abs(f0 - cplx(0.0, 1.0 / std::sqrt(2.0))) < 1e-11);
  FreeConvolutionState su(SpectralMeasure(MeasureSpec::uniform(-1, 1)), 0.25);
  CHECK(su.forward_map(2.0) == doctest::Approx(2.0 + 0.125 * std::log(3.0)).epsilon(1e-13));
}

TEST_CASE("psi_t examples") {
  FreeConvolutionState sc(SpectralMeasure(MeasureSpec::semicircle(1.0)), 1.0);
  CHECK(sc.psi_t(0.0) == doctest::Approx(1.0 / (pi * std::sqrt(2.0))).epsilon(1e-11));
  CHECK(sc.psi_t(10.0) == 0.0);
  FreeConvolutionState su(SpectralMeasure(MeasureSpec::uniform(-1, 1)), 1e-4);
  CHECK(std::abs(su.psi_t(0.0) - 0.5) < 1e-2);
}

TEST_CASE("density on a grid through edges, centre and breakpoint offsets") {
  // x = 0, +-1, +-2.5 put peaked-offset panels a few ulps wide next to the support edges
  FreeConvolutionState st(SpectralMeasure(MeasureSpec::power(2.0, 0.0, -1, 1)), 1.0);
  double mass = 0.0, prev = 0.0;
  for (int k = 0; k <= 120; ++k) {
    const double x = -3.0 + 0.05 * k, v = st.psi_t(x);
    CHECK(v >= 0.0);
    CHECK(v == doctest::Approx(st.psi_t(-x)).epsilon(1e-9));
    if (k > 0) mass += 0.5 * 0.05 * (v + prev);
    prev = v;
  }
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("semicircle oracle: sigma_1 boxplus sigma_t = sigma_{1+t}") {
  for (double t : {0.1, 0.5, 1.0, 2.0}) {
    FreeConvolutionState st(SpectralMeasure(MeasureSpec::semicircle(1.0)), t);
    const double r = 2.0 * std::sqrt(1.0 + t);
    double err = 0.0;
    for (int k = 0; k < 200; ++k) {
      const double xi = -r + 2.0 * r * (k + 0.5) / 200.0;
      err = std::max(err, std::abs(st.psi_t(xi) - semicircle_density(1.0 + t, xi)));
    }
    CHECK(err <= 1e-8);
  }
}

TEST_CASE("inverse property H(F(xi)) = xi and both density routes agree") {
  std::mt19937_64 rng(9);
  for (const auto& m : {MeasureSpec::semicircle(1.0), MeasureSpec::power(0.5, 0.0, -1, 1),
                        MeasureSpec::power(2.0, 0.0, -1, 1), MeasureSpec::uniform(-1, 1)}) {
    for (double t : {0.05, 0.5}) {
      FreeConvolutionState st(SpectralMeasure(m), t);
      const double lo = st.forward_map(m.hull().lo - std::sqrt(t)), hi = st.forward_map(m.hull().hi + std::sqrt(t));
      std::uniform_real_distribution<double> u(lo, hi);
      for (int i = 0; i < 25; ++i) {
        const double xi = u(rng);
        const cplx z = st.inverse_map(xi);
        CHECK(std::abs(st.H_map(z) - xi) <= 1e-10);
      }
      std::uniform_real_distribution<double> ux(m.hull().lo - 0.2, m.hull().hi + 0.2);
      for (int i = 0; i < 10; ++i) {
        const auto [xt, dens] = st.psi_t_parametric(ux(rng));
        CHECK(std::abs(st.psi_t(xt) - dens) <= 1e-8);
      }
    }
  }
}

TEST_CASE("graph properties: bounds, graph identity, |G| <= 1/sqrt(t), neighbourhood support") {
  std::mt19937_64 rng(17);
  const auto q = quantiles(MeasureSpec::uniform(-1, 1), 40);
  std::vector<SpectralMeasure> sources{SpectralMeasure(MeasureSpec::semicircle(1.0)),
                                       SpectralMeasure(MeasureSpec::power(0.5, 0.0, -1, 1)),
                                       SpectralMeasure(EmpiricalMeasure(q))};
  for (const auto& src : sources) {
    for (double t : {0.01, 0.3}) {
      FreeConvolutionState st(src, t);
      const double s = std::sqrt(t);
      const auto h = src.hull();
      std::uniform_real_distribution<double> ux(h.lo - 2 * s, h.hi + 2 * s);
      for (int i = 0; i < 40; ++i) {
        const double x = ux(rng);
        const double y = st.y_t(x);
        CHECK(y >= 0.0);
        CHECK(y <= s);
        if (x < h.lo - s || x > h.hi + s) CHECK(y == 0.0);
        if (y > 1e-12 * s) {
          CHECK(std::abs(st.H_map({x, y}).imag()) <= 1e-9);
          CHECK(src.inverse_square_moment(x, y) * t == doctest::Approx(1.0).epsilon(1e-10));
        }
        CHECK(std::abs(st.forward_map(x) - x) <= s * (1 + 1e-12));
        const double above = y + std::exponential_distribution<double>(3.0)(rng);
        CHECK(std::abs(src.stieltjes({x, std::max(above, 1e-300)})) <= (1.0 + 1e-12) / s);
      }
    }
  }
}

TEST_CASE("comparison inequality for quantile configurations") {
  for (const auto& mu : {MeasureSpec::uniform(-1, 1), MeasureSpec::semicircle(1.0)}) {
    for (std::size_t n : {20, 100}) {
      const EmpiricalMeasure e(quantiles(mu, n));
      const double kd = kolmogorov_distance(e, mu);
      SpectralMeasure a(mu), b(e);
      for (double eps : {0.1, 0.01})
        for (double x : {-0.5, 0.0, 0.3, 0.8}) {
          const cplx z{x, eps};
          CHECK(std::abs(a.stieltjes(z) - b.stieltjes(z)) <= pi * kd / eps);
        }
    }
  }
}

TEST_CASE("support of y_t grows with t") {
  const auto mu = MeasureSpec::piecewise({{-1.0, -0.3, {1.0 / 1.4}}, {0.3, 1.0, {1.0 / 1.4}}});
  FreeConvolutionState early(SpectralMeasure(mu), 0.01), late(SpectralMeasure(mu), 0.2);
  for (int k = 0; k <= 200; ++k) {
    const double x = -1.5 + 3.0 * k / 200.0;
    if (early.y_t(x) > 0) CHECK(late.y_t(x) > 0);
  }
  const EmpiricalMeasure e(quantiles(MeasureSpec::uniform(-1, 1), 30));
  FreeConvolutionState a(SpectralMeasure(e), 0.001), b(SpectralMeasure(e), 0.05);
  const auto sa = a.graph_support(), sb = b.graph_support();
  CHECK(sa.size() > sb.size());
  for (const auto& iv : sa) {
    bool covered = false;
    for (const auto& jv : sb) covered |= (jv.lo <= iv.lo && iv.hi <= jv.hi);
    CHECK(covered);
  }
}

TEST_CASE("graph support of a single point") {
  FreeConvolutionState st(SpectralMeasure(EmpiricalMeasure({0.0})), 1.0);
  const auto s = st.graph_support();
  REQUIRE(s.size() == 1);
  CHECK(s[0].lo == doctest::Approx(-1.0).epsilon(1e-13));
  CHECK(s[0].hi == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("window invariants and JSON") {
  FreeConvolutionState sc(SpectralMeasure(MeasureSpec::semicircle(1.0)), 1.0);
  const Window w = make_window(sc, 0.0, {-1, 0, 1});
  CHECK(w.c_t == doctest::Approx(sc.psi_t(w.x_star_t)).epsilon(1e-9));
  CHECK(w.to_json().at("c_t").get<double>() == w.c_t);
  FreeConvolutionState p2(SpectralMeasure(MeasureSpec::power(2.0, 0.0, -1, 1)), 0.2);
  CHECK_THROWS_AS(make_window(p2, 0.0, {0}), ValidationError);
}

TEST_CASE("saddle point examples") {
  Window w;
  w.x_star_t = 0.0;
  w.c_t = 1.0;
  auto one = make_configuration({Explicit{{0.0}}}, 1);
  const auto p = saddle_points(one, 1.0, w, 0.0, 0.0);
  CHECK(std::abs(p.z - cplx(0.0, 1.0)) < 1e-11);
  CHECK(p.z == p.w);

  const auto mu = MeasureSpec::uniform(-1, 1);
  auto cfg = make_configuration({QuantilesOf{mu}}, 50);
  FreeConvolutionState lim(SpectralMeasure(mu), 0.5);
  const Window bw = make_window(lim, 0.0, {});
  const auto s = saddle_points(cfg, 0.5, bw, 1.0, -0.5);
  CHECK(s.residual < 1e-9);
  CHECK(s.z.imag() > 0);

  const double delta = 0.3, t = 0.01 * delta * delta;
  auto gap = make_configuration(
      {GapInserted{std::make_shared<const Generator>(Generator{Equispaced{-1, 1}}), 0.0, delta}}, 200);
  FreeConvolutionState glim(SpectralMeasure(gap.measure), t);
  const Window ew = make_epsilon_window(glim, 0.0, delta / 10, {});
  const auto g = saddle_points(gap, t, ew, 0.5, -1.0);
  CHECK(g.z.imag() == 0.0);
  CHECK(g.w.imag() == 0.0);
}
