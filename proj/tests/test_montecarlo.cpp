#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "dbm/errors.hpp"
#include "dbm/kernel.hpp"
#include "dbm/montecarlo.hpp"
#include "dbm/quadrature.hpp"

using namespace dbm;

namespace {

InitialConfiguration points(std::vector<double> a) {
  const std::size_t n = a.size();
  return make_configuration(Generator{Explicit{std::move(a)}}, n);
}

}  // namespace

TEST_CASE("eigenvalue examples") {
  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(3, 3);
  d(0, 0) = 1, d(1, 1) = 2, d(2, 2) = 3;
  auto r = eigenvalues(d);
  CHECK(r.eigenvalues == std::vector<double>{1, 2, 3});
  Eigen::MatrixXcd s(2, 2);
  s << 0, 1, 1, 0;
  r = eigenvalues(s);
  CHECK(r.eigenvalues[0] == doctest::Approx(-1).epsilon(1e-15));
  CHECK(r.eigenvalues[1] == doctest::Approx(1).epsilon(1e-15));

  const auto h = GueSampler(50, 3).sample(0);
  r = eigenvalues(h);
  double sum = 0;
  for (double v : r.eigenvalues) sum += v;
  CHECK(std::abs(sum - h.trace().real()) <= 1e-10 * std::max(1.0, std::abs(sum)));
  CHECK(r.residual <= 1e-10 * h.norm());
  CHECK(r.orthogonality <= 1e-12);
  CHECK(std::is_sorted(r.eigenvalues.begin(), r.eigenvalues.end()));

  Eigen::MatrixXcd bad(2, 2);
  bad << 0, 1, 2, 0;
  CHECK_THROWS_AS(eigenvalues(bad), ValidationError);
}

TEST_CASE("entry distribution") {
  const std::size_t n = 3, draws = 20000;
  GueSampler g(n, 17);
  double d2 = 0, re2 = 0, im2 = 0, reim = 0, dmean = 0, remean = 0;
  for (std::size_t s = 0; s < draws; ++s) {
    const auto h = g.sample(s);
    CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() == 0.0);
    dmean += h(1, 1).real();
    d2 += h(1, 1).real() * h(1, 1).real();
    remean += h(0, 2).real();
    re2 += h(0, 2).real() * h(0, 2).real();
    im2 += h(0, 2).imag() * h(0, 2).imag();
    reim += h(0, 2).real() * h(0, 2).imag();
  }
  const double m = draws;
  const double vd = 1.0 / n, vo = 0.5 / n;
  // sample variance of a Gaussian variance estimate: sigma^2 sqrt(2/m)
  CHECK(std::abs(d2 / m - vd) <= 3 * vd * std::sqrt(2 / m));
  CHECK(std::abs(re2 / m - vo) <= 3 * vo * std::sqrt(2 / m));
  CHECK(std::abs(im2 / m - vo) <= 3 * vo * std::sqrt(2 / m));
  CHECK(std::abs(reim / m) <= 3 * vo / std::sqrt(m));
  CHECK(std::abs(dmean / m) <= 3 * std::sqrt(vd / m));
  CHECK(std::abs(remean / m) <= 3 * std::sqrt(vo / m));
}

TEST_CASE("perturbed samples") {
  auto cfg = points({-1, 0.25, 2});
  GueSampler g(3, 1);
  CHECK(sample_perturbed(g, cfg, 0.0, 5) == std::vector<double>{-1, 0.25, 2});

  // n = 1: a standard normal
  GueSampler one(1, 99);
  auto c1 = points({0.0});
  double s2 = 0;
  const std::size_t m = 100000;
  for (std::size_t i = 0; i < m; ++i) {
    const double x = sample_perturbed(one, c1, 1.0, i)[0];
    s2 += x * x;
  }
  CHECK(s2 / m == doctest::Approx(1.0).epsilon(0.02));

  // zero matrix: semicircle law
  auto zero = points(std::vector<double>(100, 0.0));
  const auto ev = sample_perturbed(GueSampler(100, 4), zero, 1.0, 0);
  CHECK(kolmogorov_distance(EmpiricalMeasure(ev), MeasureSpec::semicircle(1.0)) <= 0.05);

  CHECK_THROWS_AS(sample_perturbed(g, cfg, -0.1, 0), ValidationError);
  CHECK_THROWS_AS(sample_perturbed(GueSampler(4, 1), cfg, 0.1, 0), ValidationError);
}

TEST_CASE("reproducible for any thread count") {
  auto cfg = make_configuration(Generator{QuantilesOf{MeasureSpec::uniform(-1, 1)}}, 10);
  GueSampler g(10, 12345);
  const auto a = sample_many(g, cfg, 0.5, 24, 1);
  const auto b = sample_many(g, cfg, 0.5, 24, 4);
  CHECK(a == b);
  CHECK(sample_perturbed(g, cfg, 0.5, 7) == a[7]);
  CHECK(a[3] != a[4]);
  CHECK(sample_perturbed(GueSampler(10, 12346), cfg, 0.5, 7) != a[7]);
}

TEST_CASE("gap frequency and histogram") {
  auto base = std::make_shared<const Generator>(Generator{Equispaced{-1, 1}});
  auto cfg = make_configuration(Generator{GapInserted{base, 0.0, 0.3}}, 40);
  const auto still = sample_many(GueSampler(40, 1), cfg, 0.0, 10);
  const auto f = empirical_gap_frequency(still, {-0.03, 0.03});
  CHECK(f.value == 1.0);
  CHECK(f.stderr_ == 0.0);

  std::vector<std::vector<double>> toy{{0.1, 0.6}, {0.2, 0.3}, {0.9, 1.5}};
  const std::vector<double> edges{0.0, 0.5, 1.0};
  const auto h = empirical_density(toy, edges);
  CHECK(h.counts == std::vector<double>{3, 2});
  CHECK(h.density[0] == doctest::Approx(3.0 / (3 * 2 * 0.5)));
  // per-sample counts 1, 2, 0: sample sd 1
  CHECK(h.stderr_[0] == doctest::Approx(1.0 / std::sqrt(3.0) / (2 * 0.5)));
  const auto j = h.to_json();
  CHECK(j["bins"].size() == 2);
  CHECK(j.contains("counts"));
  CHECK(j.contains("stderr"));
  CHECK_THROWS_AS(empirical_density(toy, std::vector<double>{1.0, 0.0}), ValidationError);
}

TEST_CASE("one and two point functions against the kernel") {
  const std::size_t n = 10, m = 20000;
  const double t = 0.3;
  auto cfg = make_configuration(Generator{QuantilesOf{MeasureSpec::uniform(-1, 1)}}, n);
  KernelEvaluator ev(cfg, t);
  const auto samples = sample_many(GueSampler(n, 77), cfg, t, m);

  const std::vector<double> edges{-0.5, -0.4, 0.0, 0.1, 0.6, 0.7};
  const auto h = empirical_density(samples, edges);
  for (std::size_t b = 0; b + 1 < edges.size(); b += 2) {
    const double w = edges[b + 1] - edges[b];
    const double expect =
        quad::gl_integrate([&](double x) { return kernel_lagrange(ev, x, x); }, edges[b], edges[b + 1], 16) / (n * w);
    CHECK(std::abs(h.density[b] - expect) <= 3 * h.stderr_[b]);
  }

  // pairs with one eigenvalue in each of two disjoint bins
  const Interval b1{-0.3, -0.1}, b2{0.05, 0.25};
  double sum = 0, sum2 = 0;
  for (const auto& s : samples) {
    double c1 = 0, c2 = 0;
    for (double x : s) c1 += b1.contains(x), c2 += b2.contains(x);
    sum += c1 * c2;
    sum2 += c1 * c2 * c1 * c2;
  }
  const double mean = sum / m, se = std::sqrt((sum2 / m - mean * mean) / (m - 1));
  const double expect = quad::gl_integrate(
      [&](double x) {
        return quad::gl_integrate([&](double y) { return correlation_function(ev, std::vector<double>{x, y}); },
                                  b2.lo, b2.hi, 12);
      },
      b1.lo, b1.hi, 12);
  CHECK(std::abs(mean - expect) <= 3 * se);
}

TEST_CASE("Dyson paths") {
  auto cfg = points({-1.0, -0.2, 0.4, 1.1, 1.5});
  GueSampler g(5, 8);
  const std::vector<double> t0{0.0};
  const auto p0 = dbm_paths(g, cfg, t0, 0);
  for (Eigen::Index k = 0; k < 5; ++k) CHECK(p0(0, k) == cfg.measure.points()[std::size_t(k)]);

  const std::vector<double> times{0.0, 0.1, 0.25, 0.5};
  const auto p = dbm_paths(g, cfg, times, 3);
  CHECK(p.rows() == 4);
  CHECK(dbm_paths(g, cfg, times, 3) == p);

  // trace of Y(t) has variance t
  const std::size_t m = 8000;
  double s = 0, s2 = 0;
  const double a_sum = 1.8;
  for (std::size_t i = 0; i < m; ++i) {
    const double tr = dbm_paths(g, cfg, times, 100 + i).row(3).sum() - a_sum;
    s += tr;
    s2 += tr * tr;
  }
  const double var = s2 / m - (s / m) * (s / m);
  CHECK(var == doctest::Approx(0.5).epsilon(0.05));

  std::ostringstream os;
  write_paths_csv(os, times, p);
  CHECK(os.str().rfind("t,lambda_1,lambda_2,lambda_3,lambda_4,lambda_5\n0,", 0) == 0);
  const std::vector<double> bad{0.1, 0.1};
  CHECK_THROWS_AS(dbm_paths(g, cfg, bad, 0), ValidationError);
}
