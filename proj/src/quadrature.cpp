#include "dbm/quadrature.hpp"

#include <map>

#include <Eigen/Eigenvalues>
#include <memory>
#include <mutex>

namespace dbm::quad {

namespace {

Rule make_legendre(std::size_t p) {
  Rule r;
  r.nodes.resize(p);
  r.weights.resize(p);
  for (std::size_t i = 0; i < (p + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (p + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (std::size_t k = 1; k <= p; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p2) / k;
      }
      dp = p * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute the derivative at the converged node
    double p0 = 1.0, p1 = 0.0;
    for (std::size_t k = 1; k <= p; ++k) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p2) / k;
    }
    dp = p * (x * p0 - p1) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[i] = -x;
    r.nodes[p - 1 - i] = x;
    r.weights[i] = w;
    r.weights[p - 1 - i] = w;
  }
  return r;
}

// Golub-Welsch eigenvalues as starting points, then Newton on the
// orthonormal physicists' recurrence (weight e^{-x^2}); rescaled to e^{-tau^2/2}.
Rule make_hermite(std::size_t p) {
  if (p == 0 || p > 512) throw ValidationError("Gauss-Hermite order must be in [1, 512]");
  const double pim4 = std::pow(std::numbers::pi, -0.25);
  std::vector<double> start(p);
  if (p == 1) {
    start[0] = 0.0;
  } else {
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(Eigen::Index(p));
    Eigen::VectorXd off(Eigen::Index(p - 1));
    for (std::size_t k = 1; k < p; ++k) off[Eigen::Index(k - 1)] = std::sqrt(0.5 * double(k));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
    for (std::size_t i = 0; i < p; ++i) start[i] = es.eigenvalues()[Eigen::Index(i)];
  }
  auto eval = [&](double z, double& pp) {
    double p1 = pim4, p2 = 0.0;
    for (std::size_t j = 1; j <= p; ++j) {
      const double p3 = p2;
      p2 = p1;
      p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
    }
    pp = std::sqrt(2.0 * p) * p2;
    return p1;
  };
  Rule r;
  r.nodes.resize(p);
  r.weights.resize(p);
  for (std::size_t i = 0; i < (p + 1) / 2; ++i) {
    // polish the non-positive half and mirror
    double z = -std::abs(start[i]);
    double pp = 0.0;
    for (int it = 0; it < 20; ++it) {
      const double dz = eval(z, pp) / pp;
      z -= dz;
      if (std::abs(dz) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    eval(z, pp);
    const double w = std::numbers::sqrt2 * 2.0 / (pp * pp);
    r.nodes[i] = std::numbers::sqrt2 * z;
    r.nodes[p - 1 - i] = -std::numbers::sqrt2 * z;
    r.weights[i] = r.weights[p - 1 - i] = w;
  }
  if (p % 2 == 1) r.nodes[p / 2] = 0.0;
  return r;
}

template <Rule (*Make)(std::size_t)>
const Rule& cached(std::size_t p) {
  static std::mutex mu;
  static std::map<std::size_t, std::unique_ptr<Rule>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[p];
  if (!slot) slot = std::make_unique<Rule>(Make(p));
  return *slot;
}

}  // namespace

const Rule& gauss_legendre(std::size_t p) {
  if (p == 0) throw ValidationError("Gauss-Legendre order must be positive");
  return cached<make_legendre>(p);
}

const Rule& gauss_hermite(std::size_t p) { return cached<make_hermite>(p); }

}  // namespace dbm::quad
