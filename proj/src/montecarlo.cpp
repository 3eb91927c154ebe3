#include "dbm/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "dbm/errors.hpp"
#include "dbm/io.hpp"
#include "dbm/parallel.hpp"

namespace dbm {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void check_times(std::span<const double> times) {
  if (times.empty()) throw ValidationError("time grid is empty");
  if (!(times.front() >= 0.0)) throw ValidationError("time grid must start at t >= 0");
  for (std::size_t j = 1; j < times.size(); ++j)
    if (!(times[j] > times[j - 1])) throw ValidationError("time grid must be strictly increasing");
}

}  // namespace

GueSampler::GueSampler(std::size_t n, std::uint64_t seed) : n_(n), seed_(seed) {
  if (n == 0) throw ValidationError("sampler dimension must be positive");
}

std::mt19937_64 GueSampler::stream(std::uint64_t sample_index) const {
  return std::mt19937_64(splitmix64(splitmix64(seed_) ^ splitmix64(~sample_index)));
}

Eigen::MatrixXcd GueSampler::draw(std::mt19937_64& rng) const {
  const auto n = Eigen::Index(n_);
  std::normal_distribution<double> diag(0.0, std::sqrt(1.0 / double(n_)));
  std::normal_distribution<double> off(0.0, std::sqrt(0.5 / double(n_)));
  Eigen::MatrixXcd h(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    h(i, i) = diag(rng);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double re = off(rng);
      const double im = off(rng);
      h(i, j) = {re, im};
      h(j, i) = {re, -im};
    }
  }
  return h;
}

Eigen::MatrixXcd GueSampler::sample(std::uint64_t sample_index) const {
  auto rng = stream(sample_index);
  return draw(rng);
}

EigenSolveReport eigenvalues(const Eigen::MatrixXcd& y) {
  if (y.rows() != y.cols() || y.rows() == 0) throw ValidationError("eigenvalues needs a non-empty square matrix");
  const double scale = std::max(1.0, y.cwiseAbs().maxCoeff());
  if ((y - y.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale) throw ValidationError("matrix is not Hermitian");
  // Householder tridiagonalization followed by implicit-shift QL
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(y);
  if (es.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver did not converge");
  EigenSolveReport r;
  const auto& v = es.eigenvectors();
  const auto& lam = es.eigenvalues();
  r.eigenvalues.assign(lam.data(), lam.data() + lam.size());
  for (Eigen::Index k = 0; k < lam.size(); ++k)
    r.residual = std::max(r.residual, (y * v.col(k) - lam(k) * v.col(k)).norm());
  const auto n = y.rows();
  r.orthogonality = (v.adjoint() * v - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();
  return r;
}

std::vector<double> sample_perturbed(const GueSampler& sampler, const InitialConfiguration& config, double t,
                                     std::uint64_t sample_index) {
  const auto a = config.measure.points();
  if (a.size() != sampler.n()) throw ValidationError("sampler dimension differs from the configuration size");
  if (!(t >= 0.0) || !std::isfinite(t)) throw ValidationError("sampling time must be finite and >= 0");
  if (t == 0.0) return {a.begin(), a.end()};
  Eigen::MatrixXcd y = std::sqrt(t) * sampler.sample(sample_index);
  for (std::size_t k = 0; k < a.size(); ++k) y(Eigen::Index(k), Eigen::Index(k)) += a[k];
  return eigenvalues(y).eigenvalues;
}

std::vector<std::vector<double>> sample_many(const GueSampler& sampler, const InitialConfiguration& config,
                                             double t, std::size_t count, std::size_t threads,
                                             std::uint64_t first_index) {
  std::vector<std::vector<double>> out(count);
  parallel_for(count, threads, [&](std::size_t i) { out[i] = sample_perturbed(sampler, config, t, first_index + i); });
  return out;
}

nlohmann::json Histogram::to_json() const {
  nlohmann::json bins = nlohmann::json::array();
  for (std::size_t b = 0; b + 1 < edges.size(); ++b) bins.push_back({edges[b], edges[b + 1]});
  return {{"bins", bins}, {"counts", counts}, {"stderr", stderr_}};
}

Histogram empirical_density(std::span<const std::vector<double>> samples, std::span<const double> edges) {
  if (samples.empty()) throw ValidationError("empirical density needs at least one sample");
  if (edges.size() < 2) throw ValidationError("bin grid needs at least two edges");
  for (std::size_t b = 1; b < edges.size(); ++b)
    if (!(edges[b] > edges[b - 1])) throw ValidationError("bin edges must be strictly increasing");
  const std::size_t nb = edges.size() - 1;
  Histogram h;
  h.edges.assign(edges.begin(), edges.end());
  h.counts.assign(nb, 0.0);
  std::vector<double> sum_sq(nb, 0.0), per(nb);
  std::size_t n = 0;
  for (const auto& s : samples) {
    n = std::max(n, s.size());
    std::fill(per.begin(), per.end(), 0.0);
    for (double x : s) {
      // bins are half-open [e_b, e_{b+1})
      const auto it = std::upper_bound(edges.begin(), edges.end(), x);
      if (it == edges.begin() || it == edges.end()) continue;
      per[std::size_t(it - edges.begin()) - 1] += 1.0;
    }
    for (std::size_t b = 0; b < nb; ++b) {
      h.counts[b] += per[b];
      sum_sq[b] += per[b] * per[b];
    }
  }
  const double m = double(samples.size());
  h.density.resize(nb);
  h.stderr_.resize(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    const double norm = double(n) * (edges[b + 1] - edges[b]);
    const double mean = h.counts[b] / m;
    const double var = m > 1 ? std::max(0.0, (sum_sq[b] - m * mean * mean) / (m - 1)) : 0.0;
    h.density[b] = mean / norm;
    h.stderr_[b] = std::sqrt(var / m) / norm;
  }
  return h;
}

Frequency empirical_gap_frequency(std::span<const std::vector<double>> samples, const Interval& interval) {
  if (samples.empty()) throw ValidationError("gap frequency needs at least one sample");
  std::size_t empty = 0;
  for (const auto& s : samples) {
    const bool hit = std::any_of(s.begin(), s.end(), [&](double x) { return interval.contains(x); });
    if (!hit) ++empty;
  }
  const double m = double(samples.size());
  const double p = double(empty) / m;
  return {p, std::sqrt(p * (1.0 - p) / m)};
}

Eigen::MatrixXd dbm_paths(const GueSampler& sampler, const InitialConfiguration& config,
                          std::span<const double> times, std::uint64_t sample_index) {
  check_times(times);
  const auto a = config.measure.points();
  const std::size_t n = a.size();
  if (n != sampler.n()) throw ValidationError("sampler dimension differs from the configuration size");
  Eigen::MatrixXd out(Eigen::Index(times.size()), Eigen::Index(n));
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(Eigen::Index(n), Eigen::Index(n));
  for (std::size_t k = 0; k < n; ++k) y(Eigen::Index(k), Eigen::Index(k)) = a[k];
  auto rng = sampler.stream(sample_index);
  double prev = 0.0;
  for (std::size_t j = 0; j < times.size(); ++j) {
    const double dt = times[j] - prev;
    if (dt > 0.0) y += std::sqrt(dt) * sampler.draw(rng);
    prev = times[j];
    if (times[j] == 0.0) {
      for (std::size_t k = 0; k < n; ++k) out(Eigen::Index(j), Eigen::Index(k)) = a[k];
      continue;
    }
    const auto ev = eigenvalues(y).eigenvalues;
    for (std::size_t k = 0; k < n; ++k) out(Eigen::Index(j), Eigen::Index(k)) = ev[k];
  }
  return out;
}

void write_paths_csv(std::ostream& out, std::span<const double> times, const Eigen::MatrixXd& paths) {
  if (paths.rows() != Eigen::Index(times.size())) throw ValidationError("path matrix and time grid disagree");
  out << "t";
  for (Eigen::Index k = 0; k < paths.cols(); ++k) out << ",lambda_" << (k + 1);
  out << '\n';
  for (std::size_t j = 0; j < times.size(); ++j) {
    out << fmt17(times[j]);
    for (Eigen::Index k = 0; k < paths.cols(); ++k) out << ',' << fmt17(paths(Eigen::Index(j), k));
    out << '\n';
  }
}

}  // namespace dbm
