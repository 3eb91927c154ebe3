#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "dbm/measures.hpp"

namespace dbm {

// GUE sampler with one independent stream per sample index:
// H_ii ~ N(0, 1/n), Re H_ij, Im H_ij ~ N(0, 1/(2n)) for i < j.
class GueSampler {
 public:
  GueSampler(std::size_t n, std::uint64_t seed);

  std::size_t n() const { return n_; }
  std::uint64_t seed() const { return seed_; }

  std::mt19937_64 stream(std::uint64_t sample_index) const;
  Eigen::MatrixXcd draw(std::mt19937_64& rng) const;
  Eigen::MatrixXcd sample(std::uint64_t sample_index) const;

 private:
  std::size_t n_;
  std::uint64_t seed_;
};

struct EigenSolveReport {
  std::vector<double> eigenvalues;  // ascending
  double residual = 0.0;            // max_k |Y v_k - lambda_k v_k|
  double orthogonality = 0.0;       // max |V* V - I|
};

EigenSolveReport eigenvalues(const Eigen::MatrixXcd& y);

// Sorted eigenvalues of diag(a) + sqrt(t) H for the given sample index.
std::vector<double> sample_perturbed(const GueSampler& sampler, const InitialConfiguration& config, double t,
                                     std::uint64_t sample_index);
// Samples first_index .. first_index + count - 1; results do not depend on the thread count.
std::vector<std::vector<double>> sample_many(const GueSampler& sampler, const InitialConfiguration& config,
                                             double t, std::size_t count, std::size_t threads = 1,
                                             std::uint64_t first_index = 0);

struct Histogram {
  std::vector<double> edges;
  std::vector<double> counts;   // total eigenvalues per bin over all samples
  std::vector<double> density;  // counts / (samples * n * width): estimates rho_1 / n
  std::vector<double> stderr_;  // standard error of density

  nlohmann::json to_json() const;  // {bins, counts, stderr}
};

// Standard errors from the spread of per-sample bin counts; for bins holding at most
// one eigenvalue per sample this is the binomial error.
Histogram empirical_density(std::span<const std::vector<double>> samples, std::span<const double> edges);

struct Frequency {
  double value = 0.0;
  double stderr_ = 0.0;
};

// Fraction of samples with no eigenvalue in the closed interval, binomial standard error.
Frequency empirical_gap_frequency(std::span<const std::vector<double>> samples, const Interval& interval);

// Row j holds the sorted spectrum at times[j]; Y(t) = diag(a) + B_t / sqrt(n) through
// independent GUE increments, so consecutive rows are coupled.
Eigen::MatrixXd dbm_paths(const GueSampler& sampler, const InitialConfiguration& config,
                          std::span<const double> times, std::uint64_t sample_index);

// header "t,lambda_1,...,lambda_n"
void write_paths_csv(std::ostream& out, std::span<const double> times, const Eigen::MatrixXd& paths);

}  // namespace dbm
