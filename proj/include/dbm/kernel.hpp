#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "dbm/freeconv.hpp"
#include "dbm/measures.hpp"

namespace dbm {

// mantissa * exp(log_scale); keeps exponentially small or large kernel values.
struct ScaledValue {
  double mantissa = 0.0;
  double log_scale = 0.0;
  double value() const { return mantissa == 0.0 ? 0.0 : mantissa * std::exp(log_scale); }
  // value * exp(extra), fused so that neither factor overflows on its own
  double value_times_exp(double extra) const { return mantissa == 0.0 ? 0.0 : mantissa * std::exp(log_scale + extra); }
};

struct KernelOptions {
  std::size_t quadrature_M = 64;  // Gauss-Hermite nodes in the first pass; even
  double tolerance = 1e-8;        // relative change allowed under M -> 2M
  bool split_duplicates = true;
};

struct LagrangeDiagnostics {
  std::size_t M = 0;
  bool extended_precision = false;
  double condition = 0.0;  // sum of |terms| over |result|, worst over the row
};

// Exact finite-n kernel of M + sqrt(t) H for M = diag(a). Immutable; cheap to copy.
class KernelEvaluator {
 public:
  KernelEvaluator(InitialConfiguration config, double t, double x0 = 0.0, KernelOptions options = {});

  const InitialConfiguration& config() const;
  std::span<const double> points() const;  // after duplicate splitting
  std::size_t n() const;
  double t() const;
  double x0() const;
  const KernelOptions& options() const;
  double eps_split() const;  // splitting offset applied to duplicates, 0 if none
  KernelEvaluator with_gauge(double x0) const;

  // Lagrange-form kernel K~(x, y), gauge free.
  ScaledValue ktilde(double x, double y, LagrangeDiagnostics* diag = nullptr) const;
  std::vector<ScaledValue> ktilde_row(double x, std::span<const double> ys, LagrangeDiagnostics* diag = nullptr) const;
  // p^_k(x) for k = 1..n (index k-1).
  std::vector<double> p_hat(double x, LagrangeDiagnostics* diag = nullptr) const;

  struct Impl;

 private:
  std::shared_ptr<const Impl> impl_;
};

double kernel_lagrange(const KernelEvaluator& ev, double x, double y);
// log of f(y)/f(x) with f(x) = exp((n/2t)(x^2 - 2 x x0)).
double gauge_exponent(const KernelEvaluator& ev, double x, double y);
double gauge_to_paper(const KernelEvaluator& ev, double x, double y, double ktilde);
// K(x, y) in the evaluator's gauge, with the gauge factor fused into the exponent.
double kernel_gauged(const KernelEvaluator& ev, double x, double y);

// j is 1-based.
double lagrange_p_hat(const KernelEvaluator& ev, std::size_t j, double x);
// max_{j,k} |int p^_j q^_k - delta_jk| by 128-node Gauss-Hermite centred at a_k.
double biorthogonality_check(const KernelEvaluator& ev);

// det[K(x_i, x_j)]
double correlation_function(const KernelEvaluator& ev, std::span<const double> points);

double sine_kernel(double u, double v);

}  // namespace dbm
