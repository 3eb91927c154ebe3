#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "dbm/kernel.hpp"
#include "dbm/measures.hpp"

namespace dbm {

// Fills K(x_i, x_j) for the given nodes. Any fixed gauge will do: the determinant
// only sees the kernel up to diagonal conjugation.
using KernelMatrixFn = std::function<Eigen::MatrixXd(std::span<const double> nodes)>;

KernelMatrixFn sine_kernel_matrix();
// Lagrange rows, switching the whole matrix to the double-contour form when the
// Lagrange sum cancels beyond extended precision.
KernelMatrixFn exact_kernel_matrix(const KernelEvaluator& ev, std::size_t threads = 1);

struct GapProblem {
  KernelMatrixFn kernel;
  Interval interval;
  std::size_t m = 8;  // starting node count, doubled up to 512
};

struct GapResult {
  Interval interval;
  std::size_t m_final = 0;
  double raw_det = 0.0;
  double probability = 0.0;  // raw_det clamped to [0, 1]
  std::vector<std::pair<std::size_t, double>> sequence;

  nlohmann::json to_json() const;  // {interval, m_final, raw_det, probability}
};

GapResult gap_probability(const GapProblem& p);

// Sine-kernel gap probability of an interval of length s at unit density.
double sine_gap(double s);

}  // namespace dbm
