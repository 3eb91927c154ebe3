#pragma once

#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "dbm/contour.hpp"
#include "dbm/kernel.hpp"

namespace dbm {

// Bulk frame x = x*_t + u h. The kernel is gauge-fixed with x0 = x_n(u) = Re z_n(u).
struct RescaledKernelFrame {
  Window window;
  KernelEvaluator evaluator;
  std::shared_ptr<const DoubleContourPhase> phase;

  double step() const { return window.step(evaluator.n()); }
  // {n, t, x_star, x_star_t, c_t, x0, quadrature_M, eps_split_applied}; x0 is x_n(0)
  nlohmann::json to_json() const;
};

RescaledKernelFrame make_frame(const KernelEvaluator& ev, const Window& window);

double rescaled_kernel(const RescaledKernelFrame& frame, double u, double v);
std::vector<DoubleContourValue> rescaled_kernel_row(const RescaledKernelFrame& frame, double u,
                                                    std::span<const double> vs);
// Same quantity through the Lagrange form (reference for moderate n).
double rescaled_kernel_lagrange(const RescaledKernelFrame& frame, double u, double v);

struct KernelGridPoint {
  double u = 0.0;
  double v = 0.0;
  double value = 0.0;
};

// header "u,v,value", 17 significant digits
void write_kernel_csv(std::ostream& out, std::span<const KernelGridPoint> grid);

}  // namespace dbm
