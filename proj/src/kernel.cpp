#include <cmath>
#include <numbers>
#include <ostream>

#include <Eigen/LU>

#include "dbm/errors.hpp"
#include "dbm/io.hpp"
#include "dbm/kernel.hpp"
#include "dbm/rescaled.hpp"

namespace dbm {

double sine_kernel(double u, double v) {
  if (u == v) return 1.0;
  const double d = std::numbers::pi * (u - v);
  return std::sin(d) / d;
}

double correlation_function(const KernelEvaluator& ev, std::span<const double> points) {
  const std::size_t k = points.size();
  if (k < 1 || k > ev.n()) throw ValidationError("correlation function order must be in [1, n]");
  Eigen::MatrixXd m(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto row = ev.ktilde_row(points[i], points);
    for (std::size_t j = 0; j < k; ++j) m(Eigen::Index(i), Eigen::Index(j)) = row[j].value();
  }
  if (k == 1) return m(0, 0);
  return m.partialPivLu().determinant();
}

RescaledKernelFrame make_frame(const KernelEvaluator& ev, const Window& window) {
  RescaledKernelFrame f{window, ev, std::make_shared<const DoubleContourPhase>(ev)};
  if (!(window.step(ev.n()) > 0.0)) throw ValidationError("rescaled frame needs a positive step");
  return f;
}

nlohmann::json RescaledKernelFrame::to_json() const {
  const std::size_t n = evaluator.n();
  const double x0 = phase->finite().inverse_map(window.position(n, 0.0)).real();
  nlohmann::json j{{"n", n},
                   {"t", evaluator.t()},
                   {"x_star", window.x_star},
                   {"x_star_t", window.x_star_t},
                   {"c_t", window.c_t},
                   {"x0", x0},
                   {"quadrature_M", evaluator.options().quadrature_M},
                   {"eps_split_applied", evaluator.eps_split()}};
  if (window.scaling == WindowScaling::epsilon) j["epsilon"] = window.epsilon;
  return j;
}

std::vector<DoubleContourValue> rescaled_kernel_row(const RescaledKernelFrame& frame, double u,
                                                    std::span<const double> vs) {
  return kernel_double_contour_row(frame.evaluator, *frame.phase, frame.window, u, vs);
}

double rescaled_kernel(const RescaledKernelFrame& frame, double u, double v) {
  return kernel_double_contour(frame.evaluator, *frame.phase, frame.window, u, v).value;
}

double rescaled_kernel_lagrange(const RescaledKernelFrame& frame, double u, double v) {
  const std::size_t n = frame.evaluator.n();
  const double x = frame.window.position(n, u), y = frame.window.position(n, v);
  const double xn = frame.phase->finite().inverse_map(x).real();
  const KernelEvaluator ev = frame.evaluator.with_gauge(xn);
  return frame.step() * kernel_gauged(ev, x, y);
}

void write_kernel_csv(std::ostream& out, std::span<const KernelGridPoint> grid) {
  out << "u,v,value\n";
  for (const auto& p : grid) out << fmt17(p.u) << ',' << fmt17(p.v) << ',' << fmt17(p.value) << '\n';
}

}  // namespace dbm
