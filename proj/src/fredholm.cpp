#include "dbm/fredholm.hpp"

#include <cmath>
#include <mutex>
#include <sstream>

#include "dbm/contour.hpp"
#include "dbm/errors.hpp"
#include "dbm/io.hpp"
#include "dbm/parallel.hpp"
#include "dbm/quadrature.hpp"

namespace dbm {

namespace {

constexpr std::size_t kMaxNodes = 512;
constexpr double kDoublingTol = 1e-8;

// Osborne balancing: diagonal similarity equalizing off-diagonal row and column norms.
// Scale factors are powers of two, so the similarity itself is exact.
void balance(Eigen::MatrixXd& b) {
  const Eigen::Index m = b.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    bool changed = false;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double r = b.row(i).cwiseAbs().sum() - std::abs(b(i, i));
      const double c = b.col(i).cwiseAbs().sum() - std::abs(b(i, i));
      if (r == 0.0 || c == 0.0) continue;
      int e = 0;
      std::frexp(std::sqrt(c / r), &e);
      if (e == 0 || e == 1) continue;  // already within a factor of two
      const double f = std::ldexp(1.0, e - 1);
      b.row(i) *= f;
      b.col(i) /= f;
      changed = true;
    }
    if (!changed) break;
  }
}

double nystrom_det(const KernelMatrixFn& kernel, const Interval& iv, std::size_t m) {
  const auto& gl = quad::gauss_legendre(m);
  const double c = 0.5 * (iv.lo + iv.hi), h = 0.5 * (iv.hi - iv.lo);
  std::vector<double> x(m), sw(m);
  for (std::size_t i = 0; i < m; ++i) {
    x[i] = c + h * gl.nodes[i];
    sw[i] = std::sqrt(h * gl.weights[i]);
  }
  Eigen::MatrixXd b = kernel(x);
  if (b.rows() != Eigen::Index(m) || b.cols() != Eigen::Index(m))
    throw ValidationError("kernel matrix has the wrong shape");
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) b(Eigen::Index(i), Eigen::Index(j)) *= sw[i] * sw[j];
  if (!b.allFinite()) throw NumericalError("kernel matrix has non-finite entries on the interval");
  balance(b);
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(Eigen::Index(m), Eigen::Index(m)) - b;
  return a.partialPivLu().determinant();
}

}  // namespace

KernelMatrixFn sine_kernel_matrix() {
  return [](std::span<const double> x) {
    const auto m = Eigen::Index(x.size());
    Eigen::MatrixXd k(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < m; ++j) k(i, j) = sine_kernel(x[std::size_t(i)], x[std::size_t(j)]);
    return k;
  };
}

KernelMatrixFn exact_kernel_matrix(const KernelEvaluator& ev, std::size_t threads) {
  struct State {
    std::mutex mu;
    std::shared_ptr<const DoubleContourPhase> phase;
  };
  auto state = std::make_shared<State>();
  return [ev, threads, state](std::span<const double> x) {
    const std::size_t m = x.size();
    Eigen::MatrixXd k(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    auto fill = [&](std::size_t i, const std::vector<ScaledValue>& row) {
      for (std::size_t j = 0; j < m; ++j) k(Eigen::Index(i), Eigen::Index(j)) = row[j].value();
    };
    try {
      parallel_for(m, threads, [&](std::size_t i) { fill(i, ev.ktilde_row(x[i], x)); });
    } catch (const PrecisionExhausted&) {
      std::shared_ptr<const DoubleContourPhase> phase;
      {
        std::lock_guard lock(state->mu);
        if (!state->phase) state->phase = std::make_shared<const DoubleContourPhase>(ev);
        phase = state->phase;
      }
      // one gauge for the whole matrix, centred on the nodes
      const double x0 = 0.5 * (x.front() + x.back());
      parallel_for(m, threads, [&](std::size_t i) { fill(i, phase->kernel_row(x[i], x, x0, x[i])); });
    }
    return k;
  };
}

nlohmann::json GapResult::to_json() const {
  return {{"interval", {interval.lo, interval.hi}},
          {"m_final", m_final},
          {"raw_det", raw_det},
          {"probability", probability}};
}

GapResult gap_probability(const GapProblem& p) {
  if (!p.kernel) throw ValidationError("gap problem needs a kernel");
  if (!(std::isfinite(p.interval.lo) && std::isfinite(p.interval.hi)) || !(p.interval.lo <= p.interval.hi))
    throw ValidationError("gap interval must satisfy a <= b");
  if (p.m < 8) throw ValidationError("Nystrom node count must be at least 8");
  GapResult r;
  r.interval = p.interval;
  if (p.interval.lo == p.interval.hi) {
    r.m_final = 0;
    r.raw_det = r.probability = 1.0;
    return r;
  }
  std::size_t m = p.m;
  double prev = nystrom_det(p.kernel, p.interval, m);
  r.sequence.emplace_back(m, prev);
  for (;;) {
    if (2 * m > kMaxNodes) {
      std::ostringstream os;
      os << "gap probability did not converge by m = " << kMaxNodes << ":";
      for (const auto& [mm, d] : r.sequence) os << " m=" << mm << " det=" << fmt17(d);
      throw NumericalError(os.str());
    }
    m *= 2;
    const double cur = nystrom_det(p.kernel, p.interval, m);
    r.sequence.emplace_back(m, cur);
    if (std::abs(cur - prev) <= kDoublingTol) {
      r.m_final = m;
      r.raw_det = cur;
      r.probability = std::clamp(cur, 0.0, 1.0);
      return r;
    }
    prev = cur;
  }
}

double sine_gap(double s) {
  if (!(s >= 0.0) || !std::isfinite(s)) throw ValidationError("sine_gap needs a finite length s >= 0");
  return gap_probability({sine_kernel_matrix(), {0.0, s}}).raw_det;
}

}  // namespace dbm
