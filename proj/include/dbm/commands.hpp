#pragma once

#include <cstddef>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include "dbm/config.hpp"
#include "dbm/fredholm.hpp"
#include "dbm/montecarlo.hpp"
#include "dbm/rescaled.hpp"

namespace dbm {

struct CommandOptions {
  std::filesystem::path out;  // created if missing
  std::size_t threads = 1;
};

struct DensityResult {
  double t_cr = 0.0;
  std::vector<double> t, x, psi;  // one entry per (t, x) row
};
// density.csv "t,x,psi_t", summary.json {t_cr, x_star}
DensityResult cmd_density(const RunConfig& c, const CommandOptions& o);

struct KernelResult {
  std::vector<DoubleContourValue> values;  // row-major over (u, v)
  std::vector<double> grid;
  double sup_residual = 0.0;  // max |value - sine|
  double sup_abs = 0.0;
  double max_abs_A = 0.0;
};
// kernel.csv "u,v,value", kernel_terms.csv "u,v,value,I_n,A_n,s", frame.json, summary.json
KernelResult cmd_kernel(const RunConfig& c, const CommandOptions& o);

struct SweepRow {
  std::size_t n = 0;
  std::string schedule;
  double t = 0.0;
  double D = 0.0;
  double seconds = 0.0;  // reported on stderr only, so the files stay reproducible
};
struct SweepResult {
  std::vector<SweepRow> rows;
};
// sweep.csv "n,schedule,t,D,D_human"
SweepResult cmd_sweep(const RunConfig& c, const CommandOptions& o);

struct GapCommandResult {
  GapResult fredholm;
  Frequency monte_carlo;
  std::size_t samples = 0;
};
// gap.json {fredholm: {...}, monte_carlo: {frequency, stderr, samples}}
GapCommandResult cmd_gap(const RunConfig& c, const CommandOptions& o);

// paths_<k>.csv "t,lambda_1,...,lambda_n" for k = 0 .. samples-1
std::vector<Eigen::MatrixXd> cmd_paths(const RunConfig& c, const CommandOptions& o);

// sup over the grid of |rescaled kernel - sine kernel|
double sup_distance(const RescaledKernelFrame& frame, std::size_t threads = 1);

// CLI exit status for an exception escaping a command: 2 for invalid input (including
// malformed JSON and unwritable output), 3 for numerical failure. Unknown exceptions rethrow.
struct ExitStatus {
  int code = 0;
  std::string message;  // one line for stderr
};
ExitStatus classify_error(std::exception_ptr e);

}  // namespace dbm
