#include "dbm/commands.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>

#include "dbm/errors.hpp"
#include "dbm/freeconv.hpp"
#include "dbm/io.hpp"
#include "dbm/parallel.hpp"

namespace dbm {

using json = nlohmann::json;

namespace {

std::filesystem::path prepare(const RunConfig& c, const CommandOptions& o) {
  const std::filesystem::path dir = o.out.empty() ? std::filesystem::path(c.output_dir) : o.out;
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "config.json") << to_json(c).dump(2) << '\n';
  return dir;
}

void write_json(const std::filesystem::path& p, const json& j) { std::ofstream(p) << j.dump(2) << '\n'; }

double single_time(const RunConfig& c) {
  if (c.t.size() != 1) throw ValidationError("this command needs exactly one time t");
  if (!(c.t.front() > 0.0)) throw ValidationError("t must be positive");
  return c.t.front();
}

KernelOptions kernel_options(const RunConfig& c) {
  KernelOptions k;
  k.quadrature_M = c.quadrature.M;
  k.tolerance = c.quadrature.tolerance;
  return k;
}

// mu for the window: the configured limit measure, else the configuration itself
SpectralMeasure window_measure(const RunConfig& c, const InitialConfiguration& cfg) {
  if (auto mu = c.limit_measure()) return SpectralMeasure(*mu);
  return SpectralMeasure(cfg.measure);
}

Window build_window(const RunConfig& c, const FreeConvolutionState& limit) {
  if (c.window.scaling == "epsilon") return make_epsilon_window(limit, c.window.x_star, c.window.epsilon, c.window.grid());
  return make_window(limit, c.window.x_star, c.window.grid());
}

std::vector<std::vector<DoubleContourValue>> kernel_grid(const RescaledKernelFrame& f, std::size_t threads) {
  const auto& g = f.window.u_grid;
  std::vector<std::vector<DoubleContourValue>> rows(g.size());
  parallel_for(g.size(), threads, [&](std::size_t i) { rows[i] = rescaled_kernel_row(f, g[i], g); });
  return rows;
}

}  // namespace

double sup_distance(const RescaledKernelFrame& frame, std::size_t threads) {
  const auto rows = kernel_grid(frame, threads);
  const auto& g = frame.window.u_grid;
  double d = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j) d = std::max(d, std::abs(rows[i][j].value - sine_kernel(g[i], g[j])));
  return d;
}

DensityResult cmd_density(const RunConfig& c, const CommandOptions& o) {
  const auto mu = c.limit_measure();
  if (!mu) throw ValidationError("density needs a measure");
  if (c.t.empty()) throw ValidationError("density needs at least one time t");
  for (double t : c.t)
    if (!(t > 0.0)) throw ValidationError("density times must be positive");
  const auto dir = prepare(c, o);
  DensityResult r;
  r.t_cr = t_critical(*mu, c.window.x_star);
  const std::size_t m = c.density.points;
  for (double t : c.t) {
    const FreeConvolutionState state(SpectralMeasure(*mu), t);
    std::vector<double> psi(m), xs(m);
    for (std::size_t i = 0; i < m; ++i) xs[i] = c.density.lo + (c.density.hi - c.density.lo) * double(i) / double(m - 1);
    parallel_for(m, o.threads, [&](std::size_t i) { psi[i] = state.psi_t(xs[i]); });
    for (std::size_t i = 0; i < m; ++i) {
      r.t.push_back(t);
      r.x.push_back(xs[i]);
      r.psi.push_back(psi[i]);
    }
  }
  std::ofstream csv(dir / "density.csv");
  csv << "t,x,psi_t\n";
  for (std::size_t i = 0; i < r.t.size(); ++i) csv << fmt17(r.t[i]) << ',' << fmt17(r.x[i]) << ',' << fmt17(r.psi[i]) << '\n';
  write_json(dir / "summary.json",
             {{"x_star", c.window.x_star}, {"t_cr", r.t_cr}, {"t_cr_human", fmt_human(r.t_cr)}});
  return r;
}

KernelResult cmd_kernel(const RunConfig& c, const CommandOptions& o) {
  const double t = single_time(c);
  const auto cfg = c.configuration();
  const FreeConvolutionState limit(window_measure(c, cfg), t);
  const auto frame = make_frame(KernelEvaluator(cfg, t, 0.0, kernel_options(c)), build_window(c, limit));
  const auto dir = prepare(c, o);
  const auto rows = kernel_grid(frame, o.threads);
  KernelResult r;
  r.grid = frame.window.u_grid;
  const auto& g = r.grid;
  std::ofstream csv(dir / "kernel.csv"), terms(dir / "kernel_terms.csv");
  std::vector<KernelGridPoint> points;
  terms << "u,v,value,I_n,A_n,s\n";
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j) {
      const auto& v = rows[i][j];
      r.values.push_back(v);
      points.push_back({g[i], g[j], v.value});
      r.sup_residual = std::max(r.sup_residual, std::abs(v.value - sine_kernel(g[i], g[j])));
      r.sup_abs = std::max(r.sup_abs, std::abs(v.value));
      r.max_abs_A = std::max(r.max_abs_A, std::abs(v.A_n));
      terms << fmt17(g[i]) << ',' << fmt17(g[j]) << ',' << fmt17(v.value) << ',' << fmt17(v.I_n) << ','
            << fmt17(v.A_n) << ',' << fmt17(v.s) << '\n';
    }
  write_kernel_csv(csv, points);
  write_json(dir / "frame.json", frame.to_json());
  write_json(dir / "summary.json", {{"sup_residual", r.sup_residual},
                                    {"sup_residual_human", fmt_human(r.sup_residual)},
                                    {"sup_abs", r.sup_abs},
                                    {"sup_abs_human", fmt_human(r.sup_abs)},
                                    {"max_abs_A_n", r.max_abs_A}});
  return r;
}

SweepResult cmd_sweep(const RunConfig& c, const CommandOptions& o) {
  if (c.sweep.n_values.empty()) throw ValidationError("sweep needs n_values");
  if (c.sweep.schedules.empty() && c.t.empty()) throw ValidationError("sweep needs a t-grid or time schedules");
  const auto dir = prepare(c, o);
  SweepResult r;
  for (std::size_t n : c.sweep.n_values) {
    std::vector<std::pair<std::string, double>> times;
    for (const auto& s : c.sweep.schedules) times.emplace_back(s.name, s.time(n));
    for (double t : c.t) times.emplace_back("fixed", t);
    const auto cfg = c.configuration(n);
    for (const auto& [name, t] : times) {
      if (!(t > 0.0)) throw ValidationError("sweep times must be positive");
      const auto start = std::chrono::steady_clock::now();
      const FreeConvolutionState limit(window_measure(c, cfg), t);
      const auto frame = make_frame(KernelEvaluator(cfg, t, 0.0, kernel_options(c)), build_window(c, limit));
      SweepRow row{n, name, t, sup_distance(frame, o.threads), 0.0};
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      std::cerr << "sweep n=" << n << " " << name << " t=" << fmt_human(t) << " D=" << fmt_human(row.D) << " ("
                << fmt_human(row.seconds) << " s)\n";
      r.rows.push_back(row);
    }
  }
  std::ofstream csv(dir / "sweep.csv");
  csv << "n,schedule,t,D,D_human\n";
  for (const auto& row : r.rows)
    csv << row.n << ',' << row.schedule << ',' << fmt17(row.t) << ',' << fmt17(row.D) << ',' << fmt_human(row.D) << '\n';
  return r;
}

GapCommandResult cmd_gap(const RunConfig& c, const CommandOptions& o) {
  const double t = single_time(c);
  if (!(c.gap.half_width > 0.0)) throw ValidationError("gap.half_width must be positive");
  if (c.gap.samples == 0) throw ValidationError("gap.samples must be positive");
  const auto cfg = c.configuration();
  const FreeConvolutionState limit(window_measure(c, cfg), t);
  const double centre = limit.psi_t_parametric(c.window.x_star).first;
  const Interval iv{centre - c.gap.half_width, centre + c.gap.half_width};
  const auto dir = prepare(c, o);
  GapCommandResult r;
  const KernelEvaluator ev(cfg, t, 0.0, kernel_options(c));
  r.fredholm = gap_probability({exact_kernel_matrix(ev, o.threads), iv});
  const auto samples = sample_many(GueSampler(cfg.measure.size(), c.seed), cfg, t, c.gap.samples, o.threads);
  r.monte_carlo = empirical_gap_frequency(samples, iv);
  r.samples = c.gap.samples;
  write_json(dir / "gap.json",
             {{"fredholm", r.fredholm.to_json()},
              {"monte_carlo",
               {{"frequency", r.monte_carlo.value}, {"stderr", r.monte_carlo.stderr_}, {"samples", r.samples}}}});
  return r;
}

std::vector<Eigen::MatrixXd> cmd_paths(const RunConfig& c, const CommandOptions& o) {
  if (c.paths.t_grid.empty()) throw ValidationError("paths needs a t_grid");
  if (c.paths.samples == 0) throw ValidationError("paths.samples must be positive");
  const auto cfg = c.configuration();
  const GueSampler sampler(cfg.measure.size(), c.seed);
  std::vector<Eigen::MatrixXd> out(c.paths.samples);
  parallel_for(out.size(), o.threads, [&](std::size_t k) { out[k] = dbm_paths(sampler, cfg, c.paths.t_grid, k); });
  const auto dir = prepare(c, o);
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::ofstream csv(dir / ("paths_" + std::to_string(k) + ".csv"));
    write_paths_csv(csv, c.paths.t_grid, out[k]);
  }
  return out;
}

ExitStatus classify_error(std::exception_ptr e) {
  try {
    std::rethrow_exception(e);
  } catch (const ValidationError& x) {
    return {2, std::string("invalid input: ") + x.what()};
  } catch (const NumericalError& x) {
    return {3, std::string("numerical failure: ") + x.what()};
  } catch (const nlohmann::json::exception& x) {
    return {2, std::string("invalid input: ") + x.what()};
  } catch (const std::filesystem::filesystem_error& x) {
    return {2, std::string("cannot write output: ") + x.what()};
  }
}

}  // namespace dbm
