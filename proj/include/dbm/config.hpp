#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dbm/measures.hpp"

namespace dbm {

struct WindowConfig {
  double x_star = 0.0;
  double u_extent = 2.0;  // grid is [-u_extent, u_extent] in steps of grid_step
  double grid_step = 0.25;
  std::string scaling = "density";  // or "epsilon"
  double epsilon = 0.0;

  std::vector<double> grid() const;
};

struct QuadratureConfig {
  std::size_t M = 64;
  double tolerance = 1e-8;
};

struct DensityConfig {
  double lo = -3.0;
  double hi = 3.0;
  std::size_t points = 201;
};

// t = scale * n^n_power * (log n)^log_power
struct Schedule {
  std::string name;
  double scale = 1.0;
  double n_power = 0.0;
  double log_power = 0.0;

  double time(std::size_t n) const;
};

struct SweepConfig {
  std::vector<std::size_t> n_values;
  std::vector<Schedule> schedules;
};

struct GapConfig {
  double half_width = 0.0;  // interval [x*_t - half_width, x*_t + half_width]
  std::size_t samples = 2000;
};

struct PathsConfig {
  std::vector<double> t_grid;
  std::size_t samples = 1;
};

struct RunConfig {
  std::optional<MeasureSpec> measure;  // limit measure; defaults to the quantile generator's
  std::size_t n = 0;
  std::optional<Generator> generator;
  std::vector<double> t;  // a single time or a grid
  WindowConfig window;
  QuadratureConfig quadrature;
  DensityConfig density;
  SweepConfig sweep;
  GapConfig gap;
  PathsConfig paths;
  std::uint64_t seed = 0;
  std::string output_dir = "out";

  // the configured measure, else the measure behind a quantile generator
  std::optional<MeasureSpec> limit_measure() const;
  InitialConfiguration configuration(std::size_t n_override = 0) const;
};

// Unknown keys anywhere raise ValidationError.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
// Canonical form: every field spelled out, keys sorted.
nlohmann::json to_json(const RunConfig& c);

}  // namespace dbm
