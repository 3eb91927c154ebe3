#include "dbm/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "dbm/errors.hpp"

namespace dbm {

using json = nlohmann::json;

namespace {

void only_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find_if(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; }) == keys.end())
      throw ValidationError("unknown key '" + it.key() + "' in " + where);
}

double num(const json& j, const char* key, double fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ValidationError(where + "." + key + " must be a number");
  const double v = j[key].get<double>();
  if (!std::isfinite(v)) throw ValidationError(where + "." + key + " must be finite");
  return v;
}

// integers built in code are signed in the json model; parsed ones are unsigned
bool non_negative_integer(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

std::size_t count(const json& j, const char* key, std::size_t fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!non_negative_integer(j[key])) throw ValidationError(where + "." + key + " must be a non-negative integer");
  return j[key].get<std::size_t>();
}

std::string text(const json& j, const char* key, const std::string& fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_string()) throw ValidationError(where + "." + key + " must be a string");
  return j[key].get<std::string>();
}

std::vector<double> numbers(const json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>()};
  if (!j.is_array()) throw ValidationError(where + " must be a number or a list of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number() || !std::isfinite(v.get<double>())) throw ValidationError(where + " entries must be finite numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

std::vector<double> WindowConfig::grid() const {
  const auto steps = static_cast<std::size_t>(std::llround(u_extent / grid_step));
  std::vector<double> g;
  for (std::size_t i = 0; i <= 2 * steps; ++i) g.push_back(-u_extent + double(i) * grid_step);
  return g;
}

double Schedule::time(std::size_t n) const {
  const double dn = double(n);
  return scale * std::pow(dn, n_power) * std::pow(std::log(dn), log_power);
}

std::optional<MeasureSpec> RunConfig::limit_measure() const {
  if (measure) return measure;
  if (generator)
    if (const auto* q = std::get_if<QuantilesOf>(&generator->rule)) return q->mu;
  return std::nullopt;
}

InitialConfiguration RunConfig::configuration(std::size_t n_override) const {
  if (!generator) throw ValidationError("config needs a generator");
  const std::size_t size = n_override ? n_override : n;
  if (size == 0) throw ValidationError("config needs n >= 1");
  return make_configuration(*generator, size);
}

RunConfig parse_config(const json& j) {
  only_keys(j,
            {"measure", "n", "generator", "t", "window", "quadrature", "density", "sweep", "gap", "paths", "seed",
             "output_dir"},
            "config");
  RunConfig c;
  if (j.contains("measure") && !j["measure"].is_null()) c.measure = MeasureSpec::from_json(j["measure"]);
  c.n = count(j, "n", 0, "config");
  if (j.contains("generator") && !j["generator"].is_null()) c.generator = generator_from_json(j["generator"]);
  if (j.contains("t")) c.t = numbers(j["t"], "config.t");
  for (double t : c.t)
    if (!(t >= 0.0)) throw ValidationError("config.t must be >= 0");
  c.seed = j.contains("seed") ? [&] {
    if (!non_negative_integer(j["seed"])) throw ValidationError("config.seed must be a non-negative integer");
    return j["seed"].get<std::uint64_t>();
  }()
                              : 0;
  c.output_dir = text(j, "output_dir", c.output_dir, "config");

  if (j.contains("window")) {
    const json& w = j["window"];
    only_keys(w, {"x_star", "u_extent", "grid_step", "scaling", "epsilon"}, "window");
    c.window.x_star = num(w, "x_star", c.window.x_star, "window");
    c.window.u_extent = num(w, "u_extent", c.window.u_extent, "window");
    c.window.grid_step = num(w, "grid_step", c.window.grid_step, "window");
    c.window.scaling = text(w, "scaling", c.window.scaling, "window");
    c.window.epsilon = num(w, "epsilon", c.window.epsilon, "window");
  }
  if (!(c.window.u_extent >= 0.0) || !(c.window.grid_step > 0.0))
    throw ValidationError("window needs u_extent >= 0 and grid_step > 0");
  if (c.window.scaling != "density" && c.window.scaling != "epsilon")
    throw ValidationError("window.scaling must be \"density\" or \"epsilon\"");
  if (c.window.scaling == "epsilon" && !(c.window.epsilon > 0.0))
    throw ValidationError("window.epsilon must be positive for epsilon scaling");

  if (j.contains("quadrature")) {
    const json& q = j["quadrature"];
    only_keys(q, {"M", "tolerance"}, "quadrature");
    c.quadrature.M = count(q, "M", c.quadrature.M, "quadrature");
    c.quadrature.tolerance = num(q, "tolerance", c.quadrature.tolerance, "quadrature");
  }
  if (j.contains("density")) {
    const json& d = j["density"];
    only_keys(d, {"lo", "hi", "points"}, "density");
    c.density.lo = num(d, "lo", c.density.lo, "density");
    c.density.hi = num(d, "hi", c.density.hi, "density");
    c.density.points = count(d, "points", c.density.points, "density");
  }
  if (!(c.density.lo < c.density.hi) || c.density.points < 2)
    throw ValidationError("density grid needs lo < hi and at least two points");
  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    only_keys(s, {"n_values", "schedules"}, "sweep");
    if (s.contains("n_values")) {
      if (!s["n_values"].is_array()) throw ValidationError("sweep.n_values must be a list");
      for (const auto& v : s["n_values"]) {
        if (!non_negative_integer(v) || v.get<std::size_t>() == 0)
          throw ValidationError("sweep.n_values entries must be positive integers");
        c.sweep.n_values.push_back(v.get<std::size_t>());
      }
    }
    if (s.contains("schedules")) {
      if (!s["schedules"].is_array()) throw ValidationError("sweep.schedules must be a list");
      for (const auto& v : s["schedules"]) {
        only_keys(v, {"name", "scale", "n_power", "log_power"}, "sweep.schedules[]");
        Schedule sc;
        sc.name = text(v, "name", "", "sweep.schedules[]");
        if (sc.name.empty()) throw ValidationError("sweep.schedules[].name is required");
        sc.scale = num(v, "scale", sc.scale, "sweep.schedules[]");
        sc.n_power = num(v, "n_power", sc.n_power, "sweep.schedules[]");
        sc.log_power = num(v, "log_power", sc.log_power, "sweep.schedules[]");
        if (!(sc.scale > 0.0)) throw ValidationError("sweep.schedules[].scale must be positive");
        c.sweep.schedules.push_back(sc);
      }
    }
  }
  if (j.contains("gap")) {
    const json& g = j["gap"];
    only_keys(g, {"half_width", "samples"}, "gap");
    c.gap.half_width = num(g, "half_width", c.gap.half_width, "gap");
    c.gap.samples = count(g, "samples", c.gap.samples, "gap");
    if (!(c.gap.half_width >= 0.0)) throw ValidationError("gap.half_width must be >= 0");
  }
  if (j.contains("paths")) {
    const json& p = j["paths"];
    only_keys(p, {"t_grid", "samples"}, "paths");
    if (p.contains("t_grid")) c.paths.t_grid = numbers(p["t_grid"], "paths.t_grid");
    c.paths.samples = count(p, "samples", c.paths.samples, "paths");
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config " + path + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

json to_json(const RunConfig& c) {
  json schedules = json::array();
  for (const auto& s : c.sweep.schedules)
    schedules.push_back({{"name", s.name}, {"scale", s.scale}, {"n_power", s.n_power}, {"log_power", s.log_power}});
  return {{"measure", c.measure ? c.measure->to_json() : json(nullptr)},
          {"n", c.n},
          {"generator", c.generator ? to_json(*c.generator) : json(nullptr)},
          {"t", c.t},
          {"window",
           {{"x_star", c.window.x_star},
            {"u_extent", c.window.u_extent},
            {"grid_step", c.window.grid_step},
            {"scaling", c.window.scaling},
            {"epsilon", c.window.epsilon}}},
          {"quadrature", {{"M", c.quadrature.M}, {"tolerance", c.quadrature.tolerance}}},
          {"density", {{"lo", c.density.lo}, {"hi", c.density.hi}, {"points", c.density.points}}},
          {"sweep", {{"n_values", c.sweep.n_values}, {"schedules", schedules}}},
          {"gap", {{"half_width", c.gap.half_width}, {"samples", c.gap.samples}}},
          {"paths", {{"t_grid", c.paths.t_grid}, {"samples", c.paths.samples}}},
          {"seed", c.seed},
          {"output_dir", c.output_dir}};
}

}  // namespace dbm
