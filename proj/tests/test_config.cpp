#include <cmath>

#include "doctest.h"
#include "dbm/config.hpp"
#include "dbm/errors.hpp"

using namespace dbm;
using json = nlohmann::json;

namespace {

json full() {
  return json::parse(R"({
    "measure": {"kind": "power", "params": {"exponent": 0.5, "center": 0}, "support": [-1, 1]},
    "n": 100,
    "generator": {"type": "gap_inserted", "base": {"type": "equispaced", "interval": [-1, 1]}, "x_star": 0, "delta": 0.3},
    "t": [0.1, 0.2],
    "window": {"x_star": 0.1, "u_extent": 1.5, "grid_step": 0.5, "scaling": "epsilon", "epsilon": 0.03},
    "quadrature": {"M": 128, "tolerance": 1e-9},
    "density": {"lo": -2, "hi": 2, "points": 11},
    "sweep": {"n_values": [50, 100], "schedules": [{"name": "t_n", "scale": 0.05, "n_power": -0.3333333333333333, "log_power": 2}]},
    "gap": {"half_width": 0.03, "samples": 500},
    "paths": {"t_grid": [0, 0.5, 1], "samples": 2},
    "seed": 42,
    "output_dir": "results"
  })");
}

}  // namespace

TEST_CASE("defaults") {
  const auto c = parse_config(json::object());
  CHECK(c.n == 0);
  CHECK(!c.generator);
  CHECK(c.window.grid().size() == 17);
  CHECK(c.window.grid().front() == -2.0);
  CHECK(c.window.grid().back() == 2.0);
  CHECK(c.quadrature.M == 64);
  CHECK(c.output_dir == "out");
  CHECK_THROWS_AS(c.configuration(), ValidationError);
}

TEST_CASE("canonical round trip") {
  const auto c = parse_config(full());
  CHECK(c.n == 100);
  CHECK(c.t == std::vector<double>{0.1, 0.2});
  CHECK(c.seed == 42);
  CHECK(c.sweep.schedules.at(0).time(100) ==
        doctest::Approx(0.05 * std::pow(100.0, -1.0 / 3) * std::pow(std::log(100.0), 2)));
  const json canon = to_json(c);
  CHECK(to_json(parse_config(canon)) == canon);
  CHECK(to_json(parse_config(to_json(parse_config(json::object())))) == to_json(parse_config(json::object())));
  // a scalar t is the one-point grid
  CHECK(parse_config(json{{"t", 0.5}}).t == std::vector<double>{0.5});
  // quantile generators supply the limit measure
  const auto q = parse_config(json::parse(
      R"({"generator": {"type": "quantiles", "measure": {"kind": "uniform", "support": [-1, 1]}}, "n": 5})"));
  CHECK(q.limit_measure() == MeasureSpec::uniform(-1, 1));
  CHECK(q.configuration().measure.size() == 5);
  // integers built in code (signed in the json model) parse like integers read from text
  CHECK(parse_config(json{{"n", 7}, {"seed", 3}, {"sweep", {{"n_values", {10, 20}}}}}).n == 7);
}

TEST_CASE("rejects unknown keys and bad values") {
  for (const char* path : {"/bogus", "/window/bogus", "/sweep/schedules/0/bogus", "/gap/bogus", "/paths/bogus",
                           "/quadrature/bogus", "/density/bogus", "/measure/bogus", "/generator/bogus"}) {
    json j = full();
    j[json::json_pointer(path)] = 1;
    CHECK_THROWS_AS(parse_config(j), ValidationError);
  }
  auto bad = [](const char* text) { return parse_config(json::parse(text)); };
  CHECK_THROWS_AS(bad(R"({"n": -3})"), ValidationError);
  CHECK_THROWS_AS(bad(R"({"n": 2.5})"), ValidationError);
  CHECK_THROWS_AS(bad(R"({"t": [0.1, "x"]})"), ValidationError);
  CHECK_THROWS_AS(bad(R"({"t": -1})"), ValidationError);
  CHECK_THROWS_AS(bad(R"({"window": {"grid_step": 0}})"), ValidationError);
  CHECK_THROWS_AS(bad(R"({"window": {"scaling": "log"}})"), ValidationError);
  CHECK_THROWS_AS(bad(R"({"window": {"scaling": "epsilon"}})"), ValidationError);
  CHECK_THROWS_AS(bad(R"({"sweep": {"n_values": [0]}})"), ValidationError);
  CHECK_THROWS_AS(bad(R"({"sweep": {"schedules": [{"scale": 1}]}})"), ValidationError);
  CHECK_THROWS_AS(bad(R"({"seed": -1})"), ValidationError);
  CHECK_THROWS_AS(bad(R"([1, 2])"), ValidationError);
  CHECK_THROWS_AS(load_config("/nonexistent/run.json"), ValidationError);
}
