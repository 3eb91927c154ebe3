#include "dbm/measures.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <optional>
#include <numbers>
#include <ostream>
#include <sstream>

#include "dbm/errors.hpp"
#include "dbm/io.hpp"
#include "dbm/quadrature.hpp"

namespace dbm {

using nlohmann::json;

std::string to_string(MeasureKind kind) {
  switch (kind) {
    case MeasureKind::semicircle: return "semicircle";
    case MeasureKind::power: return "power";
    case MeasureKind::uniform: return "uniform";
    case MeasureKind::piecewise: return "piecewise";
  }
  return "?";
}

namespace {

double horner(const std::vector<double>& c, double x) {
  double s = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) s = s * x + *it;
  return s;
}

// Antiderivative of the piece polynomial from lo to x.
double piece_integral(const PolynomialPiece& p, double x) {
  auto prim = [&](double v) {
    double s = 0.0;
    for (std::size_t k = p.coefficients.size(); k-- > 0;) s = s * v + p.coefficients[k] / double(k + 1);
    return s * v;
  };
  return prim(x) - prim(p.lo);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

}  // namespace

MeasureSpec MeasureSpec::semicircle(double variance) {
  require(std::isfinite(variance) && variance > 0.0, "semicircle variance must be positive");
  MeasureSpec m;
  m.kind_ = MeasureKind::semicircle;
  m.variance_ = variance;
  const double r = 2.0 * std::sqrt(variance);
  m.support_ = {{-r, r}};
  m.verify_mass();
  return m;
}

MeasureSpec MeasureSpec::power(double exponent, double center, double a, double b) {
  require(std::isfinite(exponent) && exponent > 0.0, "power exponent must be positive");
  require(std::isfinite(a) && std::isfinite(b) && a < b, "power support must satisfy a < b");
  require(center >= a && center <= b, "power centre must lie in the support");
  MeasureSpec m;
  m.kind_ = MeasureKind::power;
  m.exponent_ = exponent;
  m.center_ = center;
  m.constant_ = (exponent + 1.0) / (std::pow(center - a, exponent + 1.0) + std::pow(b - center, exponent + 1.0));
  m.support_ = {{a, b}};
  m.verify_mass();
  return m;
}

MeasureSpec MeasureSpec::uniform(double a, double b) {
  require(std::isfinite(a) && std::isfinite(b) && a < b, "uniform support must satisfy a < b");
  MeasureSpec m;
  m.kind_ = MeasureKind::uniform;
  m.support_ = {{a, b}};
  m.verify_mass();
  return m;
}

MeasureSpec MeasureSpec::piecewise(std::vector<PolynomialPiece> pieces) {
  require(!pieces.empty(), "piecewise measure needs at least one piece");
  std::sort(pieces.begin(), pieces.end(), [](auto& l, auto& r) { return l.lo < r.lo; });
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const auto& p = pieces[i];
    require(std::isfinite(p.lo) && std::isfinite(p.hi) && p.lo < p.hi, "piece interval must satisfy lo < hi");
    require(!p.coefficients.empty(), "piece polynomial has no coefficients");
    if (i > 0) require(p.lo >= pieces[i - 1].hi, "pieces overlap");
    // nonnegativity on a fine sample including the ends
    for (int k = 0; k <= 256; ++k) {
      const double x = p.lo + (p.hi - p.lo) * k / 256.0;
      require(horner(p.coefficients, x) >= -1e-12, "piecewise density is negative");
    }
  }
  MeasureSpec m;
  m.kind_ = MeasureKind::piecewise;
  double acc = 0.0;
  for (const auto& p : pieces) {
    m.piece_offsets_.push_back(acc);
    acc += piece_integral(p, p.hi);
    if (!m.support_.empty() && m.support_.back().hi == p.lo) {
      m.support_.back().hi = p.hi;
    } else {
      m.support_.push_back({p.lo, p.hi});
    }
  }
  m.pieces_ = std::move(pieces);
  m.verify_mass();
  return m;
}

void MeasureSpec::verify_mass() const {
  auto bp = breakpoints();
  double mass = 0.0;
  for (const auto& iv : support_) {
    std::vector<double> pts{iv.lo};
    for (double b : bp)
      if (b > iv.lo && b < iv.hi) pts.push_back(b);
    pts.push_back(iv.hi);
    mass += quad::tanh_sinh_panels([&](double x) { return density(x); }, pts, 1e-13, 1e-15).value;
  }
  if (std::abs(mass - 1.0) > 1e-10) {
    std::ostringstream os;
    os << "measure has total mass " << fmt17(mass) << ", expected 1";
    throw ValidationError(os.str());
  }
}

std::vector<double> MeasureSpec::breakpoints() const {
  std::vector<double> b;
  for (const auto& iv : support_) {
    b.push_back(iv.lo);
    b.push_back(iv.hi);
  }
  if (kind_ == MeasureKind::power) b.push_back(center_);
  for (const auto& p : pieces_) {
    b.push_back(p.lo);
    b.push_back(p.hi);
  }
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return b;
}

double MeasureSpec::density(double x) const {
  switch (kind_) {
    case MeasureKind::semicircle: {
      const double r2 = 4.0 * variance_ - x * x;
      return r2 <= 0.0 ? 0.0 : std::sqrt(r2) / (2.0 * std::numbers::pi * variance_);
    }
    case MeasureKind::power: {
      const auto& s = support_.front();
      if (x < s.lo || x > s.hi) return 0.0;
      return constant_ * std::pow(std::abs(x - center_), exponent_);
    }
    case MeasureKind::uniform: {
      const auto& s = support_.front();
      return (x < s.lo || x > s.hi) ? 0.0 : 1.0 / s.length();
    }
    case MeasureKind::piecewise: {
      for (const auto& p : pieces_)
        if (x >= p.lo && x <= p.hi) return std::max(0.0, horner(p.coefficients, x));
      std::ostringstream os;
      os << "x = " << fmt17(x) << " is outside every piece of the piecewise measure";
      throw ValidationError(os.str());
    }
  }
  return 0.0;
}

double MeasureSpec::cdf(double x) const {
  if (std::isnan(x)) throw ValidationError("cdf of NaN");
  const Interval h = hull();
  if (x <= h.lo) return 0.0;
  if (x >= h.hi) return 1.0;
  switch (kind_) {
    case MeasureKind::semicircle: {
      const double u = x / h.hi;
      return std::clamp(0.5 + (u * std::sqrt(1.0 - u * u) + std::asin(u)) / std::numbers::pi, 0.0, 1.0);
    }
    case MeasureKind::power: {
      const double k1 = exponent_ + 1.0;
      const double left = std::pow(center_ - h.lo, k1);
      const double v = x < center_ ? left - std::pow(center_ - x, k1) : left + std::pow(x - center_, k1);
      return std::clamp(constant_ * v / k1, 0.0, 1.0);
    }
    case MeasureKind::uniform:
      return (x - h.lo) / h.length();
    case MeasureKind::piecewise: {
      double v = 1.0;
      for (std::size_t i = 0; i < pieces_.size(); ++i) {
        const auto& p = pieces_[i];
        if (x < p.lo) {
          v = piece_offsets_[i];
          break;
        }
        if (x <= p.hi) {
          v = piece_offsets_[i] + piece_integral(p, x);
          break;
        }
      }
      return std::clamp(v, 0.0, 1.0);
    }
  }
  return 0.0;
}

json MeasureSpec::to_json() const {
  json j;
  j["kind"] = to_string(kind_);
  json params = json::object();
  switch (kind_) {
    case MeasureKind::semicircle: params["variance"] = variance_; break;
    case MeasureKind::power:
      params["exponent"] = exponent_;
      params["center"] = center_;
      break;
    case MeasureKind::uniform: break;
    case MeasureKind::piecewise: {
      json arr = json::array();
      for (const auto& p : pieces_) arr.push_back({{"interval", {p.lo, p.hi}}, {"coefficients", p.coefficients}});
      params["pieces"] = arr;
      break;
    }
  }
  j["params"] = params;
  const Interval h = hull();
  j["support"] = {h.lo, h.hi};
  return j;
}

namespace {

void only_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find_if(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; }) == keys.end())
      throw ValidationError("unknown key '" + it.key() + "' in " + where);
  }
}

double number(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_number()) throw ValidationError(where + "." + key + " must be a number");
  return j.at(key).get<double>();
}

Interval interval_of(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ValidationError(where + " must be [lo, hi]");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

MeasureSpec MeasureSpec::from_json(const json& j) {
  only_keys(j, {"kind", "params", "support"}, "measure");
  if (!j.contains("kind") || !j["kind"].is_string()) throw ValidationError("measure.kind must be a string");
  const std::string kind = j["kind"];
  const json params = j.value("params", json::object());
  std::optional<Interval> support;
  if (j.contains("support")) support = interval_of(j["support"], "measure.support");
  auto need_support = [&]() -> Interval {
    if (!support) throw ValidationError("measure.support is required for kind " + kind);
    return *support;
  };
  if (kind == "semicircle") {
    only_keys(params, {"variance"}, "measure.params");
    auto m = semicircle(number(params, "variance", "measure.params"));
    if (support && (std::abs(support->lo - m.hull().lo) > 1e-12 || std::abs(support->hi - m.hull().hi) > 1e-12))
      throw ValidationError("semicircle support must be [-2 sqrt(s), 2 sqrt(s)]");
    return m;
  }
  if (kind == "power") {
    only_keys(params, {"exponent", "center"}, "measure.params");
    const Interval s = need_support();
    return power(number(params, "exponent", "measure.params"), number(params, "center", "measure.params"), s.lo,
                 s.hi);
  }
  if (kind == "uniform") {
    only_keys(params, {}, "measure.params");
    const Interval s = need_support();
    return uniform(s.lo, s.hi);
  }
  if (kind == "piecewise") {
    only_keys(params, {"pieces"}, "measure.params");
    if (!params.contains("pieces") || !params["pieces"].is_array())
      throw ValidationError("measure.params.pieces must be an array");
    std::vector<PolynomialPiece> pieces;
    for (const auto& p : params["pieces"]) {
      only_keys(p, {"interval", "coefficients"}, "piece");
      const Interval iv = interval_of(p.at("interval"), "piece.interval");
      if (!p.contains("coefficients") || !p["coefficients"].is_array())
        throw ValidationError("piece.coefficients must be an array");
      pieces.push_back({iv.lo, iv.hi, p["coefficients"].get<std::vector<double>>()});
    }
    auto m = piecewise(std::move(pieces));
    if (support && (support->lo != m.hull().lo || support->hi != m.hull().hi))
      throw ValidationError("piecewise support does not match its pieces");
    return m;
  }
  throw ValidationError("unknown measure kind '" + kind + "'");
}

EmpiricalMeasure::EmpiricalMeasure(std::vector<double> points) : points_(std::move(points)) {
  if (points_.empty()) throw ValidationError("empirical measure needs at least one point");
  for (double p : points_)
    if (!std::isfinite(p)) throw ValidationError("empirical measure has a non-finite point");
  std::sort(points_.begin(), points_.end());
}

double EmpiricalMeasure::cdf(double x) const {
  return double(std::upper_bound(points_.begin(), points_.end(), x) - points_.begin()) / points_.size();
}

double EmpiricalMeasure::cdf_left(double x) const {
  return double(std::lower_bound(points_.begin(), points_.end(), x) - points_.begin()) / points_.size();
}

namespace {

// Smallest x in [lo, hi] with pred(x) true, for pred monotone false -> true.
template <class P>
double bisect_first(P pred, double lo, double hi) {
  for (int it = 0; it < 2000; ++it) {
    const double mid = std::midpoint(lo, hi);
    if (mid <= lo || mid >= hi) break;
    (pred(mid) ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace

std::vector<double> quantiles(const MeasureSpec& mu, std::size_t n, QuantileDiagnostics* diag) {
  if (n == 0) throw ValidationError("quantiles need n >= 1");
  const Interval h = mu.hull();
  const double plateau_tol = 1e-14;
  std::vector<double> q(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double p = (double(k) + 0.5) / double(n);
    const double lo = bisect_first([&](double x) { return mu.cdf(x) >= p - plateau_tol; }, h.lo, h.hi);
    const double hi = bisect_first([&](double x) { return mu.cdf(x) > p + plateau_tol; }, h.lo, h.hi);
    if (hi - lo > 1e-9 * h.length()) {
      q[k] = std::midpoint(lo, hi);
      if (diag) diag->non_unique.push_back(k);
    } else {
      q[k] = bisect_first([&](double x) { return mu.cdf(x) >= p; }, h.lo, h.hi);
      // the bracket end may sit one ulp to the right; keep the closer side
      const double left = std::nextafter(q[k], h.lo);
      if (std::abs(mu.cdf(left) - p) < std::abs(mu.cdf(q[k]) - p)) q[k] = left;
    }
  }
  for (std::size_t k = 1; k < n; ++k) q[k] = std::max(q[k], q[k - 1]);
  return q;
}

double rigidity(const EmpiricalMeasure& points, const MeasureSpec& mu) {
  const auto q = quantiles(mu, points.size());
  double m = 0.0;
  for (std::size_t k = 0; k < q.size(); ++k) m = std::max(m, std::abs(points.points()[k] - q[k]));
  return double(points.size()) * m;
}

double kolmogorov_distance(const EmpiricalMeasure& mu_n, const MeasureSpec& mu) {
  const auto a = mu_n.points();
  const double n = double(a.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < a.size()) {
    std::size_t j = i;
    while (j < a.size() && a[j] == a[i]) ++j;
    const double f = mu.cdf(a[i]);
    d = std::max({d, std::abs(f - double(i) / n), std::abs(f - double(j) / n)});
    i = j;
  }
  return std::min(d, 1.0);
}

std::vector<double> insert_gap(std::span<const double> sorted_points, double x_star, double delta) {
  if (!(delta > 0.0)) throw ValidationError("gap half-width must be positive");
  const double lo = x_star - delta, hi = x_star + delta;
  std::vector<double> out(sorted_points.begin(), sorted_points.end());
  for (double& p : out) {
    if (p > lo && p < hi) p = (p <= x_star) ? lo : hi;
  }
  return out;
}

std::vector<double> equispaced(double a, double b, std::size_t n) {
  if (n == 0) throw ValidationError("equispaced needs n >= 1");
  if (!(a <= b)) throw ValidationError("equispaced needs a <= b");
  if (n == 1) return {std::midpoint(a, b)};
  std::vector<double> p(n);
  for (std::size_t k = 0; k < n; ++k) p[k] = a + (b - a) * double(k) / double(n - 1);
  p.back() = b;
  return p;
}

namespace {

std::vector<double> generate(const Generator& gen, std::size_t n, std::vector<std::size_t>* warnings) {
  return std::visit(
      [&](const auto& r) -> std::vector<double> {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, QuantilesOf>) {
          QuantileDiagnostics d;
          auto q = quantiles(r.mu, n, &d);
          if (warnings) *warnings = d.non_unique;
          return q;
        } else if constexpr (std::is_same_v<R, Equispaced>) {
          return equispaced(r.a, r.b, n);
        } else if constexpr (std::is_same_v<R, GapInserted>) {
          if (!r.base) throw ValidationError("gap-inserted generator has no base");
          return insert_gap(generate(*r.base, n, warnings), r.x_star, r.delta);
        } else {
          if (r.points.size() != n)
            throw ValidationError("explicit configuration has " + std::to_string(r.points.size()) +
                                  " points, expected n = " + std::to_string(n));
          auto p = r.points;
          std::sort(p.begin(), p.end());
          return p;
        }
      },
      gen.rule);
}

}  // namespace

InitialConfiguration make_configuration(const Generator& gen, std::size_t n) {
  if (n == 0) throw ValidationError("n must be >= 1");
  InitialConfiguration c;
  c.generator = gen;
  c.measure = EmpiricalMeasure(generate(gen, n, &c.quantile_warnings));
  return c;
}

json to_json(const Generator& gen) {
  return std::visit(
      [](const auto& r) -> json {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, QuantilesOf>) {
          return {{"type", "quantiles"}, {"measure", r.mu.to_json()}};
        } else if constexpr (std::is_same_v<R, Equispaced>) {
          return {{"type", "equispaced"}, {"interval", {r.a, r.b}}};
        } else if constexpr (std::is_same_v<R, GapInserted>) {
          return {{"type", "gap_inserted"}, {"base", to_json(*r.base)}, {"x_star", r.x_star}, {"delta", r.delta}};
        } else {
          return {{"type", "explicit"}, {"points", r.points}};
        }
      },
      gen.rule);
}

Generator generator_from_json(const json& j) {
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
    throw ValidationError("generator.type must be a string");
  const std::string type = j["type"];
  if (type == "quantiles") {
    only_keys(j, {"type", "measure"}, "generator");
    if (!j.contains("measure")) throw ValidationError("quantile generator needs a measure");
    return {QuantilesOf{MeasureSpec::from_json(j["measure"])}};
  }
  if (type == "equispaced") {
    only_keys(j, {"type", "interval"}, "generator");
    const Interval iv = interval_of(j.value("interval", json::array({-1.0, 1.0})), "generator.interval");
    if (!(iv.lo <= iv.hi)) throw ValidationError("generator.interval must satisfy lo <= hi");
    return {Equispaced{iv.lo, iv.hi}};
  }
  if (type == "gap_inserted") {
    only_keys(j, {"type", "base", "x_star", "delta"}, "generator");
    if (!j.contains("base")) throw ValidationError("gap_inserted generator needs a base");
    const double delta = number(j, "delta", "generator");
    if (!(delta > 0.0)) throw ValidationError("generator.delta must be positive");
    return {GapInserted{std::make_shared<const Generator>(generator_from_json(j["base"])),
                        number(j, "x_star", "generator"), delta}};
  }
  if (type == "explicit") {
    only_keys(j, {"type", "points"}, "generator");
    if (!j.contains("points") || !j["points"].is_array()) throw ValidationError("explicit generator needs points");
    for (const auto& v : j["points"])
      if (!v.is_number()) throw ValidationError("explicit points must be numbers");
    return {Explicit{j["points"].get<std::vector<double>>()}};
  }
  throw ValidationError("unknown generator type '" + type + "'");
}

void write_points_csv(std::ostream& out, std::span<const double> points) {
  for (double p : points) out << fmt17(p) << '\n';
}

std::vector<double> read_points_csv(std::istream& in) {
  std::vector<double> p;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    try {
      std::size_t used = 0;
      p.push_back(std::stod(line, &used));
    } catch (const std::exception&) {
      throw ValidationError("points CSV line " + std::to_string(lineno) + " is not a number");
    }
  }
  return p;
}

}  // namespace dbm
