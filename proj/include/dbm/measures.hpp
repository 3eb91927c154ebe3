#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace dbm {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
  bool operator==(const Interval&) const = default;
};

// Density sum_k coefficients[k] * x^k on [lo, hi].
struct PolynomialPiece {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> coefficients;
  bool operator==(const PolynomialPiece&) const = default;
};

enum class MeasureKind { semicircle, power, uniform, piecewise };

std::string to_string(MeasureKind kind);

// Absolutely continuous reference measure mu. Immutable.
class MeasureSpec {
 public:
  static MeasureSpec semicircle(double variance);
  // density C |x - center|^exponent on [a, b], C fixed by unit mass
  static MeasureSpec power(double exponent, double center, double a, double b);
  static MeasureSpec uniform(double a, double b);
  static MeasureSpec piecewise(std::vector<PolynomialPiece> pieces);

  MeasureKind kind() const { return kind_; }
  double density(double x) const;
  double cdf(double x) const;
  // Maximal closed intervals where the density lives.
  const std::vector<Interval>& support() const { return support_; }
  Interval hull() const { return {support_.front().lo, support_.back().hi}; }
  // Support ends plus interior points where the density is not smooth.
  std::vector<double> breakpoints() const;

  double variance() const { return variance_; }
  double exponent() const { return exponent_; }
  double center() const { return center_; }
  double power_constant() const { return constant_; }
  const std::vector<PolynomialPiece>& pieces() const { return pieces_; }
  // power kind with exponent >= 1
  bool slow_regime() const { return kind_ == MeasureKind::power && exponent_ >= 1.0; }

  nlohmann::json to_json() const;
  static MeasureSpec from_json(const nlohmann::json& j);

  bool operator==(const MeasureSpec&) const = default;

 private:
  MeasureSpec() = default;
  void verify_mass() const;

  MeasureKind kind_ = MeasureKind::uniform;
  std::vector<Interval> support_;
  double variance_ = 0.0;
  double exponent_ = 0.0;
  double center_ = 0.0;
  double constant_ = 0.0;
  std::vector<PolynomialPiece> pieces_;
  std::vector<double> piece_offsets_;  // CDF at the left end of each piece
};

// Uniform atomic measure on n sorted points.
class EmpiricalMeasure {
 public:
  EmpiricalMeasure() = default;
  explicit EmpiricalMeasure(std::vector<double> points);

  std::span<const double> points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  double cdf(double x) const;       // right-continuous
  double cdf_left(double x) const;  // left limit
  Interval hull() const { return {points_.front(), points_.back()}; }

  bool operator==(const EmpiricalMeasure&) const = default;

 private:
  std::vector<double> points_;
};

struct Generator;

struct QuantilesOf {
  MeasureSpec mu;
};
struct Equispaced {
  double a = -1.0;
  double b = 1.0;
};
struct GapInserted {
  std::shared_ptr<const Generator> base;
  double x_star = 0.0;
  double delta = 0.0;
};
struct Explicit {
  std::vector<double> points;
};

struct Generator {
  std::variant<Equispaced, QuantilesOf, GapInserted, Explicit> rule;
};

struct InitialConfiguration {
  EmpiricalMeasure measure;
  Generator generator;
  std::vector<std::size_t> quantile_warnings;  // indices with non-unique quantiles
};

struct QuantileDiagnostics {
  std::vector<std::size_t> non_unique;  // 0-based indices k-1
};

// q_k with CDF(q_k) = (k - 1/2)/n. On a CDF plateau the midpoint is returned and flagged.
std::vector<double> quantiles(const MeasureSpec& mu, std::size_t n, QuantileDiagnostics* diag = nullptr);

// n * max_k |a_k - q_k|
double rigidity(const EmpiricalMeasure& points, const MeasureSpec& mu);

// sup_x |F_n(x) - F(x)|, exact over the jump locations.
double kolmogorov_distance(const EmpiricalMeasure& mu_n, const MeasureSpec& mu);

// Points inside the open gap (x* - delta, x* + delta) move to the nearest end; the exact centre goes left.
std::vector<double> insert_gap(std::span<const double> sorted_points, double x_star, double delta);

std::vector<double> equispaced(double a, double b, std::size_t n);

InitialConfiguration make_configuration(const Generator& gen, std::size_t n);

nlohmann::json to_json(const Generator& gen);
Generator generator_from_json(const nlohmann::json& j);

void write_points_csv(std::ostream& out, std::span<const double> points);
std::vector<double> read_points_csv(std::istream& in);

}  // namespace dbm
