#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include <json.hpp>

namespace antilimit {

inline constexpr int kMaxBaseDim = 4;

// A point of the base M = T^d (coordinates in [0,1)), d <= kMaxBaseDim.
struct BasePoint {
  std::array<double, kMaxBaseDim> coords{};
  int dim = 1;

  static BasePoint scalar(double theta) {
    BasePoint p;
    p.coords[0] = theta;
    return p;
  }
  static BasePoint from(const std::vector<double>& values);

  double operator[](int i) const { return coords[static_cast<std::size_t>(i)]; }
  double& operator[](int i) { return coords[static_cast<std::size_t>(i)]; }
  std::vector<double> to_vector() const;

  friend bool operator==(const BasePoint& a, const BasePoint& b);
};

// Reduces x into [0,1).
double wrap_unit(double x);

// Circular distance between two points of T^d (sup over coordinates).
double torus_distance(const BasePoint& a, const BasePoint& b);

class BaseDynamics {
 public:
  enum class Kind { Rotation, FixedPoint, ExplicitSequence };

  static BaseDynamics rotation(std::vector<double> omega);
  static BaseDynamics fixed_point(BasePoint point);
  // values[i] is theta_{k_min + i}; lookups outside the window throw.
  static BaseDynamics explicit_sequence(std::vector<BasePoint> values, long k_min);

  Kind kind() const { return kind_; }
  int dim() const;
  const std::vector<double>& omega() const { return omega_; }
  const BasePoint& fixed() const { return fixed_; }
  long window_min() const { return k_min_; }
  long window_max() const { return k_min_ + static_cast<long>(sequence_.size()) - 1; }

  // theta_k for the orbit through theta0 (theta0 is ignored by the fixed-point
  // and explicit kinds).
  BasePoint at(long k, const BasePoint& theta0) const;

  // One application of h.
  BasePoint step(const BasePoint& theta) const;

  // Continued-fraction digits of omega (d = 1 rotations only).
  std::vector<long> continued_fraction(int terms) const;

  nlohmann::json to_json() const;

 private:
  Kind kind_ = Kind::FixedPoint;
  std::vector<double> omega_;
  BasePoint fixed_;
  std::vector<BasePoint> sequence_;
  long k_min_ = 0;
};

BaseDynamics base_from_json(const nlohmann::json& j);

}  // namespace antilimit
