#pragma once

#include <array>
#include <functional>
#include <optional>

#include "core/base.hpp"

namespace antilimit {

inline constexpr double kDefaultFdStep = 1e-6;

// V(theta, x) with an optional analytic x-derivative.
struct PotentialField {
  std::function<double(const BasePoint&, double)> value;
  std::function<double(const BasePoint&, double)> dx;  // may be empty

  double operator()(const BasePoint& t, double x) const { return value(t, x); }
  bool has_analytic() const { return static_cast<bool>(dx); }
  double derivative(const BasePoint& t, double x, double eta = kDefaultFdStep) const;
  double fd_derivative(const BasePoint& t, double x, double eta = kDefaultFdStep) const;
};

// Z(theta, a, b, c) with optional analytic gradient (d/da, d/db, d/dc).
// In 1D mode the third argument is ignored by construction.
struct CouplingField {
  using Grad = std::array<double, 3>;
  std::function<double(const BasePoint&, double, double, double)> value;
  std::function<Grad(const BasePoint&, double, double, double)> grad;  // may be empty

  double operator()(const BasePoint& t, double a, double b, double c) const {
    return value(t, a, b, c);
  }
  bool has_analytic() const { return static_cast<bool>(grad); }
  Grad gradient(const BasePoint& t, double a, double b, double c,
                double eta = kDefaultFdStep) const;
  Grad fd_gradient(const BasePoint& t, double a, double b, double c,
                   double eta = kDefaultFdStep) const;
};

// Affine map u -> alpha*u + beta from the working interval I to physical x.
struct Rescale {
  double alpha = 1.0;
  double beta = 0.0;
  double to_physical(double u) const { return alpha * u + beta; }
  double to_unit(double x) const { return (x - beta) / alpha; }
};

// Returns V_int(theta, u) = V(theta, alpha*u + beta) with the chain rule
// applied to its derivative.
PotentialField rescaled(const PotentialField& v, const Rescale& r);

}  // namespace antilimit
