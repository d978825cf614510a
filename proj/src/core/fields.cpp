#include "core/fields.hpp"

namespace antilimit {

double PotentialField::fd_derivative(const BasePoint& t, double x, double eta) const {
  return (value(t, x + eta) - value(t, x - eta)) / (2.0 * eta);
}

double PotentialField::derivative(const BasePoint& t, double x, double eta) const {
  return dx ? dx(t, x) : fd_derivative(t, x, eta);
}

CouplingField::Grad CouplingField::fd_gradient(const BasePoint& t, double a, double b, double c,
                                               double eta) const {
  const double h2 = 2.0 * eta;
  return {(value(t, a + eta, b, c) - value(t, a - eta, b, c)) / h2,
          (value(t, a, b + eta, c) - value(t, a, b - eta, c)) / h2,
          (value(t, a, b, c + eta) - value(t, a, b, c - eta)) / h2};
}

CouplingField::Grad CouplingField::gradient(const BasePoint& t, double a, double b, double c,
                                            double eta) const {
  return grad ? grad(t, a, b, c) : fd_gradient(t, a, b, c, eta);
}

PotentialField rescaled(const PotentialField& v, const Rescale& r) {
  if (r.alpha == 1.0 && r.beta == 0.0) return v;
  PotentialField out;
  out.value = [v, r](const BasePoint& t, double u) { return v.value(t, r.to_physical(u)); };
  if (v.dx) {
    out.dx = [v, r](const BasePoint& t, double u) { return r.alpha * v.dx(t, r.to_physical(u)); };
  }
  return out;
}

}  // namespace antilimit
