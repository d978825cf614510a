#pragma once

#include <functional>
#include <vector>

namespace antilimit {

using ScalarFn = std::function<double(double)>;

// Bisection on a bracket with f(lo)*f(hi) <= 0. Stops when the bracket is no
// wider than tol or cannot shrink further in floating point.
double bisect(const ScalarFn& f, double lo, double hi, double flo, double fhi, double tol = 1e-12);

// Bisection run to full double precision; the result depends only on the
// bracket and the sign pattern of f, so monotone maps give monotone results.
double bisect_full(const ScalarFn& f, double lo, double hi, double flo, double fhi);

// All roots in [lo, hi] found by sign changes on an (n+1)-point uniform grid
// followed by bisection. Exact zeros on grid nodes are reported once.
std::vector<double> bracket_roots(const ScalarFn& f, double lo, double hi, int n = 512,
                                  double tol = 1e-12);

}  // namespace antilimit
