#include "core/roots.hpp"

#include <cmath>

namespace antilimit {

namespace {

bool opposite(double a, double b) { return (a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0); }

}  // namespace

double bisect(const ScalarFn& f, double lo, double hi, double flo, double fhi, double tol) {
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  for (int it = 0; it < 200 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if (opposite(flo, fm)) {
      hi = mid;
      fhi = fm;
    } else {
      lo = mid;
      flo = fm;
    }
  }
  return 0.5 * (lo + hi);
}

double bisect_full(const ScalarFn& f, double lo, double hi, double flo, double fhi) {
  return bisect(f, lo, hi, flo, fhi, 0.0);
}

std::vector<double> bracket_roots(const ScalarFn& f, double lo, double hi, int n, double tol) {
  std::vector<double> roots;
  if (n < 1) n = 1;
  const double h = (hi - lo) / n;
  double x0 = lo;
  double f0 = f(x0);
  if (f0 == 0.0) roots.push_back(x0);
  for (int i = 1; i <= n; ++i) {
    const double x1 = (i == n) ? hi : lo + i * h;
    const double f1 = f(x1);
    if (f1 == 0.0) {
      roots.push_back(x1);
    } else if (opposite(f0, f1)) {
      roots.push_back(bisect(f, x0, x1, f0, f1, tol));
    }
    x0 = x1;
    f0 = f1;
  }
  return roots;
}

}  // namespace antilimit
