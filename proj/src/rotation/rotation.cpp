#include "rotation/rotation.hpp"
#include "core/text.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>

#include "core/conditions.hpp"
#include "core/errors.hpp"
#include "core/parallel.hpp"

namespace antilimit {

namespace {

long floor_div(long a, long b) {
  long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

void fill_delta(Staircase& s) {
  s.delta.clear();
  for (std::size_t i = 0; i + 1 < s.m.size(); ++i) s.delta.push_back(s.m[i + 1] - s.m[i]);
}

}  // namespace

nlohmann::json Staircase::to_json() const {
  nlohmann::json j = {{"omega", omega}, {"window", {k_min, k_max}}, {"m", m}, {"delta", delta}};
  if (rational) j["rational"] = {rational->first, rational->second};
  return j;
}

Staircase staircase(double omega, long k_min, long k_max) {
  if (!std::isfinite(omega)) throw ContractError("omega must be finite");
  if (k_max < k_min) throw ContractError("empty staircase window");
  Staircase s;
  s.omega = omega;
  s.k_min = k_min;
  s.k_max = k_max;
  for (long k = k_min; k <= k_max; ++k) {
    const double p = static_cast<double>(k) * omega;
    const double r = std::nearbyint(p);
    // Products within a few ulp of an integer are the rounding shadow of a rational omega.
    const double ulp = std::nextafter(std::fabs(p), std::numeric_limits<double>::infinity()) - std::fabs(p);
    const double v = std::fabs(p - r) <= 4.0 * ulp ? r : std::floor(p);
    s.m.push_back(static_cast<long>(v));
  }
  fill_delta(s);
  return s;
}

Staircase staircase_rational(long p, long q, long k_min, long k_max) {
  if (q <= 0) throw ContractError("rational omega needs q > 0", {{"q", q}});
  if (k_max < k_min) throw ContractError("empty staircase window");
  Staircase s;
  s.omega = static_cast<double>(p) / static_cast<double>(q);
  s.rational = std::make_pair(p, q);
  s.k_min = k_min;
  s.k_max = k_max;
  for (long k = k_min; k <= k_max; ++k) s.m.push_back(floor_div(k * p, q));
  fill_delta(s);
  return s;
}

Staircase staircase_from_string(const std::string& omega, long k_min, long k_max) {
  const auto slash = omega.find('/');
  try {
    if (slash != std::string::npos) {
      std::size_t u1 = 0, u2 = 0;
      const long p = std::stol(omega.substr(0, slash), &u1);
      const long q = std::stol(omega.substr(slash + 1), &u2);
      if (u1 != slash || u2 != omega.size() - slash - 1) throw std::invalid_argument("trailing");
      return staircase_rational(p, q, k_min, k_max);
    }
    std::size_t used = 0;
    const double w = std::stod(omega, &used);
    if (used != omega.size()) throw std::invalid_argument("trailing");
    return staircase(w, k_min, k_max);
  } catch (const std::invalid_argument&) {
    throw ConfigError("omega must be a number or 'p/q'", {{"value", omega}});
  } catch (const std::out_of_range&) {
    throw ConfigError("omega out of range", {{"value", omega}});
  }
}

nlohmann::json ShiftReport::to_json() const {
  return {{"G", G},
          {"max_abs_G", max_abs_G},
          {"periodicity_defect", periodicity_defect},
          {"max_abs_Z_on_[-2,2]^3", max_abs_Z_big_cube}};
}

ModelInstance shifted_coupling(const ModelInstance& m, const Staircase& s, ShiftReport* report) {
  ShiftReport rep;
  const std::vector<BasePoint> thetas = probe_thetas(m, 16);
  const int n = 64;
  std::vector<double> defect(thetas.size(), 0.0), zmax(thetas.size(), 0.0);
  parallel_for(thetas.size(), 1, [&](std::size_t ti) {
    const BasePoint& t = thetas[ti];
    for (int i = 0; i < n; ++i) {
      const double a = -2.0 + 4.0 * i / (n - 1);
      const double dv = std::fabs(m.V(t, a + 1.0) - m.V(t, a));
      defect[ti] = std::max(defect[ti], dv / std::max(1.0, std::fabs(m.V(t, a))));
      for (int j = 0; j < n; ++j) {
        const double b = -2.0 + 4.0 * j / (n - 1);
        for (int k = 0; k < n; ++k) {
          const double c = -2.0 + 4.0 * k / (n - 1);
          const double z = m.Z(t, a, b, c);
          zmax[ti] = std::max(zmax[ti], std::fabs(z));
          const double dz = std::fabs(m.Z(t, a + 1.0, b + 1.0, c + 1.0) - z);
          defect[ti] = std::max(defect[ti], dz / std::max(1.0, std::fabs(z)));
        }
      }
    }
  });
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    rep.periodicity_defect = std::max(rep.periodicity_defect, defect[i]);
    rep.max_abs_Z_big_cube = std::max(rep.max_abs_Z_big_cube, zmax[i]);
  }
  if (rep.periodicity_defect > 1e-9) {
    throw HypothesisError("coupling or potential is not 1-periodic in x",
                          {{"periodicity_defect", rep.periodicity_defect}});
  }
  if (rep.max_abs_Z_big_cube > 1.0 + 1e-12) {
    throw HypothesisError("|Z| exceeds 1 on [-2, 2]^3", {{"max_abs_Z", rep.max_abs_Z_big_cube}});
  }

  auto shift = std::make_shared<SiteShift>();
  shift->k_min = s.k_min;
  shift->m = s.m;
  ModelInstance out = m.with_shift(shift);

  // G_k at the origin of the argument cube; constant in (a, b, c) for translation-invariant Z.
  for (long k = s.k_min + 1; k < s.k_max; ++k) {
    const BasePoint t = m.theta(k, BasePoint{});
    const double g = m.Z(t, static_cast<double>(s.at(k + 1)), static_cast<double>(s.at(k)),
                         static_cast<double>(s.at(k - 1))) - m.Z(t, 0.0, 0.0, 0.0);
    rep.G.push_back(g);
    rep.max_abs_G = std::max(rep.max_abs_G, std::fabs(g));
  }
  if (report) *report = rep;
  return out;
}

nlohmann::json RotationNumber::to_json() const {
  return {{"forward", forward}, {"backward", backward}, {"profile", profile}};
}

RotationNumber measure_rotation_number(const std::vector<double>& values, long origin) {
  if (values.size() < 2) throw ContractError("rotation number needs at least two values");
  if (origin < 0 || origin >= static_cast<long>(values.size()))
    throw ContractError("origin outside the sequence", {{"origin", origin}});
  RotationNumber r;
  const auto o = static_cast<std::size_t>(origin);
  const double y0 = values[o];
  for (std::size_t i = o + 1; i < values.size(); ++i)
    r.profile.push_back((values[i] - y0) / static_cast<double>(i - o));
  if (!r.profile.empty()) r.forward = r.profile.back();
  if (o > 0) r.backward = (y0 - values.front()) / static_cast<double>(o);
  return r;
}

nlohmann::json RotationOrbit::to_json() const {
  return {{"omega", omega},
          {"window", {base.k_min, base.k_max}},
          {"max_deviation", max_deviation},
          {"bound", 2.0},
          {"bound_ok", bound_ok},
          {"shifted_max_residual", base.max_residual()},
          {"original_max_residual", original_residual},
          {"rotation_number", rho.to_json()},
          {"staircase", stairs.to_json()},
          {"shift", shift.to_json()}};
}

std::string RotationOrbit::csv() const {
  std::string out = "k,m_k,x_k,y_k,rho_partial\n";
  const long k0 = base.k_min;
  const double y_origin = y[static_cast<std::size_t>(-k0)];
  for (std::size_t i = 0; i < y.size(); ++i) {
    const long k = k0 + static_cast<long>(i);
    out += std::to_string(k) + "," + std::to_string(stairs.at(k)) + "," + fmt17(base.values[i]) + "," + fmt17(y[i]) + ",";
    if (k != 0) out += fmt17((y[i] - y_origin) / static_cast<double>(k));
    out += "\n";
  }
  return out;
}

RotationOrbit construct_rotation_orbit(const ModelInstance& m, const Staircase& s, long l, double a,
                                       double b, const BasePoint& theta0, int workers) {
  if (s.k_min > -l - 1 || s.k_max < l + 1)
    throw ContractError("staircase must cover [-l-1, l+1]", {{"l", l}, {"window", {s.k_min, s.k_max}}});
  RotationOrbit out;
  out.omega = s.omega;
  out.stairs = s;
  const ModelInstance sm = shifted_coupling(m, s, &out.shift);
  sm.require_small_epsilon("construct_rotation_orbit");

  // Seed with the zero of smallest |x| at every site.
  const auto branches = zero_branches(sm, theta0, l);
  std::vector<int> pattern;
  for (const auto& br : branches) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < br.size(); ++i)
      if (std::fabs(br[i]) < std::fabs(br[best])) best = i;
    pattern.push_back(static_cast<int>(best));
  }
  WindowOptions opt;
  opt.max_seeds = 1;
  opt.itineraries = {pattern};
  opt.workers = workers;
  SolutionSet set = solve_window_2d(sm, theta0, l, a, b, opt);
  out.base = set.segments.front();

  const std::size_t n = out.base.values.size();
  out.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const long k = -l + static_cast<long>(i);
    out.y[i] = out.base.values[i] + static_cast<double>(s.at(k));
    out.max_deviation = std::max(out.max_deviation, std::fabs(out.y[i] - static_cast<double>(k) * s.omega));
  }
  out.bound_ok = out.max_deviation <= 2.0;
  // Residual of the original system at y_k (boundary values shifted alongside).
  const double ya = a + static_cast<double>(s.at(l + 1));
  const double yb = b + static_cast<double>(s.at(-l - 1));
  for (std::size_t i = 0; i < n; ++i) {
    const long k = -l + static_cast<long>(i);
    const double next = i + 1 < n ? out.y[i + 1] : ya;
    const double prev = i > 0 ? out.y[i - 1] : yb;
    out.original_residual =
        std::max(out.original_residual, std::fabs(m.f(m.theta(k, theta0), next, out.y[i], prev)));
  }
  out.rho = measure_rotation_number(out.y, l);
  return out;
}

}  // namespace antilimit
