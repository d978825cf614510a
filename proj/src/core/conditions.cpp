#include "core/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "core/errors.hpp"
#include "core/parallel.hpp"
#include "core/roots.hpp"

namespace antilimit {

namespace {

// Fractional parts of sqrt(primes): a fixed low-discrepancy direction.
constexpr double kKronecker[7] = {0.41421356237309515, 0.7320508075688772, 0.2360679774997898,
                                  0.6457513110645907,  0.3166247903554,    0.6055512754639891,
                                  0.1231056256176606};

double kron(std::size_t i, int axis) {
  return wrap_unit(0.5 + static_cast<double>(i) * kKronecker[axis]);
}

double grid_point(int i, int n) { return -1.0 + 2.0 * i / (n - 1); }

std::vector<double> location(const BasePoint& t, std::initializer_list<double> xs) {
  std::vector<double> v = t.to_vector();
  v.insert(v.end(), xs.begin(), xs.end());
  return v;
}

nlohmann::json extremum_json(const Extremum& e) { return {{"value", e.value}, {"at", e.at}}; }

// Signed-derivative tracker: a sign change on the grid means a zero in between.
struct MonotoneTrack {
  Extremum min_abs{std::numeric_limits<double>::infinity(), {}};
  bool seen_pos = false, seen_neg = false;
  bool wants(double d) const {
    return std::fabs(d) < min_abs.value || (d > 0 && !seen_pos) || (d < 0 && !seen_neg);
  }
  void add(double d, const std::vector<double>& at) {
    if (d > 0) seen_pos = true;
    if (d < 0) seen_neg = true;
    if (std::fabs(d) < min_abs.value) min_abs = {std::fabs(d), at};
  }
  void merge(const MonotoneTrack& o) {
    seen_pos = seen_pos || o.seen_pos;
    seen_neg = seen_neg || o.seen_neg;
    if (o.min_abs.value < min_abs.value) min_abs = o.min_abs;
  }
  Extremum result() const {
    Extremum e = min_abs;
    if (seen_pos && seen_neg) e.value = 0.0;
    return e;
  }
};

struct ThetaScan {
  MonotoneTrack da, dc;
  Extremum max_abs{-1.0, {}};
};

}  // namespace

std::vector<BasePoint> probe_thetas(const ModelInstance& m, int n) {
  const BaseDynamics& b = m.base();
  std::vector<BasePoint> out;
  switch (b.kind()) {
    case BaseDynamics::Kind::FixedPoint:
      out.push_back(b.fixed());
      break;
    case BaseDynamics::Kind::ExplicitSequence:
      for (long k = b.window_min(); k <= b.window_max(); ++k) out.push_back(b.at(k, BasePoint{}));
      break;
    case BaseDynamics::Kind::Rotation: {
      const int d = b.dim();
      for (int i = 0; i < n; ++i) {
        BasePoint p;
        p.dim = d;
        if (d == 1) {
          p[0] = static_cast<double>(i) / n;
        } else {
          for (int j = 0; j < d; ++j) p[j] = kron(static_cast<std::size_t>(i), j);
        }
        out.push_back(p);
      }
      break;
    }
  }
  return out;
}

std::vector<std::pair<double, double>> band_intervals(const ModelInstance& m, const BasePoint& t,
                                                      double level, int samples) {
  const int n = std::max(samples, 2);
  std::vector<double> ys(static_cast<std::size_t>(n)), vs(ys.size());
  for (int i = 0; i < n; ++i) {
    ys[static_cast<std::size_t>(i)] = grid_point(i, n);
    vs[static_cast<std::size_t>(i)] = m.V(t, ys[static_cast<std::size_t>(i)]);
  }
  auto g = [&](double y) { return std::fabs(m.V(t, y)) - level; };
  auto v = [&](double y) { return m.V(t, y); };
  auto inside = [&](std::size_t i) { return std::fabs(vs[i]) <= level; };

  std::vector<std::pair<double, double>> out;
  std::size_t i = 0;
  const std::size_t last = ys.size() - 1;
  while (i <= last) {
    if (inside(i)) {
      double lo = ys[i];
      if (i > 0) lo = bisect(g, ys[i - 1], ys[i], g(ys[i - 1]), g(ys[i]));
      std::size_t j = i;
      while (j < last && inside(j + 1)) ++j;
      double hi = ys[j];
      if (j < last) hi = bisect(g, ys[j], ys[j + 1], g(ys[j]), g(ys[j + 1]));
      out.emplace_back(lo, hi);
      i = j + 1;
      continue;
    }
    // A band thinner than the grid spacing still shows up as a sign change.
    if (i < last && !inside(i + 1) && ((vs[i] < 0) != (vs[i + 1] < 0))) {
      const double r = bisect(v, ys[i], ys[i + 1], vs[i], vs[i + 1]);
      double lo = r, hi = r;
      if (level > 0) {
        if (g(ys[i]) > 0 && g(r) < 0) lo = bisect(g, ys[i], r, g(ys[i]), g(r));
        if (g(ys[i + 1]) > 0 && g(r) < 0) hi = bisect(g, r, ys[i + 1], g(r), g(ys[i + 1]));
      }
      out.emplace_back(lo, hi);
    }
    ++i;
  }
  return out;
}

ConditionReport verify_conditions(const ModelInstance& m, int grid, int workers) {
  if (grid < 64) throw ContractError("verify_conditions needs grid >= 64", {{"grid", grid}});
  ConditionReport r;
  r.grid = grid;
  r.epsilon0 = m.epsilon0();
  const std::vector<BasePoint> thetas = probe_thetas(m, grid);
  r.theta_samples = static_cast<int>(thetas.size());
  const bool two_d = m.mode() == Mode::TwoD;
  const int nc = two_d ? grid : 1;

  std::vector<ThetaScan> scans(thetas.size());
  parallel_for(thetas.size(), workers, [&](std::size_t ti) {
    const BasePoint& t = thetas[ti];
    ThetaScan& s = scans[ti];
    for (int ia = 0; ia < grid; ++ia) {
      const double a = grid_point(ia, grid);
      for (int ib = 0; ib < grid; ++ib) {
        const double b = grid_point(ib, grid);
        for (int ic = 0; ic < nc; ++ic) {
          const double c = two_d ? grid_point(ic, grid) : 0.0;
          const double z = m.Z(t, a, b, c);
          const auto gz = m.dZ(t, a, b, c);
          if (std::fabs(z) > s.max_abs.value) s.max_abs = {std::fabs(z), location(t, {a, b, c})};
          // Locations are only materialised when they might change the tracker.
          if (s.da.wants(gz[0])) s.da.add(gz[0], location(t, {a, b, c}));
          if (two_d && s.dc.wants(gz[2])) s.dc.add(gz[2], location(t, {a, b, c}));
        }
      }
    }
  });
  MonotoneTrack da, dc;
  r.max_abs_Z = {-1.0, {}};
  for (const ThetaScan& s : scans) {
    da.merge(s.da);
    dc.merge(s.dc);
    if (s.max_abs.value > r.max_abs_Z.value) r.max_abs_Z = s.max_abs;
  }
  r.min_abs_dZa = da.result();
  r.min_abs_dZc = two_d ? dc.result() : Extremum{0.0, {}};
  r.c1 = r.max_abs_Z.value < 1.0;
  r.c2 = r.min_abs_dZa.value > 0.0 && (!two_d || r.min_abs_dZc.value > 0.0);

  // Band V^{-1}([-eps0, eps0]) per sampled fiber.
  r.band.resize(thetas.size());
  const int band_samples = std::max(4 * grid, 1024) + 1;
  parallel_for(thetas.size(), workers, [&](std::size_t ti) {
    r.band[ti].theta = thetas[ti];
    r.band[ti].intervals = band_intervals(m, thetas[ti], r.epsilon0, band_samples);
  });
  r.surjective = true;
  r.t0 = std::numeric_limits<double>::infinity();
  r.t1 = -std::numeric_limits<double>::infinity();
  for (const BandSlice& s : r.band) {
    if (s.intervals.empty()) r.surjective = false;
    for (const auto& iv : s.intervals) {
      r.t0 = std::min(r.t0, iv.first);
      r.t1 = std::max(r.t1, iv.second);
    }
  }
  if (!std::isfinite(r.t0)) r.t0 = r.t1 = 0.0;
  r.c0 = r.surjective && r.t0 > -1.0 && r.t1 < 1.0;

  // Analytic partials against central differences on a 32-point probe.
  r.analytic_partials = m.coupling().has_analytic() || m.potential().has_analytic();
  double worst = 0.0;
  for (std::size_t i = 0; i < 32; ++i) {
    BasePoint t = thetas[i % thetas.size()];
    const double a = 2.0 * kron(i, 1) - 1.0, b = 2.0 * kron(i, 2) - 1.0,
                 c = two_d ? 2.0 * kron(i, 3) - 1.0 : 0.0;
    if (m.coupling().has_analytic()) {
      const auto an = m.coupling().grad(t, a, b, c);
      const auto fd = m.coupling().fd_gradient(t, a, b, c);
      for (int j = 0; j < (two_d ? 3 : 2); ++j)
        worst = std::max(worst, std::fabs(an[static_cast<std::size_t>(j)] - fd[static_cast<std::size_t>(j)]) /
                                    std::max(1.0, std::fabs(an[static_cast<std::size_t>(j)])));
    }
    if (m.potential().has_analytic()) {
      const double an = m.potential().dx(t, b);
      const double fd = m.potential().fd_derivative(t, b);
      worst = std::max(worst, std::fabs(an - fd) / std::max(1.0, std::fabs(an)));
    }
  }
  r.partials_max_rel_err = worst;
  r.partials_ok = worst <= 1e-4;
  return r;
}

nlohmann::json ConditionReport::to_json() const {
  nlohmann::json band_json = nlohmann::json::array();
  for (const BandSlice& s : band) {
    nlohmann::json iv = nlohmann::json::array();
    for (const auto& p : s.intervals) iv.push_back({p.first, p.second});
    band_json.push_back({{"theta", s.theta.to_vector()}, {"intervals", iv}});
  }
  return {{"grid", grid},
          {"theta_samples", theta_samples},
          {"min_abs_dZ_da", extremum_json(min_abs_dZa)},
          {"min_abs_dZ_dc", extremum_json(min_abs_dZc)},
          {"max_abs_Z", extremum_json(max_abs_Z)},
          {"epsilon0", epsilon0},
          {"band", band_json},
          {"t0", t0},
          {"t1", t1},
          {"surjective", surjective},
          {"analytic_partials", analytic_partials},
          {"partials_max_rel_err", partials_max_rel_err},
          {"conditions", {{"C0", c0}, {"C1", c1}, {"C2", c2}, {"partials", partials_ok}}},
          {"all_pass", all_pass()}};
}

double estimate_epsilon0(const ModelInstance& m, double margin) {
  if (!(margin > 0.0 && margin < 1.0))
    throw ContractError("margin must lie in (0, 1)", {{"margin", margin}});
  const std::vector<BasePoint> thetas = probe_thetas(m, 64);
  const int n = 4097;
  const double edge = 1.0 - margin;
  // Per fiber: the smallest |V| outside [-edge, edge] bounds eps0 from above;
  // the smallest |V| inside bounds it from below (band must be non-empty).
  double upper = std::numeric_limits<double>::infinity();
  double lower = 0.0;
  for (const BasePoint& t : thetas) {
    double out_min = std::min(std::fabs(m.V(t, edge)), std::fabs(m.V(t, -edge)));
    double in_min = out_min;
    double prev = m.V(t, -edge);
    for (int i = 0; i < n; ++i) {
      const double y = grid_point(i, n);
      const double v = m.V(t, y);
      if (std::fabs(y) > edge) {
        out_min = std::min(out_min, std::fabs(v));
      } else {
        in_min = std::min(in_min, std::fabs(v));
        if ((v < 0) != (prev < 0)) in_min = 0.0;
        prev = v;
      }
    }
    upper = std::min(upper, out_min);
    lower = std::max(lower, in_min);
  }
  auto admissible = [&](double e) { return e <= upper && e >= lower; };

  double lo = -1.0;
  for (int j = 40; j >= -40; --j) {
    const double e = std::ldexp(1.0, j);
    if (admissible(e)) {
      lo = e;
      break;
    }
  }
  if (lo < 1e-12) {
    throw DegeneratePotential("no admissible epsilon0 found down to 1e-12",
                              {{"margin", margin}, {"upper", upper}, {"lower", lower}});
  }
  double hi = 2.0 * lo;
  if (admissible(hi)) return hi;  // only when upper is infinite; cap the ladder
  while (hi - lo > 1e-3 * lo) {
    const double mid = 0.5 * (lo + hi);
    (admissible(mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace antilimit
