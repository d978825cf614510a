#include <algorithm>
#include <cmath>
#include <limits>

#include "core/errors.hpp"
#include "core/parallel.hpp"
#include "core/roots.hpp"
#include "levelset/levelset.hpp"

namespace antilimit {

const char* to_string(Wall w) {
  switch (w) {
    case Wall::Left: return "left";
    case Wall::Right: return "right";
    case Wall::Top: return "top";
    case Wall::Bottom: return "bottom";
    case Wall::Closed: return "closed";
  }
  return "closed";
}

std::optional<double> PlanarComponent::y_at(double h) const {
  if (polyline.size() == 1) {
    if (polyline[0][0] == h) return polyline[0][1];
    return std::nullopt;
  }
  for (std::size_t i = 0; i + 1 < polyline.size(); ++i) {
    const Point2& p = polyline[i];
    const Point2& q = polyline[i + 1];
    const double lo = std::min(p[0], q[0]), hi = std::max(p[0], q[0]);
    if (h < lo || h > hi) continue;
    if (hi == lo) return p[1];
    const double t = (h - p[0]) / (q[0] - p[0]);
    return p[1] + t * (q[1] - p[1]);
  }
  return std::nullopt;
}

namespace {

enum class Source { Edge, U, W };

struct Breakpoint {
  double y;
  Source src;
};

// A wall function whose sampled values have a local extremum within one
// cell-variation of zero may hide two roots in a cell.
void check_tangency(const std::vector<double>& ys, const std::vector<double>& vals, const char* wall) {
  for (std::size_t i = 1; i + 1 < vals.size(); ++i) {
    const double d0 = vals[i] - vals[i - 1];
    const double d1 = vals[i + 1] - vals[i];
    if ((d0 > 0 && d1 < 0) || (d0 < 0 && d1 > 0)) {
      if (std::fabs(vals[i]) <= std::max(std::fabs(d0), std::fabs(d1))) {
        throw ResolutionError("near-tangency of the zero set with a wall; refine the grid",
                              {{"wall", wall}, {"y", ys[i]}, {"value", vals[i]},
                               {"spacing", ys[1] - ys[0]}});
      }
    }
  }
}

void add_roots(const std::vector<double>& ys, const std::vector<double>& vals,
               const std::function<double(double)>& fn, Source src, std::vector<Breakpoint>& out) {
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (vals[i] == 0.0) {
      out.push_back({ys[i], src});
    } else if (i + 1 < vals.size() && vals[i + 1] != 0.0 && ((vals[i] < 0) != (vals[i + 1] < 0))) {
      out.push_back({bisect_full(fn, ys[i], ys[i + 1], vals[i], vals[i + 1]), src});
    }
  }
}

void finish_component(PlanarComponent& c, const PlanarProblem& p) {
  auto& pl = c.polyline;
  std::sort(pl.begin(), pl.end(), [](const Point2& a, const Point2& b) {
    return a[1] < b[1] || (a[1] == b[1] && a[0] < b[0]);
  });
  std::vector<Point2> dedup;
  for (const Point2& q : pl) {
    if (!dedup.empty() && std::fabs(dedup.back()[0] - q[0]) < 1e-12 &&
        std::fabs(dedup.back()[1] - q[1]) < 1e-12)
      continue;
    dedup.push_back(q);
  }
  pl.swap(dedup);

  c.x_lo = c.x_hi = pl.front()[0];
  for (const Point2& q : pl) {
    c.x_lo = std::min(c.x_lo, q[0]);
    c.x_hi = std::max(c.x_hi, q[0]);
    c.max_residual = std::max(c.max_residual, std::fabs(p.F(q[0], q[1])));
    const double fy = p.dFdy(q[0], q[1]);
    const double s = fy == 0.0 ? std::numeric_limits<double>::infinity()
                               : std::fabs(p.dFdh(q[0], q[1]) / fy);
    c.max_abs_slope_implicit = std::max(c.max_abs_slope_implicit, s);
  }
  const std::size_t n = pl.size();
  c.max_abs_slope = 0.0;
  if (n >= 2) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t a = i == 0 ? 0 : i - 1;
      const std::size_t b = i + 1 == n ? n - 1 : i + 1;
      const double dx = pl[b][0] - pl[a][0];
      const double dy = pl[b][1] - pl[a][1];
      const double s = dx == 0.0 ? (dy == 0.0 ? 0.0 : std::numeric_limits<double>::infinity())
                                 : std::fabs(dy / dx);
      c.max_abs_slope = std::max(c.max_abs_slope, s);
    }
  }
  bool inc = true, dec = true;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (!(pl[i + 1][0] > pl[i][0])) inc = false;
    if (!(pl[i + 1][0] < pl[i][0])) dec = false;
  }
  c.graph_over_x = n >= 2 && (inc || dec);
  c.touches_wall_inside = false;
  for (std::size_t i = 1; i + 1 < n; ++i)
    if (std::fabs(pl[i][0]) >= 1.0 - 1e-12 || std::fabs(pl[i][1]) >= 1.0) c.touches_wall_inside = true;
  const auto [e0, e1] = c.endpoints;
  const bool lr = (e0 == Wall::Left && e1 == Wall::Right) || (e0 == Wall::Right && e1 == Wall::Left);
  c.almost_horizontal = lr && !c.touches_wall_inside;
}

double sort_key(const PlanarComponent& c) {
  const auto y0 = c.y_at(0.0);
  return y0 ? *y0 : 0.5 * (c.y_lo + c.y_hi);
}

std::vector<PlanarComponent> horizontal_lines(const PlanarProblem& p, const ScanOptions& opt) {
  std::vector<PlanarComponent> out;
  auto v = [&](double y) { return p.F(0.0, y); };
  for (double y : bracket_roots(v, -1.0, 1.0, opt.grid, 0.0)) {
    PlanarComponent c;
    for (int i = 0; i <= opt.grid; ++i) c.polyline.push_back({-1.0 + 2.0 * i / opt.grid, y});
    c.endpoints = {Wall::Left, Wall::Right};
    c.y_lo = c.y_hi = y;
    finish_component(c, p);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

std::vector<PlanarComponent> scan_planar(const PlanarProblem& p, const ScanOptions& opt) {
  const int n = opt.grid;
  if (n < 8) throw ContractError("scan grid must be at least 8", {{"grid", n}});
  std::vector<double> ys(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) ys[static_cast<std::size_t>(i)] = i == n ? 1.0 : -1.0 + 2.0 * i / n;

  // Orientation of the monotone horizontal dependence.
  bool pos = false, neg = false;
  const int mg = 64;
  for (int i = 0; i <= mg; ++i)
    for (int j = 0; j <= mg; ++j) {
      const double d = p.dFdh(-1.0 + 2.0 * i / mg, -1.0 + 2.0 * j / mg);
      if (d > 0) pos = true;
      if (d < 0) neg = true;
    }
  if (pos && neg)
    throw HypothesisError("zero set is not monotone in the horizontal variable (dF/dh changes sign)");
  if (!pos && !neg) return horizontal_lines(p, opt);
  const double s = pos ? 1.0 : -1.0;

  auto u = [&](double y) { return s * p.F(-1.0, y); };
  auto w = [&](double y) { return s * p.F(1.0, y); };
  std::vector<double> us(ys.size()), ws(ys.size());
  for (std::size_t i = 0; i < ys.size(); ++i) {
    us[i] = u(ys[i]);
    ws[i] = w(ys[i]);
  }
  check_tangency(ys, us, "left");
  check_tangency(ys, ws, "right");

  std::vector<Breakpoint> bps{{-1.0, Source::Edge}, {1.0, Source::Edge}};
  add_roots(ys, us, u, Source::U, bps);
  add_roots(ys, ws, w, Source::W, bps);
  std::stable_sort(bps.begin(), bps.end(), [](const Breakpoint& a, const Breakpoint& b) { return a.y < b.y; });
  std::vector<Breakpoint> uniq;
  for (const Breakpoint& b : bps) {
    if (!uniq.empty() && uniq.back().y == b.y) {
      if (uniq.back().src == Source::Edge) uniq.back() = b;  // a wall root at a corner wins
      continue;
    }
    uniq.push_back(b);
  }
  auto member = [&](double y) { return u(y) <= 0.0 && w(y) >= 0.0; };

  struct Span {
    Breakpoint lo, hi;
  };
  std::vector<Span> spans;
  for (std::size_t k = 0; k + 1 < uniq.size(); ++k) {
    if (!member(0.5 * (uniq[k].y + uniq[k + 1].y))) continue;
    if (!spans.empty() && spans.back().hi.y == uniq[k].y) {
      spans.back().hi = uniq[k + 1];
    } else {
      spans.push_back({uniq[k], uniq[k + 1]});
    }
  }

  auto root_x = [&](double y) {
    const double a = u(y), b = w(y);
    if (a >= 0.0) return -1.0;
    if (b <= 0.0) return 1.0;
    return bisect_full([&](double x) { return s * p.F(x, y); }, -1.0, 1.0, a, b);
  };

  std::vector<PlanarComponent> comps(spans.size());
  for (std::size_t ci = 0; ci < spans.size(); ++ci) {
    const Span& sp = spans[ci];
    PlanarComponent& c = comps[ci];
    c.y_lo = sp.lo.y;
    c.y_hi = sp.hi.y;
    auto tag = [](const Breakpoint& b, Wall edge) {
      return b.src == Source::U ? Wall::Left : b.src == Source::W ? Wall::Right : edge;
    };
    c.endpoints = {tag(sp.lo, Wall::Bottom), tag(sp.hi, Wall::Top)};
    auto end_x = [&](const Breakpoint& b) {
      return b.src == Source::U ? -1.0 : b.src == Source::W ? 1.0 : root_x(b.y);
    };
    c.polyline.push_back({end_x(sp.lo), sp.lo.y});
    for (double y : ys)
      if (y > sp.lo.y && y < sp.hi.y) c.polyline.push_back({root_x(y), y});
    c.polyline.push_back({end_x(sp.hi), sp.hi.y});
  }

  // Column roots: for each grid abscissa, every y-root of F(x, .).
  std::vector<std::vector<double>> cols(ys.size());
  parallel_for(ys.size(), opt.workers, [&](std::size_t i) {
    const double x = ys[i];
    cols[i] = bracket_roots([&](double y) { return p.F(x, y); }, -1.0, 1.0, n, 0.0);
  });
  for (std::size_t i = 0; i < ys.size(); ++i) {
    for (double y : cols[i]) {
      for (PlanarComponent& c : comps) {
        if (y > c.y_lo && y < c.y_hi) {
          c.polyline.push_back({ys[i], y});
          break;
        }
      }
    }
  }

  for (PlanarComponent& c : comps) {
    finish_component(c, p);
    if (c.max_residual > opt.res_tol) {
      throw ResolutionError("polyline point exceeds the residual tolerance",
                            {{"max_residual", c.max_residual}, {"tolerance", opt.res_tol},
                             {"y_range", {c.y_lo, c.y_hi}}});
    }
  }
  std::stable_sort(comps.begin(), comps.end(),
                   [](const PlanarComponent& a, const PlanarComponent& b) { return sort_key(a) < sort_key(b); });
  return comps;
}

namespace {

void summarize(FiberReport& r, const std::vector<const PlanarComponent*>& ah,
               const std::vector<const PlanarComponent*>& all) {
  r.count_almost_horizontal = static_cast<int>(ah.size());
  double smax = 0.0;
  r.min_projection_width = ah.empty() ? 0.0 : std::numeric_limits<double>::infinity();
  for (const PlanarComponent* c : ah) {
    smax = std::max(smax, c->max_abs_slope);
    r.min_projection_width = std::min(r.min_projection_width, c->y_width());
  }
  r.slope_margin = (!ah.empty() && smax < 1.0) ? 1.0 - smax : 0.0;
  // Union of horizontal projections must cover I.
  std::vector<std::pair<double, double>> iv;
  for (const PlanarComponent* c : all) iv.emplace_back(c->x_lo, c->x_hi);
  std::sort(iv.begin(), iv.end());
  double reach = -1.0;
  bool started = false;
  for (const auto& [lo, hi] : iv) {
    if (lo > reach + 1e-12 && (started || lo > -1.0 + 1e-12)) break;
    started = true;
    reach = std::max(reach, hi);
  }
  r.x_coverage = started && reach >= 1.0 - 1e-12;
  r.resolution_failure = r.epsilon != 0.0 && ah.empty();
}

PlanarProblem fiber_problem(const ModelInstance& m, const BasePoint& t, double c) {
  const double eps = m.epsilon();
  PlanarProblem p;
  p.F = [&m, t, c](double x, double y) { return m.f(t, x, y, c); };
  p.dFdh = [&m, t, c, eps](double x, double y) { return eps * m.dZ(t, x, y, c)[0]; };
  p.dFdy = [&m, t, c, eps](double x, double y) { return eps * m.dZ(t, x, y, c)[1] + m.dV(t, y); };
  return p;
}

}  // namespace

std::vector<const PlanarComponent*> FiberReport::almost_horizontal() const {
  std::vector<const PlanarComponent*> out;
  for (const PlanarComponent& c : components)
    if (c.almost_horizontal) out.push_back(&c);
  return out;
}

FiberReport scan_fiber_1d(const ModelInstance& m, const BasePoint& theta, int grid,
                          std::optional<double> frozen, int workers) {
  if (m.mode() == Mode::TwoD && !frozen)
    throw ContractError("scan_fiber_1d on a 2D model needs a frozen third argument");
  FiberReport r;
  r.theta = theta;
  r.epsilon = m.epsilon();
  r.mode = Mode::OneD;
  r.grid = grid;
  r.frozen = frozen;
  const double c = frozen.value_or(0.0);
  ScanOptions opt;
  opt.grid = grid;
  opt.workers = workers;
  r.components = scan_planar(fiber_problem(m, theta, c), opt);
  std::vector<const PlanarComponent*> all;
  for (const PlanarComponent& pc : r.components) all.push_back(&pc);
  summarize(r, r.almost_horizontal(), all);
  return r;
}

double hausdorff(const std::vector<Point2>& a, const std::vector<Point2>& b) {
  auto directed = [](const std::vector<Point2>& p, const std::vector<Point2>& q) {
    double worst = 0.0;
    for (const Point2& x : p) {
      double best = std::numeric_limits<double>::infinity();
      for (const Point2& y : q) best = std::min(best, std::hypot(x[0] - y[0], x[1] - y[1]));
      worst = std::max(worst, best);
    }
    return worst;
  };
  if (a.empty() || b.empty()) return std::numeric_limits<double>::infinity();
  return std::max(directed(a, b), directed(b, a));
}

}  // namespace antilimit
