#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

#include "core/errors.hpp"
#include "core/parallel.hpp"
#include "core/roots.hpp"
#include "levelset/levelset.hpp"

namespace antilimit {

namespace {

struct DisjointSet {
  std::vector<int> parent;
  explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
};

int containing_leaf(const std::vector<PlanarComponent>& leaves, double y, double tol) {
  for (std::size_t i = 0; i < leaves.size(); ++i)
    if (y >= leaves[i].y_lo - tol && y <= leaves[i].y_hi + tol) return static_cast<int>(i);
  return -1;
}

// Greedy one-to-one matching of leaves in adjacent slices by y-overlap.
std::vector<std::pair<int, int>> match_adjacent(const std::vector<PlanarComponent>& a,
                                                const std::vector<PlanarComponent>& b, double max_dist) {
  struct Cand {
    double score, dmid;
    int i, j;
  };
  std::vector<Cand> cands;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double overlap = std::min(a[i].y_hi, b[j].y_hi) - std::max(a[i].y_lo, b[j].y_lo);
      const double dmid = std::fabs(0.5 * (a[i].y_lo + a[i].y_hi) - 0.5 * (b[j].y_lo + b[j].y_hi));
      if (overlap < -max_dist) continue;
      cands.push_back({overlap, dmid, static_cast<int>(i), static_cast<int>(j)});
    }
  std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
    return std::tie(y.score, x.dmid, x.i, x.j) < std::tie(x.score, y.dmid, y.i, y.j);
  });
  std::vector<char> used_a(a.size(), 0), used_b(b.size(), 0);
  std::vector<std::pair<int, int>> out;
  for (const Cand& c : cands) {
    if (used_a[static_cast<std::size_t>(c.i)] || used_b[static_cast<std::size_t>(c.j)]) continue;
    if (hausdorff(a[static_cast<std::size_t>(c.i)].polyline, b[static_cast<std::size_t>(c.j)].polyline) >= max_dist)
      continue;
    used_a[static_cast<std::size_t>(c.i)] = used_b[static_cast<std::size_t>(c.j)] = 1;
    out.emplace_back(c.i, c.j);
  }
  return out;
}

}  // namespace

FiberReport scan_fiber_2d(const ModelInstance& m, const BasePoint& theta, int slices, int grid,
                          int workers) {
  if (m.mode() != Mode::TwoD) throw ContractError("scan_fiber_2d needs a 2D model");
  if (m.epsilon() == 0.0)
    throw ContractError("scan_fiber_2d needs epsilon != 0 (transversality of the foliations)");
  if (slices < 9) throw ContractError("scan_fiber_2d needs at least 9 slices", {{"slices", slices}});

  FiberReport r;
  r.theta = theta;
  r.epsilon = m.epsilon();
  r.mode = Mode::TwoD;
  r.grid = grid;
  r.slices = slices;
  for (int j = 0; j < slices; ++j) r.slice_grid.push_back(j == slices - 1 ? 1.0 : -1.0 + 2.0 * j / (slices - 1));
  const double spacing = 2.0 / (slices - 1);
  const double eps = m.epsilon();
  r.slices_z.resize(static_cast<std::size_t>(slices));
  r.slices_x.resize(static_cast<std::size_t>(slices));

  ScanOptions opt;
  opt.grid = grid;
  parallel_for(2 * static_cast<std::size_t>(slices), workers, [&](std::size_t task) {
    const std::size_t j = task % static_cast<std::size_t>(slices);
    const double c = r.slice_grid[j];
    PlanarProblem p;
    if (task < static_cast<std::size_t>(slices)) {
      p.F = [&, c](double x, double y) { return m.f(theta, x, y, c); };
      p.dFdh = [&, c](double x, double y) { return eps * m.dZ(theta, x, y, c)[0]; };
      p.dFdy = [&, c](double x, double y) { return eps * m.dZ(theta, x, y, c)[1] + m.dV(theta, y); };
      r.slices_z[j] = scan_planar(p, opt);
    } else {
      p.F = [&, c](double z, double y) { return m.f(theta, c, y, z); };
      p.dFdh = [&, c](double z, double y) { return eps * m.dZ(theta, c, y, z)[2]; };
      p.dFdy = [&, c](double z, double y) { return eps * m.dZ(theta, c, y, z)[1] + m.dV(theta, y); };
      r.slices_x[j] = scan_planar(p, opt);
    }
  });

  // Global leaf numbering: z-slice leaves first, then x-slice leaves.
  std::vector<std::vector<int>> first(2, std::vector<int>(static_cast<std::size_t>(slices)));
  std::vector<std::pair<int, int>> where;
  int total = 0;
  for (int fam = 0; fam < 2; ++fam)
    for (int j = 0; j < slices; ++j) {
      const auto& leaves = fam == 0 ? r.slices_z[static_cast<std::size_t>(j)] : r.slices_x[static_cast<std::size_t>(j)];
      first[static_cast<std::size_t>(fam)][static_cast<std::size_t>(j)] = total;
      for (std::size_t k = 0; k < leaves.size(); ++k) where.emplace_back(fam, j);
      total += static_cast<int>(leaves.size());
    }
  DisjointSet ds(static_cast<std::size_t>(total));
  auto gid = [&](int fam, int j, int k) { return first[static_cast<std::size_t>(fam)][static_cast<std::size_t>(j)] + k; };

  // Adjacent-slice matching within each family.
  std::vector<std::vector<std::pair<int, int>>> links_z(static_cast<std::size_t>(slices)), links_x(static_cast<std::size_t>(slices));
  for (int j = 0; j + 1 < slices; ++j) {
    const auto sj = static_cast<std::size_t>(j);
    links_z[sj] = match_adjacent(r.slices_z[sj], r.slices_z[sj + 1], 10.0 * spacing);
    links_x[sj] = match_adjacent(r.slices_x[sj], r.slices_x[sj + 1], 10.0 * spacing);
    for (auto [a, b] : links_z[sj]) ds.unite(gid(0, j, a), gid(0, j + 1, b));
    for (auto [a, b] : links_x[sj]) ds.unite(gid(1, j, a), gid(1, j + 1, b));
  }

  // Crossings: each root y of f(c_i, y, c_j) lies on one leaf of z = c_j and one of x = c_i.
  for (int i = 0; i < slices; ++i)
    for (int j = 0; j < slices; ++j) {
      const double ci = r.slice_grid[static_cast<std::size_t>(i)], cj = r.slice_grid[static_cast<std::size_t>(j)];
      for (double y : bracket_roots([&](double yy) { return m.f(theta, ci, yy, cj); }, -1.0, 1.0, grid, 0.0)) {
        const int lz = containing_leaf(r.slices_z[static_cast<std::size_t>(j)], y, 1e-8);
        const int lx = containing_leaf(r.slices_x[static_cast<std::size_t>(i)], y, 1e-8);
        if (lz < 0 || lx < 0) {
          throw ResolutionError("leaf matching failed: a crossing point lies on no traced leaf",
                                {{"x", ci}, {"z", cj}, {"y", y}});
        }
        ds.unite(gid(0, j, lz), gid(1, i, lx));
      }
    }

  // Sheets from the union-find classes, numbered by their smallest leaf id.
  std::vector<int> sheet_of(static_cast<std::size_t>(total), -1);
  for (int g = 0; g < total; ++g) {
    const int root = ds.find(g);
    if (sheet_of[static_cast<std::size_t>(root)] < 0) {
      sheet_of[static_cast<std::size_t>(root)] = static_cast<int>(r.sheets.size());
      SheetComponent s;
      s.slice_grid = r.slice_grid;
      s.leaves_x.resize(static_cast<std::size_t>(slices));
      s.leaves_z.resize(static_cast<std::size_t>(slices));
      s.y_lo = std::numeric_limits<double>::infinity();
      s.y_hi = -std::numeric_limits<double>::infinity();
      r.sheets.push_back(std::move(s));
    }
    SheetComponent& s = r.sheets[static_cast<std::size_t>(sheet_of[static_cast<std::size_t>(root)])];
    const auto [fam, j] = where[static_cast<std::size_t>(g)];
    const int k = g - first[static_cast<std::size_t>(fam)][static_cast<std::size_t>(j)];
    const PlanarComponent& leaf =
        fam == 0 ? r.slices_z[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)]
                 : r.slices_x[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
    (fam == 0 ? s.leaves_x : s.leaves_z)[static_cast<std::size_t>(j)].push_back(k);
    s.max_leaf_slope = std::max(s.max_leaf_slope, leaf.max_abs_slope);
    s.y_lo = std::min(s.y_lo, leaf.y_lo);
    s.y_hi = std::max(s.y_hi, leaf.y_hi);
  }

  for (SheetComponent& s : r.sheets) {
    bool ah = true;
    for (int j = 0; j < slices; ++j) {
      const auto sj = static_cast<std::size_t>(j);
      if (s.leaves_x[sj].size() != 1 || s.leaves_z[sj].size() != 1) {
        ah = false;
        continue;
      }
      if (!r.slices_z[sj][static_cast<std::size_t>(s.leaves_x[sj][0])].almost_horizontal) ah = false;
      if (!r.slices_x[sj][static_cast<std::size_t>(s.leaves_z[sj][0])].almost_horizontal) ah = false;
    }
    // Continuity between consecutive single leaves of each family.
    for (int fam = 0; fam < 2; ++fam)
      for (int j = 0; j + 1 < slices; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        const auto& ids = fam == 0 ? s.leaves_x : s.leaves_z;
        const auto& fam_leaves = fam == 0 ? r.slices_z : r.slices_x;
        for (int a : ids[sj])
          for (int b : ids[sj + 1]) {
            const double h = hausdorff(fam_leaves[sj][static_cast<std::size_t>(a)].polyline,
                                       fam_leaves[sj + 1][static_cast<std::size_t>(b)].polyline);
            if (ids[sj].size() == 1 && ids[sj + 1].size() == 1) {
              s.max_adjacent_hausdorff = std::max(s.max_adjacent_hausdorff, h);
              if (!(h < 10.0 * spacing)) s.continuous = false;
            }
          }
      }
    s.almost_horizontal = ah && s.continuous;
  }
  std::stable_sort(r.sheets.begin(), r.sheets.end(), [](const SheetComponent& a, const SheetComponent& b) {
    return a.y_lo + a.y_hi < b.y_lo + b.y_hi;
  });

  double smax = 0.0;
  r.count_almost_horizontal = 0;
  r.min_projection_width = std::numeric_limits<double>::infinity();
  for (const SheetComponent& s : r.sheets) {
    if (!s.almost_horizontal) continue;
    ++r.count_almost_horizontal;
    smax = std::max(smax, s.max_leaf_slope);
    r.min_projection_width = std::min(r.min_projection_width, s.y_hi - s.y_lo);
  }
  if (r.count_almost_horizontal == 0) r.min_projection_width = 0.0;
  r.slope_margin = (r.count_almost_horizontal > 0 && smax < 1.0) ? 1.0 - smax : 0.0;
  r.x_coverage = r.count_almost_horizontal > 0;
  r.resolution_failure = r.count_almost_horizontal == 0;
  return r;
}

}  // namespace antilimit
