#include "cantor/cantor.hpp"
#include "core/text.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "core/errors.hpp"
#include "core/parallel.hpp"
#include "core/roots.hpp"
#include "orbits/orbits.hpp"

namespace antilimit {

namespace {

// Walks parent links back to the root and returns the branch choices.
std::vector<int> path_of(const RefinementTree& t, int level, int idx) {
  std::vector<int> path(static_cast<std::size_t>(level));
  for (int n = level; n > 0; --n) {
    const TreeNode& node = t.levels[static_cast<std::size_t>(n)][static_cast<std::size_t>(idx)];
    path[static_cast<std::size_t>(n - 1)] = node.branch;
    idx = node.parent;
  }
  return path;
}

void check_nesting(RefinementTree& t, int level, int dims) {
  for (const TreeNode& c : t.levels[static_cast<std::size_t>(level)]) {
    const TreeNode& p = t.levels[static_cast<std::size_t>(level - 1)][static_cast<std::size_t>(c.parent)];
    for (int d = 0; d < dims; ++d) {
      const auto sd = static_cast<std::size_t>(d);
      const double v = std::max({0.0, p.lo[sd] - c.lo[sd], c.hi[sd] - p.hi[sd]});
      t.max_nesting_violation = std::max(t.max_nesting_violation, v);
      if (v > 1e-10 + p.slack) t.nesting_ok = false;
    }
  }
}

void require_margin(const FiberReport& f, std::size_t idx) {
  if (f.count_almost_horizontal < 1)
    throw HypothesisError("fiber has no almost-horizontal component", {{"fiber", idx}});
  if (!(f.slope_margin > 0.0))
    throw HypothesisError("slope margin delta <= 0 on a fiber", {{"fiber", idx}, {"delta", f.slope_margin}});
}

}  // namespace

double RefinementTree::max_diameter(int n) const {
  double d = 0.0;
  for (const TreeNode& node : levels.at(static_cast<std::size_t>(n))) d = std::max(d, node.diameter);
  return d;
}

nlohmann::json RefinementTree::to_json() const {
  nlohmann::json lv = nlohmann::json::array();
  const int dims = dim == 1 ? 1 : 3;
  for (const auto& level : levels) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const TreeNode& n : level) {
      nlohmann::json box = nlohmann::json::array();
      for (int d = 0; d < dims; ++d) box.push_back({n.lo[static_cast<std::size_t>(d)], n.hi[static_cast<std::size_t>(d)]});
      nlohmann::json nj = {{"parent", n.parent}, {"branch", n.branch}, {"diameter", n.diameter}};
      if (dim == 1) {
        nj["interval"] = box[0];
      } else {
        nj["box"] = box;  // (x_{+1}, x_0, x_{-1})
        nj["slack"] = n.slack;
      }
      nodes.push_back(nj);
    }
    lv.push_back(nodes);
  }
  nlohmann::json j = {{"dim", dim},
                      {"depth", depth},
                      {"component_count", component_count},
                      {"branch_counts", branch_counts},
                      {"max_slope", max_slope},
                      {"delta_measured", delta_measured},
                      {"nesting_ok", nesting_ok},
                      {"max_nesting_violation", max_nesting_violation},
                      {"levels", lv}};
  if (dim == 2) {
    // Contraction in both directions: extents of x_{+1} and x_{-1} per level.
    nlohmann::json fwd = nlohmann::json::array(), bwd = nlohmann::json::array();
    for (const auto& level : levels) {
      double f = 0, b = 0;
      for (const TreeNode& n : level) {
        f = std::max(f, n.hi[0] - n.lo[0]);
        b = std::max(b, n.hi[2] - n.lo[2]);
      }
      fwd.push_back(f);
      bwd.push_back(b);
    }
    j["central"] = central;
    j["forward_extent"] = fwd;
    j["backward_extent"] = bwd;
  }
  return j;
}

std::string RefinementTree::depth_csv() const {
  std::string out = "depth,count,max_diameter\n";
  for (int n = 0; n <= depth; ++n)
    out += std::to_string(n) + "," + std::to_string(component_count[static_cast<std::size_t>(n)]) + "," +
           fmt17(max_diameter(n)) + "\n";
  return out;
}

std::vector<FiberReport> scan_fibers_1d(const ModelInstance& m, const BasePoint& theta0, long k0,
                                        int count, int grid, int workers) {
  const std::optional<double> frozen =
      m.mode() == Mode::TwoD ? std::optional<double>(0.0) : std::nullopt;
  if (m.base().kind() == BaseDynamics::Kind::FixedPoint) {
    FiberReport r = scan_fiber_1d(m, m.theta(k0, theta0), grid, frozen, workers);
    return std::vector<FiberReport>(static_cast<std::size_t>(count), r);
  }
  std::vector<FiberReport> out(static_cast<std::size_t>(count));
  parallel_for(out.size(), workers, [&](std::size_t i) {
    out[i] = scan_fiber_1d(m, m.theta(k0 + static_cast<long>(i), theta0), grid, frozen, 1);
  });
  return out;
}

std::vector<FiberReport> scan_fibers_2d(const ModelInstance& m, const BasePoint& theta0, long k0,
                                        int count, int slices, int grid, int workers) {
  if (m.base().kind() == BaseDynamics::Kind::FixedPoint) {
    FiberReport r = scan_fiber_2d(m, m.theta(k0, theta0), slices, grid, workers);
    return std::vector<FiberReport>(static_cast<std::size_t>(count), r);
  }
  std::vector<FiberReport> out(static_cast<std::size_t>(count));
  parallel_for(out.size(), workers, [&](std::size_t i) {
    out[i] = scan_fiber_2d(m, m.theta(k0 + static_cast<long>(i), theta0), slices, grid, 1);
  });
  return out;
}

RefinementTree refine_1d(const ModelInstance& m, const std::vector<FiberReport>& fibers,
                         const std::optional<Itinerary>& itinerary, int depth, int workers) {
  if (depth < 0) depth = static_cast<int>(fibers.size());
  if (static_cast<int>(fibers.size()) < depth)
    throw ContractError("refine_1d needs one fiber report per depth", {{"fibers", fibers.size()}, {"depth", depth}});
  std::vector<std::vector<const PlanarComponent*>> comps;
  RefinementTree t;
  t.dim = 1;
  t.depth = depth;
  for (int n = 0; n < depth; ++n) {
    const FiberReport& f = fibers[static_cast<std::size_t>(n)];
    if (f.mode != Mode::OneD) throw ContractError("refine_1d needs 1D fiber reports");
    require_margin(f, static_cast<std::size_t>(n));
    comps.push_back(f.almost_horizontal());
    t.max_slope = std::max(t.max_slope, 1.0 - f.slope_margin);
  }
  t.delta_measured = 1.0 - t.max_slope;
  if (itinerary) {
    if (static_cast<int>(itinerary->indices.size()) < depth)
      throw ContractError("itinerary shorter than the depth");
    for (int n = 0; n < depth; ++n) {
      const int j = itinerary->indices[static_cast<std::size_t>(n)];
      if (j < 0 || j >= static_cast<int>(comps[static_cast<std::size_t>(n)].size()))
        throw ContractError("itinerary index exceeds the component count", {{"fiber", n}, {"index", j}});
    }
  }

  // x_n = B_n(x_{n+1}): the y-root on component j of fiber n, fixed bracket.
  auto backward = [&](int n, int j, double x) {
    const FiberReport& f = fibers[static_cast<std::size_t>(n)];
    const PlanarComponent& c = *comps[static_cast<std::size_t>(n)][static_cast<std::size_t>(j)];
    const double frozen = f.frozen.value_or(0.0);
    auto g = [&](double y) { return m.f(f.theta, x, y, frozen); };
    const double lo = g(c.y_lo), hi = g(c.y_hi);
    if (lo == 0.0) return c.y_lo;
    if (hi == 0.0) return c.y_hi;
    if ((lo < 0) == (hi < 0)) return std::fabs(lo) <= std::fabs(hi) ? c.y_lo : c.y_hi;
    return bisect_full(g, c.y_lo, c.y_hi, lo, hi);
  };

  TreeNode root;
  root.lo[0] = -1.0;
  root.hi[0] = 1.0;
  root.diameter = 2.0;
  t.levels.push_back({root});
  t.component_count.push_back(1);
  for (int n = 0; n < depth; ++n) {
    const auto& parents = t.levels.back();
    std::vector<int> choices;
    if (itinerary) choices.push_back(itinerary->indices[static_cast<std::size_t>(n)]);
    else
      for (int j = 0; j < static_cast<int>(comps[static_cast<std::size_t>(n)].size()); ++j) choices.push_back(j);
    t.branch_counts.push_back(static_cast<int>(choices.size()));
    std::vector<TreeNode> level(parents.size() * choices.size());
    parallel_for(level.size(), workers, [&](std::size_t idx) {
      const int p = static_cast<int>(idx / choices.size());
      const int j = choices[idx % choices.size()];
      std::vector<int> path = path_of(t, n, p);
      path.push_back(j);
      double e[2] = {-1.0, 1.0};
      for (double& x : e)
        for (int s = n; s >= 0; --s) x = backward(s, path[static_cast<std::size_t>(s)], x);
      TreeNode& node = level[idx];
      node.parent = p;
      node.branch = j;
      node.lo[0] = std::min(e[0], e[1]);
      node.hi[0] = std::max(e[0], e[1]);
      node.diameter = node.hi[0] - node.lo[0];
    });
    t.levels.push_back(std::move(level));
    t.component_count.push_back(static_cast<long>(t.levels.back().size()));
    check_nesting(t, n + 1, 1);
  }
  return t;
}

RefinementTree refine_2d(const ModelInstance& m, const BasePoint& theta0,
                         const std::vector<FiberReport>& fibers,
                         const std::optional<Itinerary>& itinerary, int depth, int workers) {
  if (depth < 0) throw ContractError("depth must be non-negative");
  const std::size_t sites = 2 * static_cast<std::size_t>(depth) + 1;
  if (fibers.size() < sites)
    throw ContractError("refine_2d needs 2*depth+1 fiber reports", {{"fibers", fibers.size()}});
  m.require_small_epsilon("refine_2d");
  RefinementTree t;
  t.dim = 2;
  t.depth = depth;
  std::vector<std::vector<const SheetComponent*>> sheets(sites);
  for (std::size_t i = 0; i < sites; ++i) {
    if (fibers[i].mode != Mode::TwoD) throw ContractError("refine_2d needs 2D fiber reports");
    require_margin(fibers[i], i);
    for (const SheetComponent& s : fibers[i].sheets)
      if (s.almost_horizontal) sheets[i].push_back(&s);
    t.max_slope = std::max(t.max_slope, 1.0 - fibers[i].slope_margin);
  }
  t.delta_measured = 1.0 - t.max_slope;
  auto sheet_at = [&](long k, int j) -> const SheetComponent& {
    const auto& list = sheets[static_cast<std::size_t>(k + depth)];
    if (j < 0 || j >= static_cast<int>(list.size()))
      throw ContractError("itinerary index exceeds the sheet count", {{"site", k}, {"index", j}});
    return *list[static_cast<std::size_t>(j)];
  };
  auto fixed_choice = [&](long k) -> std::optional<int> {
    if (!itinerary) return std::nullopt;
    if (itinerary->indices.size() != sites) throw ContractError("2D itinerary needs 2*depth+1 entries");
    return itinerary->indices[static_cast<std::size_t>(k + depth)];
  };

  const int c0 = fixed_choice(0).value_or(0);
  const SheetComponent& centre = sheet_at(0, c0);
  t.central = {c0};
  TreeNode root;
  root.lo = {-1.0, centre.y_lo, -1.0};
  root.hi = {1.0, centre.y_hi, 1.0};
  root.diameter = centre.y_hi - centre.y_lo;
  t.levels.push_back({root});
  t.component_count.push_back(1);

  // A level-L node adds the sheet pair (jp, jm) at sites +L and -L, stored as
  // branch = jp * |J_{-L}| + jm.
  WindowOptions wopt;
  for (int L = 1; L <= depth; ++L) {
    std::vector<int> plus, minus;
    const auto np = static_cast<int>(sheets[static_cast<std::size_t>(L + depth)].size());
    const auto nm = static_cast<int>(sheets[static_cast<std::size_t>(-L + depth)].size());
    if (auto f = fixed_choice(L)) plus = {*f}; else for (int j = 0; j < np; ++j) plus.push_back(j);
    if (auto f = fixed_choice(-L)) minus = {*f}; else for (int j = 0; j < nm; ++j) minus.push_back(j);
    const std::size_t per = plus.size() * minus.size();
    t.branch_counts.push_back(static_cast<int>(per));
    const auto& parents = t.levels.back();
    std::vector<TreeNode> level(parents.size() * per);
    parallel_for(level.size(), workers, [&](std::size_t idx) {
      const int p = static_cast<int>(idx / per);
      const std::size_t q = idx % per;
      const int jp = plus[q / minus.size()], jm = minus[q % minus.size()];
      // Sheet choice for every site of the window.
      std::vector<int> choice(2 * static_cast<std::size_t>(L) + 1);
      choice[static_cast<std::size_t>(L)] = c0;
      std::vector<int> branches = path_of(t, L - 1, p);
      for (int s = 1; s < L; ++s) {
        const int b = branches[static_cast<std::size_t>(s - 1)];
        const auto nms = static_cast<int>(sheets[static_cast<std::size_t>(-s + depth)].size());
        choice[static_cast<std::size_t>(L + s)] = b / nms;
        choice[static_cast<std::size_t>(L - s)] = b % nms;
      }
      choice[static_cast<std::size_t>(2 * L)] = jp;
      choice[0] = jm;
      std::vector<double> seed(choice.size());
      for (int k = -L; k <= L; ++k) {
        const SheetComponent& s = sheet_at(k, choice[static_cast<std::size_t>(k + L)]);
        seed[static_cast<std::size_t>(k + L)] = 0.5 * (s.y_lo + s.y_hi);
      }
      std::array<double, 3> lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
      std::array<double, 3> clo = lo, chi = hi;
      for (int ia = -1; ia <= 1; ++ia)
        for (int ib = -1; ib <= 1; ++ib) {
          std::string status;
          auto sol = newton_window(m, theta0, L, ia, ib, seed, wopt, &status);
          if (!sol) {
            throw ResolutionError("sheet-graph evaluation failed in the window solve",
                                  {{"level", L}, {"boundary", {ia, ib}}, {"status", status}});
          }
          for (int k = -L; k <= L; ++k) {
            const SheetComponent& s = sheet_at(k, choice[static_cast<std::size_t>(k + L)]);
            const double x = (*sol)[static_cast<std::size_t>(k + L)];
            if (x < s.y_lo - 1e-9 || x > s.y_hi + 1e-9)
              throw ResolutionError("window solution left its itinerary sheet",
                                    {{"level", L}, {"site", k}, {"x", x}, {"sheet", {s.y_lo, s.y_hi}}});
          }
          const std::array<double, 3> pt = {(*sol)[static_cast<std::size_t>(L + 1)], (*sol)[static_cast<std::size_t>(L)],
                                            (*sol)[static_cast<std::size_t>(L - 1)]};
          const bool corner = ia != 0 && ib != 0;
          for (std::size_t d = 0; d < 3; ++d) {
            lo[d] = std::min(lo[d], pt[d]);
            hi[d] = std::max(hi[d], pt[d]);
            if (corner) {
              clo[d] = std::min(clo[d], pt[d]);
              chi[d] = std::max(chi[d], pt[d]);
            }
          }
        }
      TreeNode& node = level[idx];
      node.parent = p;
      node.branch = jp * nm + jm;
      node.lo = lo;
      node.hi = hi;
      node.diameter = hi[1] - lo[1];
      for (std::size_t d = 0; d < 3; ++d)
        node.slack = std::max(node.slack, (hi[d] - lo[d]) - (chi[d] - clo[d]));
    });
    t.levels.push_back(std::move(level));
    t.component_count.push_back(static_cast<long>(t.levels.back().size()));
    check_nesting(t, L, 3);
  }
  return t;
}

CantorCertificate certify(const RefinementTree& tree, double delta_claim, double rho) {
  if (tree.depth < 3) throw ContractError("certify needs depth >= 3", {{"depth", tree.depth}});
  CantorCertificate c;
  c.depth = tree.depth;
  c.delta_claim = delta_claim;
  c.rho = rho;
  c.max_diameter = tree.max_diameter(tree.depth);
  c.claim_bound = 2.0 * std::pow(1.0 - delta_claim, tree.depth);
  c.delta_measured = tree.delta_measured;
  c.contraction_bound = 2.0 * std::pow(1.0 - tree.delta_measured, tree.depth);
  c.diameter_ok = c.max_diameter <= c.claim_bound;
  c.nesting_ok = tree.nesting_ok;

  long expect = 1;
  c.count_ok = tree.component_count.front() == 1;
  for (int n = 1; n <= tree.depth; ++n) {
    expect *= tree.branch_counts[static_cast<std::size_t>(n - 1)];
    if (tree.component_count[static_cast<std::size_t>(n)] != expect) c.count_ok = false;
  }

  const int dims = tree.dim == 1 ? 1 : 3;
  c.min_gap = std::numeric_limits<double>::infinity();
  bool gaps_positive = true;
  for (int n = 1; n <= tree.depth; ++n) {
    if (tree.branch_counts[static_cast<std::size_t>(n - 1)] < 2) continue;
    c.split_depths.push_back(n);
    const auto& level = tree.levels[static_cast<std::size_t>(n)];
    const auto& parents = tree.levels[static_cast<std::size_t>(n - 1)];
    std::vector<std::vector<int>> kids(parents.size());
    for (std::size_t i = 0; i < level.size(); ++i) kids[static_cast<std::size_t>(level[i].parent)].push_back(static_cast<int>(i));
    for (const auto& sib : kids) {
      if (sib.size() < 2) gaps_positive = false;
      for (std::size_t a = 0; a < sib.size(); ++a)
        for (std::size_t b = a + 1; b < sib.size(); ++b) {
          const TreeNode& x = level[static_cast<std::size_t>(sib[a])];
          const TreeNode& y = level[static_cast<std::size_t>(sib[b])];
          double gap = -std::numeric_limits<double>::infinity();
          for (int d = 0; d < dims; ++d) {
            const auto sd = static_cast<std::size_t>(d);
            gap = std::max(gap, std::max(x.lo[sd] - y.hi[sd], y.lo[sd] - x.hi[sd]));
          }
          c.min_gap = std::min(c.min_gap, gap);
        }
    }
  }
  if (c.split_depths.empty()) c.min_gap = 0.0;
  c.required_splits = static_cast<int>(std::ceil(rho * tree.depth - 1e-12));
  c.split_ok = gaps_positive && !c.split_depths.empty() && c.min_gap > 0.0 &&
               static_cast<int>(c.split_depths.size()) >= c.required_splits;

  // log(count) against -log(diameter) over depths 3..n.
  std::vector<double> xs, ys;
  for (int n = 3; n <= tree.depth; ++n) {
    const double d = tree.max_diameter(n);
    if (d <= 0.0) continue;
    xs.push_back(-std::log(d));
    ys.push_back(std::log(static_cast<double>(tree.component_count[static_cast<std::size_t>(n)])));
  }
  c.box_dim_points = static_cast<int>(xs.size());
  if (xs.size() >= 2) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      mx += xs[i];
      my += ys[i];
    }
    mx /= static_cast<double>(xs.size());
    my /= static_cast<double>(xs.size());
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxx += (xs[i] - mx) * (xs[i] - mx);
      sxy += (xs[i] - mx) * (ys[i] - my);
    }
    c.box_dim_estimate = sxx > 0 ? sxy / sxx : 0.0;
    double ss = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double e = ys[i] - (my + c.box_dim_estimate * (xs[i] - mx));
      ss += e * e;
    }
    c.box_dim_residual = std::sqrt(ss / static_cast<double>(xs.size()));
  }
  return c;
}

nlohmann::json CantorCertificate::to_json() const {
  return {{"depth", depth},
          {"max_diameter", max_diameter},
          {"delta_claim", delta_claim},
          {"claim_bound", claim_bound},
          {"delta_measured", delta_measured},
          {"contraction_bound", contraction_bound},
          {"min_gap", min_gap},
          {"split_depths", split_depths},
          {"split_density", rho},
          {"required_splits", required_splits},
          {"split_surrogate", "finite depth: splits required at ceil(rho * depth) levels"},
          {"box_dim_estimate", box_dim_estimate},
          {"box_dim_fit_residual", box_dim_residual},
          {"box_dim_points", box_dim_points},
          {"clauses", {{"diameter", diameter_ok}, {"split", split_ok}, {"nesting", nesting_ok}, {"count", count_ok}}},
          {"pass", pass()}};
}

}  // namespace antilimit
