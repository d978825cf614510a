#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "core/text.hpp"
#include "levelset/levelset.hpp"

namespace antilimit {

namespace {

struct BoxConstants {
  double K1 = std::numeric_limits<double>::infinity();
  double K2 = 0.0;
};

// K1 = min |dZ/da| and K2 = max |dZ/db + V'/eps| over a 33 x 33 sample of the box.
BoxConstants box_constants(const ModelInstance& m, const BasePoint& t, double c, double x_lo,
                           double x_hi, double y_lo, double y_hi) {
  BoxConstants k;
  const double eps = m.epsilon();
  const int n = 33;
  for (int i = 0; i < n; ++i) {
    const double x = x_lo + (x_hi - x_lo) * i / (n - 1);
    for (int j = 0; j < n; ++j) {
      const double y = y_lo + (y_hi - y_lo) * j / (n - 1);
      const auto g = m.dZ(t, x, y, c);
      k.K1 = std::min(k.K1, std::fabs(g[0]));
      const double k2 = eps == 0.0 ? std::numeric_limits<double>::infinity()
                                   : std::fabs(g[1] + m.dV(t, y) / eps);
      k.K2 = std::max(k.K2, k2);
    }
  }
  return k;
}

ComponentBound component_bound(const ModelInstance& m, const BasePoint& t, double c,
                               const PlanarComponent& pc, int index) {
  ComponentBound b;
  b.index = index;
  b.width = pc.y_width();
  const BoxConstants k = box_constants(m, t, c, pc.x_lo, pc.x_hi, pc.y_lo, pc.y_hi);
  b.K1 = k.K1;
  b.K2 = k.K2;
  b.bound = k.K2 > 0.0 ? 2.0 * k.K1 / k.K2 : std::numeric_limits<double>::infinity();
  b.pass = b.width > 0.0 && b.width >= b.bound;
  return b;
}

}  // namespace

BoundCheck check_projection_bound(const FiberReport& r, const ModelInstance& m) {
  BoundCheck out;
  if (r.mode == Mode::OneD) {
    const double c = r.frozen.value_or(0.0);
    for (std::size_t i = 0; i < r.components.size(); ++i)
      if (r.components[i].almost_horizontal)
        out.entries.push_back(component_bound(m, r.theta, c, r.components[i], static_cast<int>(i)));
  } else {
    // Sheets: the bound is applied to every z = c leaf of the sheet.
    for (std::size_t si = 0; si < r.sheets.size(); ++si) {
      const SheetComponent& s = r.sheets[si];
      if (!s.almost_horizontal) continue;
      // Report the leaf with the smallest margin width - bound.
      ComponentBound agg;
      bool first = true, all = true;
      for (std::size_t j = 0; j < s.leaves_x.size(); ++j)
        for (int k : s.leaves_x[j]) {
          const ComponentBound b = component_bound(m, r.theta, r.slice_grid[j],
                                                   r.slices_z[j][static_cast<std::size_t>(k)],
                                                   static_cast<int>(si));
          all = all && b.pass;
          if (first || b.width - b.bound < agg.width - agg.bound) agg = b;
          first = false;
        }
      agg.pass = all && !first;
      out.entries.push_back(agg);
    }
  }
  out.all_pass = !out.entries.empty();
  for (const ComponentBound& b : out.entries) out.all_pass = out.all_pass && b.pass;
  return out;
}

nlohmann::json BoundCheck::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const ComponentBound& b : entries)
    arr.push_back({{"index", b.index}, {"width", b.width}, {"K1", b.K1}, {"K2", b.K2},
                   {"bound", b.bound}, {"pass", b.pass}});
  return {{"entries", arr}, {"all_pass", all_pass}};
}

nlohmann::json PlanarComponent::to_json() const {
  nlohmann::json j = {{"endpoints", {to_string(endpoints.first), to_string(endpoints.second)}},
                      {"y_range", {y_lo, y_hi}},
                      {"x_range", {x_lo, x_hi}},
                      {"max_abs_slope", max_abs_slope},
                      {"max_abs_slope_implicit", max_abs_slope_implicit},
                      {"max_residual", max_residual},
                      {"almost_horizontal", almost_horizontal},
                      {"graph_over_x", graph_over_x},
                      {"points", polyline.size()}};
  return j;
}

nlohmann::json FiberReport::to_json(bool with_polylines) const {
  nlohmann::json j = {{"theta", theta.to_vector()},
                      {"epsilon", epsilon},
                      {"mode", mode == Mode::OneD ? "1d" : "2d"},
                      {"grid", grid},
                      {"count_almost_horizontal", count_almost_horizontal},
                      {"min_projection_width", min_projection_width},
                      {"slope_margin", slope_margin},
                      {"x_coverage", x_coverage},
                      {"resolution_failure", resolution_failure}};
  if (frozen) j["frozen"] = *frozen;
  auto comp_json = [&](const PlanarComponent& c) {
    nlohmann::json cj = c.to_json();
    if (with_polylines) {
      nlohmann::json pts = nlohmann::json::array();
      for (const Point2& p : c.polyline) pts.push_back({p[0], p[1]});
      cj["polyline"] = pts;
    }
    return cj;
  };
  if (mode == Mode::OneD) {
    nlohmann::json arr = nlohmann::json::array();
    for (const PlanarComponent& c : components) arr.push_back(comp_json(c));
    j["components"] = arr;
  } else {
    j["slices"] = slices;
    j["slice_grid"] = slice_grid;
    nlohmann::json sheets_json = nlohmann::json::array();
    for (const SheetComponent& s : sheets) {
      nlohmann::json lx = nlohmann::json::array(), lz = nlohmann::json::array();
      for (std::size_t k = 0; k < s.leaves_x.size(); ++k) {
        nlohmann::json a = nlohmann::json::array(), b = nlohmann::json::array();
        for (int id : s.leaves_x[k]) a.push_back(comp_json(slices_z[k][static_cast<std::size_t>(id)]));
        for (int id : s.leaves_z[k]) b.push_back(comp_json(slices_x[k][static_cast<std::size_t>(id)]));
        lx.push_back(a);
        lz.push_back(b);
      }
      sheets_json.push_back({{"almost_horizontal", s.almost_horizontal},
                             {"max_leaf_slope", s.max_leaf_slope},
                             {"max_adjacent_hausdorff", s.max_adjacent_hausdorff},
                             {"continuous", s.continuous},
                             {"y_range", {s.y_lo, s.y_hi}},
                             {"leaves_x", lx},
                             {"leaves_z", lz}});
    }
    j["sheets"] = sheets_json;
  }
  return j;
}

std::string polylines_csv(const FiberReport& r) {
  std::string out = "component,x,y\n";
  auto emit = [&](const std::string& id, const PlanarComponent& c) {
    for (const Point2& p : c.polyline) out += id + "," + fmt17(p[0]) + "," + fmt17(p[1]) + "\n";
  };
  if (r.mode == Mode::OneD) {
    for (std::size_t i = 0; i < r.components.size(); ++i) emit(std::to_string(i), r.components[i]);
  } else {
    for (std::size_t s = 0; s < r.sheets.size(); ++s)
      for (std::size_t j = 0; j < r.sheets[s].leaves_x.size(); ++j)
        for (int k : r.sheets[s].leaves_x[j])
          emit(std::to_string(s) + "/z" + std::to_string(j), r.slices_z[j][static_cast<std::size_t>(k)]);
  }
  return out;
}

}  // namespace antilimit
