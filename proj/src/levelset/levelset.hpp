#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "core/model.hpp"

namespace antilimit {

enum class Wall { Left, Right, Top, Bottom, Closed };
const char* to_string(Wall w);

using Point2 = std::array<double, 2>;

// One connected piece of a planar zero set in I^2. The first coordinate is
// the "horizontal" variable (x for z-slices, z for x-slices), the second is y.
struct PlanarComponent {
  std::vector<Point2> polyline;  // ordered by increasing y
  std::pair<Wall, Wall> endpoints{Wall::Closed, Wall::Closed};
  double y_lo = 0.0, y_hi = 0.0;  // y-projection
  double x_lo = 0.0, x_hi = 0.0;  // horizontal projection
  double max_abs_slope = 0.0;     // central differences along the polyline
  double max_abs_slope_implicit = 0.0;  // |F_h / F_y| at polyline points
  double max_residual = 0.0;
  bool almost_horizontal = false;
  bool graph_over_x = false;
  bool touches_wall_inside = false;

  double y_width() const { return y_hi - y_lo; }
  // y on the component at horizontal coordinate h (linear on the polyline), if covered.
  std::optional<double> y_at(double h) const;
  nlohmann::json to_json() const;
};

// Zero set of F(h, y) = 0 on I^2 with partials; F must be monotone in h.
struct PlanarProblem {
  std::function<double(double, double)> F;
  std::function<double(double, double)> dFdh;
  std::function<double(double, double)> dFdy;
};

struct ScanOptions {
  int grid = 512;
  double res_tol = 1e-10;
  int workers = 1;
};

std::vector<PlanarComponent> scan_planar(const PlanarProblem& p, const ScanOptions& opt);

// Sheet of the 2D zero set assembled from slice leaves.
struct SheetComponent {
  std::vector<double> slice_grid;
  // leaves_x[j]: indices into FiberReport::slices_z[j] (leaves of the z = c_j slice).
  std::vector<std::vector<int>> leaves_x;
  // leaves_z[i]: indices into FiberReport::slices_x[i] (leaves of the x = c_i slice).
  std::vector<std::vector<int>> leaves_z;
  bool almost_horizontal = false;
  double max_leaf_slope = 0.0;
  double max_adjacent_hausdorff = 0.0;
  bool continuous = true;  // adjacent leaves within 10 slice spacings
  double y_lo = 0.0, y_hi = 0.0;
};

struct FiberReport {
  BasePoint theta;
  double epsilon = 0.0;
  Mode mode = Mode::OneD;
  int grid = 0;
  std::optional<double> frozen;  // third argument for a 1D scan of a 2D model

  std::vector<PlanarComponent> components;  // 1D scans

  int slices = 0;                                   // 2D scans
  std::vector<double> slice_grid;
  std::vector<std::vector<PlanarComponent>> slices_z;  // leaves of z = c slices, in (x, y)
  std::vector<std::vector<PlanarComponent>> slices_x;  // leaves of x = c slices, in (z, y)
  std::vector<SheetComponent> sheets;

  int count_almost_horizontal = 0;
  double min_projection_width = 0.0;  // over almost-horizontal components
  double slope_margin = 0.0;          // delta with all AH slopes <= 1 - delta, else 0
  bool x_coverage = false;            // AH projections cover I
  bool resolution_failure = false;    // no AH component although eps != 0

  // Almost-horizontal components in y order (1D reports only).
  std::vector<const PlanarComponent*> almost_horizontal() const;
  nlohmann::json to_json(bool with_polylines = true) const;
};

// 1D mode, or a 2D model with the third argument frozen at `frozen`.
FiberReport scan_fiber_1d(const ModelInstance& m, const BasePoint& theta, int grid = 512,
                          std::optional<double> frozen = std::nullopt, int workers = 1);

FiberReport scan_fiber_2d(const ModelInstance& m, const BasePoint& theta, int slices = 17,
                          int grid = 256, int workers = 1);

struct ComponentBound {
  int index = 0;  // component (1D) or sheet (2D)
  double width = 0.0;
  double K1 = 0.0, K2 = 0.0;
  double bound = 0.0;
  bool pass = false;
};

struct BoundCheck {
  std::vector<ComponentBound> entries;
  bool all_pass = false;
  nlohmann::json to_json() const;
};

BoundCheck check_projection_bound(const FiberReport& r, const ModelInstance& m);

double hausdorff(const std::vector<Point2>& a, const std::vector<Point2>& b);

// CSV rows "component,x,y" for plotting.
std::string polylines_csv(const FiberReport& r);

}  // namespace antilimit
