#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/model.hpp"
#include "levelset/levelset.hpp"

namespace antilimit {

// Component choice per fiber. For 1D trees index n refers to fiber n; for 2D
// trees index i refers to site i - n (sites -n..n).
struct Itinerary {
  std::vector<int> indices;
  std::vector<int> branch_counts;
};

struct TreeNode {
  int parent = -1;  // index into the previous level
  int branch = 0;   // component chosen at the step that created this node
  // 1D: lo[0], hi[0] bound x_0. 2D: boxes over (x_{+1}, x_0, x_{-1}).
  std::array<double, 3> lo{}, hi{};
  double diameter = 0.0;  // extent of the central coordinate x_0
  double slack = 0.0;     // 2D: enlargement of the sampled box over its corner box
};

struct RefinementTree {
  int dim = 1;   // 1 or 2
  int depth = 0;
  std::vector<std::vector<TreeNode>> levels;  // levels[n] = nodes of O_n (1D) or W_n (2D)
  std::vector<long> component_count;          // per depth
  std::vector<int> branch_counts;             // |J| per refinement step
  std::vector<int> central;                   // 2D: the fixed central sheet index
  double max_slope = 0.0;                     // over the fibers used
  double delta_measured = 0.0;                // 1 - max_slope
  double max_nesting_violation = 0.0;
  bool nesting_ok = true;

  double max_diameter(int n) const;
  nlohmann::json to_json() const;
  std::string depth_csv() const;  // depth,count,max_diameter
};

struct CantorCertificate {
  int depth = 0;
  double max_diameter = 0.0;
  double delta_claim = 0.0;
  double claim_bound = 0.0;        // 2 (1 - delta_claim)^depth
  double delta_measured = 0.0;
  double contraction_bound = 0.0;  // 2 (1 - delta_measured)^depth
  double min_gap = 0.0;
  std::vector<int> split_depths;
  double rho = 1.0;
  int required_splits = 0;
  double box_dim_estimate = 0.0;
  double box_dim_residual = 0.0;
  int box_dim_points = 0;

  bool diameter_ok = false;
  bool split_ok = false;
  bool nesting_ok = false;
  bool count_ok = false;
  bool pass() const { return diameter_ok && split_ok && nesting_ok && count_ok; }
  nlohmann::json to_json() const;
};

// Fiber scans for theta_k, k = k0 .. k0 + count - 1 (one scan reused for a fixed-point base).
std::vector<FiberReport> scan_fibers_1d(const ModelInstance& m, const BasePoint& theta0, long k0,
                                        int count, int grid = 512, int workers = 1);
std::vector<FiberReport> scan_fibers_2d(const ModelInstance& m, const BasePoint& theta0, long k0,
                                        int count, int slices = 9, int grid = 128, int workers = 1);

// fibers[n] is the report of theta_n; depth defaults to fibers.size().
RefinementTree refine_1d(const ModelInstance& m, const std::vector<FiberReport>& fibers,
                         const std::optional<Itinerary>& itinerary = std::nullopt, int depth = -1,
                         int workers = 1);

// fibers[i] is the report of site i - depth (2*depth + 1 entries).
RefinementTree refine_2d(const ModelInstance& m, const BasePoint& theta0,
                         const std::vector<FiberReport>& fibers,
                         const std::optional<Itinerary>& itinerary, int depth, int workers = 1);

CantorCertificate certify(const RefinementTree& tree, double delta_claim, double rho = 1.0);

}  // namespace antilimit
