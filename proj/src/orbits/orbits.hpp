#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "core/model.hpp"
#include "levelset/levelset.hpp"

namespace antilimit {

// Finite window {x_k : k_min <= k <= k_max} of a lattice orbit.
struct OrbitSegment {
  BasePoint theta0;
  long k_min = 0;
  long k_max = -1;
  std::vector<double> values;
  // 2D windows: (a, b) = (x_{k_max+1}, x_{k_min-1}).
  std::optional<std::pair<double, double>> boundary;
  // 2D: |f_k| for every k in the window. 1D: |f_k(x_{k+1}, x_k)| for k_min <= k < k_max.
  std::vector<double> residuals;
  std::vector<int> itinerary;  // branch / root index per site, when known
  std::string method;          // recursive | newton | nested-interval | gradient-flow

  std::size_t size() const { return values.size(); }
  double at(long k) const { return values[static_cast<std::size_t>(k - k_min)]; }
  double max_residual() const;
  nlohmann::json to_json() const;
};

struct SolutionSet {
  std::vector<OrbitSegment> segments;
  bool complete = false;
  nlohmann::json diagnostics;
  nlohmann::json to_json() const;
};

// Residuals of a 2D window recomputed from scratch.
std::vector<double> window_residuals(const ModelInstance& m, const BasePoint& theta0, long k_min,
                                     const std::vector<double>& x, double a, double b);
// Residuals of a 1D segment recomputed from scratch.
std::vector<double> chain_residuals(const ModelInstance& m, const BasePoint& theta0, long k_min,
                                    const std::vector<double>& x);

// All x in I with eps*Z(theta, x_next, x) + V(theta, x) = 0 (third argument 0 for
// 2D models). With a component index, only the root on that almost-horizontal
// component of `fiber` (scanned on demand when null).
std::vector<double> solve_backward_1d(const ModelInstance& m, const BasePoint& theta, double x_next,
                                      std::optional<int> component = std::nullopt,
                                      const FiberReport* fiber = nullptr);

// The unique x_{k+1} in I with f_theta(x_{k+1}, x_k) = 0.
double solve_forward_1d(const ModelInstance& m, const BasePoint& theta, double x_k);

struct WindowOptions {
  int max_seeds = 4096;
  // Seed patterns (branch index per site) used when the full product is too large.
  std::vector<std::vector<int>> itineraries;
  int workers = 1;
  int max_iterations = 100;
  int max_halvings = 20;
};

// Per-site zeros of V(theta_k, .) in I, the eps = 0 branches seeding Newton.
std::vector<std::vector<double>> zero_branches(const ModelInstance& m, const BasePoint& theta0, long l);

// Damped Newton on the window from one seed. Returns nullopt when the seed
// diverges or leaves I; `status` receives "converged", "diverged" or "left-I".
std::optional<std::vector<double>> newton_window(const ModelInstance& m, const BasePoint& theta0, long l,
                                                 double a, double b, std::vector<double> x,
                                                 const WindowOptions& opt, std::string* status = nullptr);

SolutionSet solve_window_2d(const ModelInstance& m, const BasePoint& theta0, long l, double a, double b,
                            const WindowOptions& opt = {});

enum class Direction { Forward, Backward };

OrbitSegment make_segment_1d(const ModelInstance& m, const BasePoint& theta0, long k_min,
                             std::vector<double> values);

OrbitSegment extend_segment(const ModelInstance& m, const OrbitSegment& seg, Direction dir,
                            std::optional<int> component = std::nullopt);

// CSV with columns k, theta_k (one column per base coordinate), x_k, residual_k.
std::string orbit_csv(const ModelInstance& m, const OrbitSegment& seg);

}  // namespace antilimit
