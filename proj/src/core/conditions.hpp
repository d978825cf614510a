#pragma once

#include <utility>
#include <vector>

#include <json.hpp>

#include "core/model.hpp"

namespace antilimit {

struct Extremum {
  double value = 0.0;
  std::vector<double> at;  // theta coordinates followed by (a, b[, c])
};

struct BandSlice {
  BasePoint theta;
  std::vector<std::pair<double, double>> intervals;
};

// Sampled check of the standing conditions. Failures are reported, not thrown.
struct ConditionReport {
  int grid = 0;
  int theta_samples = 0;
  Extremum min_abs_dZa;  // forward-coupling monotonicity, a K1 candidate
  Extremum min_abs_dZc;  // backward-coupling monotonicity (2D only)
  Extremum max_abs_Z;
  double epsilon0 = 0.0;
  std::vector<BandSlice> band;
  double t0 = 0.0, t1 = 0.0;
  bool surjective = false;
  bool analytic_partials = false;
  double partials_max_rel_err = 0.0;

  bool c0 = false;  // band compactly inside I and hitting every sampled fiber
  bool c1 = false;  // max |Z| < 1
  bool c2 = false;  // dZ/da and dZ/dc bounded away from zero (dZ/da only in 1D)
  bool partials_ok = true;

  bool all_pass() const { return c0 && c1 && c2 && partials_ok; }
  nlohmann::json to_json() const;
};

// Deterministic base samples: the fixed point, the stored explicit values, or
// n points of T^d (a uniform grid for d = 1, a Kronecker sequence otherwise).
std::vector<BasePoint> probe_thetas(const ModelInstance& m, int n);

// Sublevel set {x in I : |V(theta, x)| <= level}, edges refined by bisection.
std::vector<std::pair<double, double>> band_intervals(const ModelInstance& m, const BasePoint& t,
                                                      double level, int samples);

ConditionReport verify_conditions(const ModelInstance& m, int grid, int workers = 1);

// Largest eps0 (relative precision 1e-3) whose band lies in [-1+margin, 1-margin]
// and meets every sampled fiber. Throws DegeneratePotential below 1e-12.
double estimate_epsilon0(const ModelInstance& m, double margin);

}  // namespace antilimit
