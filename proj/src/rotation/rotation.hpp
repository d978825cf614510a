#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/model.hpp"
#include "orbits/orbits.hpp"

namespace antilimit {

// m_k = floor(k * omega) on [k_min, k_max], delta_k = m_{k+1} - m_k.
struct Staircase {
  double omega = 0.0;
  std::optional<std::pair<long, long>> rational;  // (p, q) when given exactly
  long k_min = 0, k_max = -1;
  std::vector<long> m;
  std::vector<long> delta;  // delta[i] = m_{k_min+i+1} - m_{k_min+i}

  long at(long k) const { return m[static_cast<std::size_t>(k - k_min)]; }
  nlohmann::json to_json() const;
};

Staircase staircase(double omega, long k_min, long k_max);
// Exact rational omega = p/q (q > 0).
Staircase staircase_rational(long p, long q, long k_min, long k_max);
// Accepts "p/q" or a decimal number.
Staircase staircase_from_string(const std::string& omega, long k_min, long k_max);

struct ShiftReport {
  std::vector<double> G;  // G_k = Z(theta_k, m-shifted args) - Z(theta_k, args) at the probe point
  double max_abs_G = 0.0;
  double periodicity_defect = 0.0;  // max |Z(.+1) - Z(.)| and |V(x+1) - V(x)| on the probe grid
  double max_abs_Z_big_cube = 0.0;  // max |Z| on M x [-2, 2]^3
  nlohmann::json to_json() const;
};

// The k-dependent system Z_k(theta, a, b, c) = Z(theta, a + m_{k+1}, b + m_k, c + m_{k-1}).
// Periodicity of Z and V and |Z| <= 1 on [-2, 2]^3 are probed on a 64^3 grid.
ModelInstance shifted_coupling(const ModelInstance& m, const Staircase& s, ShiftReport* report = nullptr);

struct RotationNumber {
  double forward = 0.0;
  double backward = 0.0;
  std::vector<double> profile;  // rho_N = (y_N - y_0) / N, N = 1..
  nlohmann::json to_json() const;
};

// values[i] = y_{k0+i}; forward uses indices >= k0 + origin, backward those <= it.
RotationNumber measure_rotation_number(const std::vector<double>& values, long origin = 0);

struct RotationOrbit {
  double omega = 0.0;
  Staircase stairs;
  OrbitSegment base;       // x_k of the shifted system
  std::vector<double> y;   // y_k = x_k + m_k
  double max_deviation = 0.0;  // max |y_k - k omega|
  bool bound_ok = false;       // max_deviation <= 2
  double original_residual = 0.0;  // max residual of the unshifted system at y
  RotationNumber rho;
  ShiftReport shift;
  nlohmann::json to_json() const;
  std::string csv() const;  // k,m_k,x_k,y_k,rho_partial
};

// Solves the shifted window -l..l with boundary (a, b); seeds every site with
// the zero of V closest to 0 (smallest |x|).
RotationOrbit construct_rotation_orbit(const ModelInstance& m, const Staircase& s, long l, double a,
                                       double b, const BasePoint& theta0 = BasePoint{}, int workers = 1);

}  // namespace antilimit
