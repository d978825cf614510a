#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/model.hpp"
#include "orbits/orbits.hpp"

namespace antilimit {

enum class Interp { Trigonometric, Linear };
const char* to_string(Interp i);

struct TorusGrid {
  int N = 1024;  // power of two
  Interp interp = Interp::Trigonometric;
  double theta(int i) const { return static_cast<double>(i) / N; }
};

// Invariant graph K(theta_i) on a torus grid.
struct GraphK {
  TorusGrid grid;
  std::vector<double> values;
  double epsilon = 0.0;
  double residual_norm = 0.0;
  double deriv_estimate = 0.0;
  int newton_iterations = 0;
  nlohmann::json to_json(bool with_values = true) const;
  std::string csv() const;  // theta,K,dK_dtheta
};

// Periodic shift (K)(theta_i + omega) by the grid's interpolation.
class ShiftOperator {
 public:
  ShiftOperator(int N, double omega, Interp interp);
  void apply(const std::vector<double>& in, std::vector<double>& out, int sign) const;

 private:
  int N_;
  double omega_;
  Interp interp_;
};

// Values at arbitrary theta from grid samples (trigonometric or periodic linear).
double interpolate(const std::vector<double>& values, double theta, Interp interp);
std::vector<double> spectral_derivative(const std::vector<double>& values);
double derivative_estimate(const std::vector<double>& values, Interp interp);

// Functional residual F(K)_i on the grid.
std::vector<double> functional_residual(const ModelInstance& m, const TorusGrid& g,
                                        const std::vector<double>& K);

struct NewtonKOptions {
  double accept_tol = 1e-10;
  double target_tol = 1e-13;
  int max_iterations = 60;
  int max_halvings = 20;
  int gmres_restart = 40;
  int gmres_max_restarts = 25;
  int workers = 1;
};

// Initial graphs: the eps = 0 branch of V on every fiber (index into the
// sorted zeros, clamped), or a constant.
std::vector<double> branch_guess(const ModelInstance& m, const TorusGrid& g, int branch);

GraphK newton_solve_K(const ModelInstance& m, const TorusGrid& g, const std::vector<double>& guess,
                      const NewtonKOptions& opt = {});

// Resample K onto a grid of size newN using the given interpolation.
std::vector<double> resample(const std::vector<double>& K, int newN, Interp interp);

struct ScanStep {
  double param = 0.0;
  std::string status;  // ok | failed | blow-up
  double residual = 0.0;
  double deriv_estimate = 0.0;
  int newton_iters = 0;
  int grid_N = 0;
  Interp interp = Interp::Trigonometric;
};

struct BreakdownScan {
  std::string parameter;
  std::vector<ScanStep> steps;
  std::optional<double> critical;  // upper bound on the breakdown parameter
  std::string critical_reason;
  bool deriv_nondecreasing = true;
  std::optional<GraphK> last_graph;
  nlohmann::json to_json() const;
  std::string csv() const;  // param,residual,deriv_estimate,newton_iters,grid_N
};

struct ContinuationOptions {
  double deriv_threshold = 1e4;
  int max_N = 1 << 16;
  NewtonKOptions newton;
};

BreakdownScan continue_parameter(const ModelInstance& m, const TorusGrid& g, const std::string& parameter,
                                 const std::vector<double>& path, const std::vector<double>& guess,
                                 const ContinuationOptions& opt = {});

struct SkewState {
  BasePoint theta;
  double x = 0.0;       // x_k
  double x_prev = 0.0;  // x_{k-1}
};

struct Trajectory {
  long k0 = 0;
  std::vector<SkewState> states;
  bool truncated = false;
  std::string reason;
  bool affine = false;  // first argument entered affinely
  nlohmann::json to_json() const;
  std::string csv() const;
};

Trajectory iterate_skew(const ModelInstance& m, const BasePoint& theta0, double x0, double x_minus1,
                        long steps);

struct LyapunovResult {
  double lambda1 = 0.0;
  double lambda2 = 0.0;  // unused in 1D
  bool one_d = false;
  long steps = 0;
  double mean_log_det = 0.0;
  std::vector<std::string> warnings;
  nlohmann::json to_json() const;
};

LyapunovResult lyapunov_exponents(const ModelInstance& m, const Trajectory& traj);
// Along the orbit theta_k = theta0 + k omega on the graph x_k = K(theta_k).
LyapunovResult lyapunov_exponents(const ModelInstance& m, const GraphK& K, const BasePoint& theta0,
                                  long steps);

struct FlowResult {
  OrbitSegment segment;
  bool converged = false;
  double t = 0.0;
  double final_speed = 0.0;
  long steps = 0;
  nlohmann::json to_json() const;
};

// RK4 on xdot_k = eps Z_k + V_k over sites -l..l with x_{l+1} = a, x_{-l-1} = b.
// `init` defaults to the straight line between the boundary values.
FlowResult gradient_flow(const ModelInstance& m, const BasePoint& theta0, long l, double a, double b,
                         double t_end, double dt, std::optional<std::vector<double>> init = std::nullopt);

}  // namespace antilimit
