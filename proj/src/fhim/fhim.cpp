#include "fhim/fhim.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <mutex>

#include "core/builtin.hpp"
#include "core/conditions.hpp"
#include "core/errors.hpp"
#include "core/parallel.hpp"
#include "core/roots.hpp"
#include "core/text.hpp"

namespace antilimit {

using cplx = std::complex<double>;

const char* to_string(Interp i) { return i == Interp::Trigonometric ? "trigonometric" : "linear"; }

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// FFTW planning is not thread safe; plans are created once per size and
// executed through the new-array interface, which is.
struct Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

const Plans& plans_for(int N) {
  static std::mutex mu;
  static std::map<int, Plans> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(N);
  if (it != cache.end()) return it->second;
  double* in = fftw_alloc_real(static_cast<std::size_t>(N));
  fftw_complex* out = fftw_alloc_complex(static_cast<std::size_t>(N / 2 + 1));
  Plans p;
  p.r2c = fftw_plan_dft_r2c_1d(N, in, out, FFTW_ESTIMATE | FFTW_UNALIGNED);
  p.c2r = fftw_plan_dft_c2r_1d(N, out, in, FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(in);
  fftw_free(out);
  if (!p.r2c || !p.c2r) throw Error(ErrorKind::Internal, "FFTW planning failed");
  return cache.emplace(N, p).first->second;
}

std::vector<cplx> forward(const std::vector<double>& v) {
  const int N = static_cast<int>(v.size());
  std::vector<double> in(v);
  std::vector<cplx> out(static_cast<std::size_t>(N / 2 + 1));
  fftw_execute_dft_r2c(plans_for(N).r2c, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

// Unnormalised inverse; the caller divides by N.
std::vector<double> backward(std::vector<cplx> spec, int N) {
  std::vector<double> out(static_cast<std::size_t>(N));
  spec[static_cast<std::size_t>(N / 2)].imag(0.0);
  spec[0].imag(0.0);
  fftw_execute_dft_c2r(plans_for(N).c2r, reinterpret_cast<fftw_complex*>(spec.data()), out.data());
  return out;
}

double frac(double x) { return x - std::floor(x); }

void require_grid(const TorusGrid& g) {
  if (g.N < 4 || (g.N & (g.N - 1)) != 0)
    throw ContractError("grid size must be a power of two >= 4", {{"N", g.N}});
}

double rotation_omega(const ModelInstance& m) {
  const BaseDynamics& base = m.base();
  if (base.kind() != BaseDynamics::Kind::Rotation || base.dim() != 1)
    throw ContractError("invariant graphs need a rotation base with d = 1");
  return base.omega()[0];
}

double sup_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) {
    if (!std::isfinite(x)) return std::numeric_limits<double>::infinity();
    s = std::max(s, std::fabs(x));
  }
  return s;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Values of a grid function anywhere on the circle.
class Interpolant {
 public:
  Interpolant(const std::vector<double>& values, Interp interp) : values_(values), interp_(interp) {
    if (interp_ == Interp::Trigonometric) spec_ = forward(values_);
  }

  double operator()(double theta) const {
    const int N = static_cast<int>(values_.size());
    theta = frac(theta);
    if (interp_ == Interp::Linear) {
      double p = theta * N;
      int j = static_cast<int>(std::floor(p));
      double t = p - j;
      j %= N;
      return values_[static_cast<std::size_t>(j)] * (1.0 - t) +
             values_[static_cast<std::size_t>((j + 1) % N)] * t;
    }
    double s = spec_[0].real();
    for (int k = 1; k < N / 2; ++k) {
      double ang = kTwoPi * frac(k * theta);
      s += 2.0 * (spec_[static_cast<std::size_t>(k)] * cplx(std::cos(ang), std::sin(ang))).real();
    }
    s += spec_[static_cast<std::size_t>(N / 2)].real() * std::cos(kTwoPi * frac(0.5 * N * theta));
    return s / N;
  }

 private:
  std::vector<double> values_;
  Interp interp_;
  std::vector<cplx> spec_;
};

struct Shifted {
  std::vector<double> plus, minus;
};

Shifted shifted(const ShiftOperator& S, const std::vector<double>& K) {
  Shifted s{std::vector<double>(K.size()), std::vector<double>(K.size())};
  S.apply(K, s.plus, +1);
  S.apply(K, s.minus, -1);
  return s;
}

std::vector<double> residual_with(const ModelInstance& m, const TorusGrid& g, const std::vector<double>& K,
                                  const Shifted& s, int workers) {
  std::vector<double> r(K.size());
  const std::size_t block = 256;
  const std::size_t nblocks = (K.size() + block - 1) / block;
  parallel_for(nblocks, workers, [&](std::size_t bi) {
    for (std::size_t i = bi * block; i < std::min(K.size(), (bi + 1) * block); ++i)
      r[i] = m.f(BasePoint::scalar(g.theta(static_cast<int>(i))), s.plus[i], K[i], s.minus[i]);
  });
  return r;
}

// Matrix-free GMRES(restart) with a right diagonal preconditioner.
std::vector<double> gmres(const std::function<void(const std::vector<double>&, std::vector<double>&)>& A,
                          const std::vector<double>& diag, const std::vector<double>& b, int restart,
                          int max_restarts, double rel_tol) {
  const std::size_t n = b.size();
  std::vector<double> x(n, 0.0), r(b), Ax(n), z(n), w(n);
  const double bnorm = std::sqrt(dot(b, b));
  if (bnorm == 0.0) return x;
  const int mdim = restart;
  std::vector<std::vector<double>> V(static_cast<std::size_t>(mdim + 1), std::vector<double>(n));
  std::vector<std::vector<double>> H(static_cast<std::size_t>(mdim + 1), std::vector<double>(static_cast<std::size_t>(mdim)));
  std::vector<double> cs(static_cast<std::size_t>(mdim)), sn(static_cast<std::size_t>(mdim)),
      gv(static_cast<std::size_t>(mdim + 1));
  double beta = bnorm;
  for (int cycle = 0; cycle < max_restarts; ++cycle) {
    for (std::size_t i = 0; i < n; ++i) V[0][i] = r[i] / beta;
    std::fill(gv.begin(), gv.end(), 0.0);
    gv[0] = beta;
    int used = 0;
    for (int j = 0; j < mdim; ++j) {
      auto ju = static_cast<std::size_t>(j);
      for (std::size_t i = 0; i < n; ++i) z[i] = V[ju][i] / diag[i];
      A(z, w);
      const double wnorm = std::sqrt(dot(w, w));
      for (int i = 0; i <= j; ++i) {
        auto iu = static_cast<std::size_t>(i);
        H[iu][ju] = dot(w, V[iu]);
        for (std::size_t q = 0; q < n; ++q) w[q] -= H[iu][ju] * V[iu][q];
      }
      double h = std::sqrt(dot(w, w));
      // Below rounding level the new direction is noise: treat as an invariant subspace.
      if (h <= 1e-12 * wnorm) h = 0.0;
      for (int i = 0; i < j; ++i) {
        auto iu = static_cast<std::size_t>(i);
        double t = cs[iu] * H[iu][ju] + sn[iu] * H[iu + 1][ju];
        H[iu + 1][ju] = -sn[iu] * H[iu][ju] + cs[iu] * H[iu + 1][ju];
        H[iu][ju] = t;
      }
      double den = std::hypot(H[ju][ju], h);
      cs[ju] = den == 0.0 ? 1.0 : H[ju][ju] / den;
      sn[ju] = den == 0.0 ? 0.0 : h / den;
      H[ju][ju] = den;
      gv[ju + 1] = -sn[ju] * gv[ju];
      gv[ju] = cs[ju] * gv[ju];
      used = j + 1;
      if (h == 0.0 || std::fabs(gv[ju + 1]) <= rel_tol * bnorm) break;
      for (std::size_t q = 0; q < n; ++q) V[ju + 1][q] = w[q] / h;
    }
    std::vector<double> y(static_cast<std::size_t>(used));
    for (int i = used - 1; i >= 0; --i) {
      auto iu = static_cast<std::size_t>(i);
      double s = gv[iu];
      for (int k = i + 1; k < used; ++k) s -= H[iu][static_cast<std::size_t>(k)] * y[static_cast<std::size_t>(k)];
      y[iu] = H[iu][iu] == 0.0 ? 0.0 : s / H[iu][iu];
    }
    for (std::size_t q = 0; q < n; ++q) {
      double s = 0.0;
      for (int i = 0; i < used; ++i) s += y[static_cast<std::size_t>(i)] * V[static_cast<std::size_t>(i)][q];
      x[q] += s / diag[q];
    }
    A(x, Ax);
    for (std::size_t q = 0; q < n; ++q) r[q] = b[q] - Ax[q];
    beta = std::sqrt(dot(r, r));
    if (beta <= rel_tol * bnorm || !std::isfinite(beta)) break;
  }
  return x;
}

}  // namespace

ShiftOperator::ShiftOperator(int N, double omega, Interp interp) : N_(N), omega_(omega), interp_(interp) {}

void ShiftOperator::apply(const std::vector<double>& in, std::vector<double>& out, int sign) const {
  out.resize(in.size());
  const double w = sign > 0 ? omega_ : -omega_;
  if (interp_ == Interp::Linear) {
    double p0 = frac(w) * N_;
    for (int i = 0; i < N_; ++i) {
      double p = i + p0;
      int j = static_cast<int>(std::floor(p));
      double t = p - j;
      out[static_cast<std::size_t>(i)] = in[static_cast<std::size_t>(j % N_)] * (1.0 - t) +
                                         in[static_cast<std::size_t>((j + 1) % N_)] * t;
    }
    return;
  }
  std::vector<cplx> spec = forward(in);
  for (int k = 0; k <= N_ / 2; ++k) {
    double ang = kTwoPi * frac(k * w);
    spec[static_cast<std::size_t>(k)] *= cplx(std::cos(ang), std::sin(ang));
  }
  spec[static_cast<std::size_t>(N_ / 2)] = spec[static_cast<std::size_t>(N_ / 2)].real();
  out = backward(std::move(spec), N_);
  for (double& v : out) v /= N_;
}

double interpolate(const std::vector<double>& values, double theta, Interp interp) {
  return Interpolant(values, interp)(theta);
}

std::vector<double> spectral_derivative(const std::vector<double>& values) {
  const int N = static_cast<int>(values.size());
  std::vector<cplx> spec = forward(values);
  for (int k = 0; k <= N / 2; ++k) spec[static_cast<std::size_t>(k)] *= cplx(0.0, kTwoPi * k);
  spec[static_cast<std::size_t>(N / 2)] = 0.0;
  std::vector<double> d = backward(std::move(spec), N);
  for (double& v : d) v /= N;
  return d;
}

namespace {

std::vector<double> derivative(const std::vector<double>& K, Interp interp) {
  if (interp == Interp::Trigonometric) return spectral_derivative(K);
  const std::size_t N = K.size();
  std::vector<double> d(N);
  for (std::size_t i = 0; i < N; ++i)
    d[i] = (K[(i + 1) % N] - K[(i + N - 1) % N]) * 0.5 * static_cast<double>(N);
  return d;
}

}  // namespace

double derivative_estimate(const std::vector<double>& values, Interp interp) {
  return sup_norm(derivative(values, interp));
}

std::vector<double> functional_residual(const ModelInstance& m, const TorusGrid& g, const std::vector<double>& K) {
  require_grid(g);
  if (static_cast<int>(K.size()) != g.N) throw ContractError("graph size does not match the grid");
  ShiftOperator S(g.N, rotation_omega(m), g.interp);
  return residual_with(m, g, K, shifted(S, K), 1);
}

std::vector<double> branch_guess(const ModelInstance& m, const TorusGrid& g, int branch) {
  require_grid(g);
  std::vector<double> K(static_cast<std::size_t>(g.N));
  for (int i = 0; i < g.N; ++i) {
    BasePoint t = BasePoint::scalar(g.theta(i));
    auto roots = bracket_roots([&](double x) { return m.V(t, x); }, -1.0, 1.0, 512, 0.0);
    if (roots.empty())
      throw HypothesisError("V has no zero in I on a grid fiber", {{"theta", g.theta(i)}});
    int j = std::clamp(branch, 0, static_cast<int>(roots.size()) - 1);
    K[static_cast<std::size_t>(i)] = roots[static_cast<std::size_t>(j)];
  }
  return K;
}

GraphK newton_solve_K(const ModelInstance& m, const TorusGrid& g, const std::vector<double>& guess,
                      const NewtonKOptions& opt) {
  require_grid(g);
  if (static_cast<int>(guess.size()) != g.N)
    throw ContractError("guess size does not match the grid", {{"N", g.N}, {"size", guess.size()}});
  const double eps = m.epsilon();
  const int workers = resolve_workers(opt.workers);
  ShiftOperator S(g.N, rotation_omega(m), g.interp);

  std::vector<double> K = guess;
  Shifted sh = shifted(S, K);
  std::vector<double> r = residual_with(m, g, K, sh, workers);
  double norm = sup_norm(r);
  if (!std::isfinite(norm)) throw ContractError("guess residual is not finite");

  const std::size_t N = K.size();
  std::vector<double> D(N), A(N), C(N), tmp_p(N), tmp_m(N);
  int iters = 0, stagnant = 0;
  std::string stop = "target";
  while (norm > opt.target_tol) {
    if (iters >= opt.max_iterations) {
      stop = "iteration limit";
      break;
    }
    for (std::size_t i = 0; i < N; ++i) {
      BasePoint t = BasePoint::scalar(g.theta(static_cast<int>(i)));
      auto gz = m.dZ(t, sh.plus[i], K[i], sh.minus[i]);
      D[i] = eps * gz[1] + m.dV(t, K[i]);
      A[i] = eps * gz[0];
      C[i] = m.mode() == Mode::TwoD ? eps * gz[2] : 0.0;
    }
    std::vector<double> pre(D);
    for (double& d : pre)
      if (d == 0.0 || !std::isfinite(d)) d = 1.0;
    auto J = [&](const std::vector<double>& x, std::vector<double>& y) {
      S.apply(x, tmp_p, +1);
      S.apply(x, tmp_m, -1);
      y.resize(N);
      for (std::size_t i = 0; i < N; ++i) y[i] = D[i] * x[i] + A[i] * tmp_p[i] + C[i] * tmp_m[i];
    };
    std::vector<double> rhs(N);
    for (std::size_t i = 0; i < N; ++i) rhs[i] = -r[i];
    std::vector<double> delta = gmres(J, pre, rhs, opt.gmres_restart, opt.gmres_max_restarts, 1e-14);

    double lambda = 1.0;
    bool accepted = false;
    std::vector<double> Kt(N), rt;
    Shifted sht;
    double normt = norm;
    for (int h = 0; h <= opt.max_halvings; ++h, lambda *= 0.5) {
      for (std::size_t i = 0; i < N; ++i) Kt[i] = K[i] + lambda * delta[i];
      sht = shifted(S, Kt);
      rt = residual_with(m, g, Kt, sht, workers);
      normt = sup_norm(rt);
      if (normt < norm) {
        accepted = true;
        break;
      }
    }
    ++iters;
    if (!accepted) {
      stop = "no decrease";
      break;
    }
    stagnant = normt > 0.9 * norm ? stagnant + 1 : 0;
    K.swap(Kt);
    r.swap(rt);
    sh = std::move(sht);
    norm = normt;
    if (stagnant >= 5) {
      stop = "stagnation";
      break;
    }
  }
  if (!(norm <= opt.accept_tol))
    throw NoConvergence("Newton iteration for the invariant graph did not converge", K,
                        {{"residual", norm}, {"iterations", iters}, {"reason", stop}, {"N", g.N},
                         {"interp", to_string(g.interp)}});
  GraphK out;
  out.grid = g;
  out.values = std::move(K);
  out.epsilon = eps;
  out.residual_norm = norm;
  out.deriv_estimate = derivative_estimate(out.values, g.interp);
  out.newton_iterations = iters;
  return out;
}

std::vector<double> resample(const std::vector<double>& K, int newN, Interp interp) {
  const int N = static_cast<int>(K.size());
  if (newN == N) return K;
  std::vector<double> out(static_cast<std::size_t>(newN));
  if (interp == Interp::Linear) {
    Interpolant f(K, interp);
    for (int i = 0; i < newN; ++i) out[static_cast<std::size_t>(i)] = f(static_cast<double>(i) / newN);
    return out;
  }
  std::vector<cplx> spec = forward(K);
  std::vector<cplx> ns(static_cast<std::size_t>(newN / 2 + 1), 0.0);
  const double scale = static_cast<double>(newN) / N;
  const int keep = std::min(N, newN) / 2;
  for (int k = 0; k < keep; ++k) ns[static_cast<std::size_t>(k)] = spec[static_cast<std::size_t>(k)] * scale;
  // The old Nyquist cosine splits across +-N/2 on a finer grid.
  if (newN > N)
    ns[static_cast<std::size_t>(keep)] = 0.5 * spec[static_cast<std::size_t>(keep)].real() * scale;
  else
    ns[static_cast<std::size_t>(keep)] = spec[static_cast<std::size_t>(keep)].real() * scale;
  out = backward(std::move(ns), newN);
  for (double& v : out) v /= newN;
  return out;
}

BreakdownScan continue_parameter(const ModelInstance& m, const TorusGrid& g, const std::string& parameter,
                                 const std::vector<double>& path, const std::vector<double>& guess,
                                 const ContinuationOptions& opt) {
  require_grid(g);
  if (path.empty()) throw ContractError("continuation path is empty");
  for (std::size_t i = 2; i < path.size(); ++i)
    if ((path[i] - path[i - 1]) * (path[1] - path[0]) <= 0.0)
      throw ContractError("continuation path must be strictly monotone");
  if (path.size() == 2 && path[1] == path[0]) throw ContractError("continuation path must be strictly monotone");

  BreakdownScan scan;
  scan.parameter = parameter;
  TorusGrid grid = g;
  std::vector<double> prev, prev2;  // solutions at the two previous path points, on `grid`
  double last_deriv = -1.0;

  for (std::size_t i = 0; i < path.size(); ++i) {
    const double p = path[i];
    ModelInstance mi = with_param(m, parameter, p);
    ScanStep step;
    step.param = p;

    std::vector<std::pair<TorusGrid, std::vector<double>>> attempts;
    if (i == 0) {
      attempts.emplace_back(grid, resample(guess, grid.N, grid.interp));
    } else if (i == 1 || prev2.empty()) {
      attempts.emplace_back(grid, prev);
    } else {
      double s = (p - path[i - 1]) / (path[i - 1] - path[i - 2]);
      std::vector<double> pred(prev.size());
      for (std::size_t q = 0; q < prev.size(); ++q) pred[q] = prev[q] + s * (prev[q] - prev2[q]);
      attempts.emplace_back(grid, pred);
      attempts.emplace_back(grid, prev);
    }
    const std::vector<double> base_guess = i == 0 ? attempts.front().second : prev;
    TorusGrid fallback = grid;
    if (fallback.interp == Interp::Trigonometric) {
      fallback.interp = Interp::Linear;
      attempts.emplace_back(fallback, base_guess);
    }
    for (int n = grid.N * 2; n <= opt.max_N; n *= 2) {
      TorusGrid fine{n, fallback.interp};
      attempts.emplace_back(fine, resample(base_guess, n, grid.interp));
    }

    std::optional<GraphK> solved;
    double last_residual = std::numeric_limits<double>::infinity();
    int iter_total = 0;
    for (const auto& [tg, kg] : attempts) {
      try {
        GraphK gk = newton_solve_K(mi, tg, kg, opt.newton);
        iter_total += gk.newton_iterations;
        solved = std::move(gk);
        break;
      } catch (const NoConvergence& e) {
        iter_total += e.details().value("iterations", 0);
        last_residual = e.details().value("residual", last_residual);
        step.grid_N = tg.N;
        step.interp = tg.interp;
      } catch (const ContractError& e) {
        step.grid_N = tg.N;
        step.interp = tg.interp;
      }
    }
    step.newton_iters = iter_total;
    if (!solved) {
      step.status = "failed";
      step.residual = last_residual;
      step.deriv_estimate = std::numeric_limits<double>::infinity();
      scan.steps.push_back(step);
      scan.critical = p;
      scan.critical_reason = "no convergence";
      break;
    }
    step.grid_N = solved->grid.N;
    step.interp = solved->grid.interp;
    step.residual = solved->residual_norm;
    step.deriv_estimate = solved->deriv_estimate;
    if (step.deriv_estimate < last_deriv) scan.deriv_nondecreasing = false;
    last_deriv = step.deriv_estimate;

    if (solved->grid.N != grid.N || solved->grid.interp != grid.interp) {
      grid = solved->grid;
      prev2.clear();
    } else {
      prev2 = prev;
    }
    prev = solved->values;
    scan.last_graph = solved;
    if (step.deriv_estimate > opt.deriv_threshold) {
      step.status = "blow-up";
      scan.steps.push_back(step);
      scan.critical = p;
      scan.critical_reason = "derivative threshold";
      break;
    }
    step.status = "ok";
    scan.steps.push_back(step);
  }
  return scan;
}

Trajectory iterate_skew(const ModelInstance& m, const BasePoint& theta0, double x0, double x_minus1, long steps) {
  const double eps = m.epsilon();
  if (eps == 0.0) throw ContractError("iterate_skew needs eps != 0");
  if (steps < 0) throw ContractError("step count must be nonnegative");

  // Probe whether Z enters affinely in its first argument.
  double amin = std::numeric_limits<double>::infinity(), amax = -amin;
  const double probe[] = {-1.0, -0.35, 0.2, 0.85};
  for (const BasePoint& t : probe_thetas(m, 8))
    for (double a : probe)
      for (double b : probe)
        for (double c : probe) {
          double da = m.dZ(t, a, b, c)[0];
          amin = std::min(amin, da);
          amax = std::max(amax, da);
        }
  Trajectory tr;
  tr.affine = amax - amin <= 1e-10 && amin != 0.0;
  const double A = 0.5 * (amin + amax);

  tr.states.push_back({m.theta(0, theta0), x0, x_minus1});
  for (long k = 0; k < steps; ++k) {
    const SkewState& s = tr.states.back();
    BasePoint t;
    BasePoint t_next;
    try {
      t = m.theta(k, theta0);
      t_next = m.theta(k + 1, theta0);
    } catch (const ContractError&) {
      tr.truncated = true;
      tr.reason = "base window exhausted";
      break;
    }
    double next;
    if (tr.affine) {
      next = -(m.V(t, s.x) / eps + m.Z(t, 0.0, s.x, s.x_prev)) / A;
    } else {
      auto g = [&](double a) { return m.f(t, a, s.x, s.x_prev); };
      double lo = g(-10.0), hi = g(10.0);
      if (!(lo * hi <= 0.0)) {
        tr.truncated = true;
        tr.reason = "no root of the first argument in [-10, 10]";
        break;
      }
      next = bisect_full(g, -10.0, 10.0, lo, hi);
    }
    if (!std::isfinite(next) || std::fabs(next) > 1e10) {
      tr.truncated = true;
      tr.reason = "divergence";
      break;
    }
    tr.states.push_back({t_next, next, s.x});
  }
  return tr;
}

namespace {

// Accumulates QR exponents of a 2x2 cocycle.
struct QrAccumulator {
  double q[2][2] = {{1.0, 0.0}, {0.0, 1.0}};
  double s1 = 0.0, s2 = 0.0, sdet = 0.0;
  long n = 0;

  void push(const double J[2][2]) {
    double M[2][2];
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) M[i][j] = J[i][0] * q[0][j] + J[i][1] * q[1][j];
    double r11 = std::hypot(M[0][0], M[1][0]);
    double q1[2] = {M[0][0] / r11, M[1][0] / r11};
    double r12 = q1[0] * M[0][1] + q1[1] * M[1][1];
    double v[2] = {M[0][1] - r12 * q1[0], M[1][1] - r12 * q1[1]};
    double r22 = std::hypot(v[0], v[1]);
    q[0][0] = q1[0];
    q[1][0] = q1[1];
    q[0][1] = v[0] / r22;
    q[1][1] = v[1] / r22;
    s1 += std::log(r11);
    s2 += std::log(r22);
    sdet += std::log(std::fabs(J[0][0] * J[1][1] - J[0][1] * J[1][0]));
    ++n;
  }
};

// Cocycle along a chain x_{-1}, x_0, ..., x_n with base points theta_0..theta_{n-1}.
template <class ThetaAt, class XAt>
LyapunovResult cocycle(const ModelInstance& m, long n, ThetaAt theta_at, XAt x_at) {
  if (n <= 0) throw ContractError("zero-length Jacobian product");
  const double eps = m.epsilon();
  LyapunovResult res;
  res.steps = n;
  res.one_d = m.mode() == Mode::OneD;
  if (n < 1000) res.warnings.push_back("fewer than 1000 steps");
  QrAccumulator acc;
  double s1d = 0.0;
  for (long k = 0; k < n; ++k) {
    BasePoint t = theta_at(k);
    double a = x_at(k + 1), b = x_at(k), c = x_at(k - 1);
    auto gz = m.dZ(t, a, b, c);
    double diag = eps * gz[1] + m.dV(t, b);
    double lead = eps * gz[0];
    if (res.one_d) {
      s1d += std::log(std::fabs(diag / lead));
      continue;
    }
    double J[2][2] = {{-diag / lead, -gz[2] / gz[0]}, {1.0, 0.0}};
    acc.push(J);
  }
  if (res.one_d) {
    res.lambda1 = s1d / n;
    res.mean_log_det = res.lambda1;
  } else {
    res.lambda1 = acc.s1 / n;
    res.lambda2 = acc.s2 / n;
    res.mean_log_det = acc.sdet / n;
  }
  return res;
}

}  // namespace

LyapunovResult lyapunov_exponents(const ModelInstance& m, const Trajectory& traj) {
  const auto& st = traj.states;
  long n = static_cast<long>(st.size()) - 1;
  LyapunovResult res = cocycle(
      m, n, [&](long k) { return st[static_cast<std::size_t>(k)].theta; },
      [&](long k) { return k < 0 ? st[0].x_prev : st[static_cast<std::size_t>(k)].x; });
  if (traj.truncated) res.warnings.push_back("trajectory truncated (" + traj.reason + "), exponents over available steps");
  return res;
}

LyapunovResult lyapunov_exponents(const ModelInstance& m, const GraphK& K, const BasePoint& theta0, long steps) {
  const double omega = rotation_omega(m);
  Interpolant f(K.values, K.grid.interp);
  std::vector<double> xs(static_cast<std::size_t>(std::max(steps, 0L) + 2));
  for (long k = -1; k <= steps; ++k) xs[static_cast<std::size_t>(k + 1)] = f(theta0[0] + k * omega);
  return cocycle(
      m, steps, [&](long k) { return m.theta(k, theta0); },
      [&](long k) { return xs[static_cast<std::size_t>(k + 1)]; });
}

FlowResult gradient_flow(const ModelInstance& m, const BasePoint& theta0, long l, double a, double b,
                         double t_end, double dt, std::optional<std::vector<double>> init) {
  if (l < 0) throw ContractError("window half-width must be nonnegative");
  if (!(dt > 0.0) || !(t_end > 0.0)) throw ContractError("gradient flow needs dt > 0 and t_end > 0");
  const std::size_t n = static_cast<std::size_t>(2 * l + 1);
  std::vector<double> x(n);
  if (init) {
    if (init->size() != n) throw ContractError("initial segment has the wrong length", {{"expected", n}});
    x = *init;
  } else {
    for (std::size_t i = 0; i < n; ++i) x[i] = b + (a - b) * static_cast<double>(i + 1) / static_cast<double>(n + 1);
  }
  std::vector<BasePoint> thetas(n);
  for (std::size_t i = 0; i < n; ++i) thetas[i] = m.theta(static_cast<long>(i) - l, theta0);

  auto rhs = [&](const std::vector<double>& y, std::vector<double>& out) {
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      double up = i + 1 < n ? y[i + 1] : a;
      double down = i > 0 ? y[i - 1] : b;
      out[i] = m.site_f(static_cast<long>(i) - l, thetas[i], up, y[i], down);
    }
  };

  FlowResult res;
  std::vector<double> k1, k2, k3, k4, tmp(n);
  double t = 0.0;
  while (true) {
    rhs(x, k1);
    res.final_speed = sup_norm(k1);
    if (res.final_speed < 1e-10) {
      res.converged = true;
      break;
    }
    if (!std::isfinite(res.final_speed) || t >= t_end) break;
    double h = std::min(dt, t_end - t);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
    rhs(tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
    rhs(tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
    rhs(tmp, k4);
    for (std::size_t i = 0; i < n; ++i) x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    t += h;
    ++res.steps;
  }
  res.t = t;
  OrbitSegment& seg = res.segment;
  seg.theta0 = theta0;
  seg.k_min = -l;
  seg.k_max = l;
  seg.values = x;
  seg.boundary = std::make_pair(a, b);
  seg.method = "gradient-flow";
  rhs(x, k1);
  seg.residuals.resize(n);
  for (std::size_t i = 0; i < n; ++i) seg.residuals[i] = std::fabs(k1[i]);
  return res;
}

nlohmann::json GraphK::to_json(bool with_values) const {
  nlohmann::json j = {{"N", grid.N},
                      {"interp", to_string(grid.interp)},
                      {"epsilon", epsilon},
                      {"residual_norm", residual_norm},
                      {"deriv_estimate", deriv_estimate},
                      {"newton_iterations", newton_iterations}};
  if (with_values) j["values"] = values;
  return j;
}

std::string GraphK::csv() const {
  std::vector<double> d = derivative(values, grid.interp);
  std::string out = "theta,K,dK_dtheta\n";
  for (int i = 0; i < grid.N; ++i) {
    auto u = static_cast<std::size_t>(i);
    out += fmt17(grid.theta(i)) + "," + fmt17(values[u]) + "," + fmt17(d[u]) + "\n";
  }
  return out;
}

nlohmann::json BreakdownScan::to_json() const {
  nlohmann::json steps_j = nlohmann::json::array();
  for (const ScanStep& s : steps)
    steps_j.push_back({{"param", s.param},
                       {"status", s.status},
                       {"residual", std::isfinite(s.residual) ? nlohmann::json(s.residual) : nlohmann::json()},
                       {"deriv_estimate",
                        std::isfinite(s.deriv_estimate) ? nlohmann::json(s.deriv_estimate) : nlohmann::json()},
                       {"newton_iters", s.newton_iters},
                       {"grid_N", s.grid_N},
                       {"interp", to_string(s.interp)}});
  nlohmann::json j = {{"parameter", parameter}, {"steps", steps_j}, {"deriv_nondecreasing", deriv_nondecreasing}};
  if (critical) {
    j["critical"] = {{"value", *critical}, {"reason", critical_reason}, {"kind", "upper bound"}};
  } else {
    j["critical"] = nullptr;
  }
  return j;
}

std::string BreakdownScan::csv() const {
  std::string out = "param,residual,deriv_estimate,newton_iters,grid_N\n";
  for (const ScanStep& s : steps)
    out += fmt17(s.param) + "," + fmt17(s.residual) + "," + fmt17(s.deriv_estimate) + "," +
           std::to_string(s.newton_iters) + "," + std::to_string(s.grid_N) + "\n";
  return out;
}

nlohmann::json Trajectory::to_json() const {
  return {{"steps", static_cast<long>(states.size()) - 1},
          {"truncated", truncated},
          {"reason", reason},
          {"affine", affine},
          {"final", states.empty() ? nlohmann::json() : nlohmann::json{states.back().x, states.back().x_prev}}};
}

std::string Trajectory::csv() const {
  std::string out = "k";
  const int d = states.empty() ? 1 : states.front().theta.dim;
  for (int c = 0; c < d; ++c) out += d == 1 ? ",theta" : ",theta" + std::to_string(c);
  out += ",x_k,x_k_minus_1\n";
  for (std::size_t i = 0; i < states.size(); ++i) {
    out += std::to_string(k0 + static_cast<long>(i));
    for (int c = 0; c < d; ++c) out += "," + fmt17(states[i].theta[c]);
    out += "," + fmt17(states[i].x) + "," + fmt17(states[i].x_prev) + "\n";
  }
  return out;
}

nlohmann::json LyapunovResult::to_json() const {
  nlohmann::json j = {{"lambda1", lambda1}, {"steps", steps}, {"one_d", one_d}, {"warnings", warnings}};
  if (!one_d) {
    j["lambda2"] = lambda2;
    j["sum"] = lambda1 + lambda2;
    j["mean_log_det"] = mean_log_det;
  }
  return j;
}

nlohmann::json FlowResult::to_json() const {
  return {{"converged", converged},
          {"t", t},
          {"steps", steps},
          {"final_speed", final_speed},
          {"segment", segment.to_json()}};
}

}  // namespace antilimit
