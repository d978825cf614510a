// Acceptance suite: one PASS/FAIL line per criterion, details indented below it.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "app/run.hpp"
#include "cantor/cantor.hpp"
#include "core/builtin.hpp"
#include "core/conditions.hpp"
#include "core/errors.hpp"
#include "fhim/fhim.hpp"
#include "levelset/levelset.hpp"
#include "orbits/orbits.hpp"
#include "rotation/rotation.hpp"

using namespace antilimit;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

const double kGolden = (std::sqrt(5.0) - 1.0) / 2.0;

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

void note(const char* fmt, double a = 0, double b = 0, double c = 0, double d = 0) {
  std::printf("    ");
  std::printf(fmt, a, b, c, d);
  std::printf("\n");
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::fabs(a[i] - b[i]));
  return d;
}

// Exhaustive multistart: Newton from random seeds in I^n plus every sign
// pattern of +-1/2, collecting distinct converged solutions.
std::vector<std::vector<double>> multistart(const ModelInstance& m, long l, int random_seeds) {
  const std::size_t n = static_cast<std::size_t>(2 * l + 1);
  std::vector<std::vector<double>> seeds;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = (mask >> i) & 1u ? 0.5 : -0.5;
    seeds.push_back(s);
  }
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> u(-0.99, 0.99);
  for (int r = 0; r < random_seeds; ++r) {
    std::vector<double> s(n);
    for (double& x : s) x = u(rng);
    seeds.push_back(s);
  }
  std::vector<std::vector<double>> found;
  WindowOptions opt;
  for (const auto& s : seeds) {
    auto x = newton_window(m, BasePoint::scalar(0.0), l, 0.0, 0.0, s, opt);
    if (!x) continue;
    bool dup = false;
    for (const auto& f : found) dup = dup || sup_diff(f, *x) < 1e-7;
    if (!dup) found.push_back(*x);
  }
  return found;
}

bool criterion1() {
  bool ok = true;
  for (double eps : {0.1, 0.01, 0.001}) {
    ModelInstance m = builtin_model("double-well", {{"epsilon", eps}});
    auto t = Clock::now();
    SolutionSet set = solve_window_2d(m, BasePoint::scalar(0.0), 3, 0.0, 0.0);
    const double secs = since(t);
    double worst = 0.0;
    for (const OrbitSegment& s : set.segments) worst = std::max(worst, s.max_residual());
    auto ms = multistart(m, 3, 2000);
    bool same = ms.size() == set.segments.size();
    for (const auto& x : ms) {
      bool hit = false;
      for (const OrbitSegment& s : set.segments) hit = hit || sup_diff(s.values, x) < 1e-7;
      same = same && hit;
    }
    note("eps=%g: %g solutions, max residual %.3g, %.3f s", eps, static_cast<double>(set.segments.size()), worst, secs);
    note("multistart found %g distinct solutions, sets agree: %g", static_cast<double>(ms.size()), same ? 1 : 0);
    ok = ok && set.segments.size() == 128 && worst <= 1e-9 && same && secs < 10.0;
  }
  return ok;
}

bool criterion2() {
  ModelInstance m = model_from_json({{"name", "double-well"}, {"epsilon", 0.4}, {"mode", "1d"}});
  auto t = Clock::now();
  auto fibers = scan_fibers_1d(m, BasePoint::scalar(0.0), 0, 8);
  RefinementTree tree = refine_1d(m, fibers, std::nullopt, 8);
  CantorCertificate cert = certify(tree, tree.delta_measured);
  const double secs = since(t);
  note("depth 8: %g components, nesting violation %.3g, %.3f s", static_cast<double>(tree.component_count.back()),
       tree.max_nesting_violation, secs);
  note("max diameter %.6g <= 2(1-delta)^8 = %.6g (delta = %.6g)", cert.max_diameter, cert.contraction_bound,
       cert.delta_measured);
  note("min gap %.6g", cert.min_gap);
  return tree.component_count.back() == 256 && tree.nesting_ok && tree.max_nesting_violation == 0.0 &&
         cert.max_diameter <= cert.contraction_bound && cert.min_gap > 0.0 && cert.split_ok && secs < 30.0;
}

bool criterion3() {
  bool ok = true;
  for (double eps : {0.5, 0.1, 0.01}) {
    ModelInstance m = builtin_model("linear", {{"epsilon", eps}});
    GraphK K = newton_solve_K(m, TorusGrid{1024}, std::vector<double>(1024, 0.25));
    double mx = 0.0;
    for (double v : K.values) mx = std::max(mx, std::fabs(v));
    note("linear eps=%g: residual %.3g, sup|K| %.3g", eps, K.residual_norm, mx);
    ok = ok && K.residual_norm < 1e-12 && mx < 1e-12;
  }
  ModelInstance sm = builtin_model("standard-map", {{"epsilon", 0.05}, {"kappa", 0.5}, {"gamma", 0.02}});
  GraphK a = newton_solve_K(sm, TorusGrid{1024}, branch_guess(sm, TorusGrid{1024}, 2));
  GraphK b = newton_solve_K(sm, TorusGrid{2048}, branch_guess(sm, TorusGrid{2048}, 2));
  double d = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) d = std::max(d, std::fabs(a.values[i] - b.values[2 * i]));
  note("standard map kappa=0.5 gamma=0.02 eps=0.05: N=1024 vs 2048 sup diff %.3g", d);
  return ok && d <= 1e-8;
}

bool criterion4() {
  ModelInstance m = builtin_model("linear", {{"epsilon", 0.1}});
  GraphK K;
  K.grid = TorusGrid{1024};
  K.values.assign(1024, 0.0);
  LyapunovResult r = lyapunov_exponents(m, K, BasePoint::scalar(0.0), 10000);
  const double want = std::log((78.0 + std::sqrt(6080.0)) / 2.0);
  note("lambda1 %.12g, expected %.12g, |diff| %.3g", r.lambda1, want, std::fabs(r.lambda1 - want));
  note("lambda1 + lambda2 = %.3g", r.lambda1 + r.lambda2);
  return std::fabs(r.lambda1 - want) <= 1e-6 && std::fabs(r.lambda1 + r.lambda2) <= 1e-3;
}

ModelInstance periodic_model() {
  return model_from_json({{"name", "standard-map"},
                          {"epsilon", 0.05},
                          {"rescale", {1.0, 0.0}},
                          {"params", {{"gamma", 0.0}, {"kappa", 1.0}, {"phase", 0.25}}}});
}

bool criterion5() {
  ModelInstance m = periodic_model();
  bool ok = true;
  const long l = 100;
  const std::vector<std::pair<std::string, Staircase>> cases = {
      {"0", staircase(0.0, -l - 1, l + 1)},
      {"golden", staircase(kGolden, -l - 1, l + 1)},
      {"1/3", staircase_rational(1, 3, -l - 1, l + 1)}};
  for (const auto& [label, s] : cases) {
    RotationOrbit o = construct_rotation_orbit(m, s, l, 0.0, 0.0);
    double worst_rho = 0.0;
    bool rho_ok = true;
    for (std::size_t i = 0; i < o.rho.profile.size(); ++i) {
      const double N = static_cast<double>(i + 1);
      const double excess = std::fabs(o.rho.profile[i] - s.omega) - 4.0 / N;
      worst_rho = std::max(worst_rho, std::fabs(o.rho.profile[i] - s.omega) * N);
      rho_ok = rho_ok && excess <= 1e-12;
    }
    std::printf("    omega=%s: window %zu sites, max|y_k - k omega| %.6g, max N|rho_N - omega| %.6g, residual %.3g\n",
                label.c_str(), o.y.size(), o.max_deviation, worst_rho, o.original_residual);
    ok = ok && o.y.size() == 201 && o.bound_ok && o.max_deviation <= 2.0 && rho_ok;
  }
  return ok;
}

bool criterion6() {
  bool ok = true;
  for (double eps : {0.1, 0.01}) {
    ModelInstance m = model_from_json({{"name", "double-well"}, {"epsilon", eps}, {"mode", "1d"}});
    ConditionReport c = verify_conditions(m, 64);
    FiberReport r = scan_fiber_1d(m, BasePoint::scalar(0.0));
    BoundCheck b = check_projection_bound(r, m);
    note("eps=%g: verify_conditions K1 = min|dZ/da| = %.6g, %g almost-horizontal components", eps,
         c.min_abs_dZa.value, static_cast<double>(r.count_almost_horizontal));
    for (const ComponentBound& e : b.entries)
      note("component %g: width %.6g >= 2K1/K2 = %.6g (K2 %.6g)", e.index, e.width, e.bound, e.K2);
    ok = ok && b.all_pass && r.count_almost_horizontal == 2;
  }
  return ok;
}

// A near-tangency with a wall asks for a finer grid; retry up to 32768 columns.
FiberReport scan_resolved(const ModelInstance& m, const BasePoint& t) {
  for (int grid = 512;; grid *= 4) {
    try {
      return scan_fiber_1d(m, t, grid);
    } catch (const ResolutionError&) {
      if (grid >= 32768) throw;
    }
  }
}

bool criterion7() {
  const int n_theta = 64;
  std::vector<double> s_grid;
  for (int i = 20; i >= 0; --i) s_grid.push_back(i / 20.0);
  std::vector<int> multi(s_grid.size()), single(s_grid.size());
  for (std::size_t i = 0; i < s_grid.size(); ++i) {
    ModelInstance m = model_from_json(
        {{"name", "vs-family"}, {"epsilon", 0.01}, {"mode", "1d"}, {"params", {{"s", s_grid[i]}}}});
    for (int k = 0; k < n_theta; ++k) {
      FiberReport r = scan_resolved(m, BasePoint::scalar(static_cast<double>(k) / n_theta));
      if (r.count_almost_horizontal >= 2) ++multi[i];
      if (r.count_almost_horizontal == 1) ++single[i];
    }
  }
  for (std::size_t i = 0; i < s_grid.size(); ++i)
    note("s=%.2f: fibers with one component %g, with >=2 %g", s_grid[i], single[i], multi[i]);
  // Transition: adjacent grid values where the multi-component set appears or vanishes.
  for (std::size_t i = 0; i + 1 < s_grid.size(); ++i)
    if ((multi[i] > 0) != (multi[i + 1] > 0))
      note("transition interval s in [%.2f, %.2f] (multi-component fibers %g -> %g)", s_grid[i + 1], s_grid[i],
           multi[i], multi[i + 1]);
  const bool start_single = single.front() == n_theta;
  const bool end_multi = multi.back() > 0;
  note("at s=1 every fiber single: %g; at s=0 some fiber multi: %g", start_single, end_multi);
  return start_single && end_multi;
}

bool criterion8() {
  ModelInstance m = builtin_model("standard-map", {{"epsilon", 0.05}, {"kappa", 0.5}, {"gamma", 0.0}});
  const BasePoint t0 = BasePoint::scalar(0.1);
  SolutionSet set = solve_window_2d(m, t0, 3, 0.0, 0.0);
  bool ok = !set.segments.empty();
  for (double init : {0.6, 0.7, -0.3}) {
    FlowResult f = gradient_flow(m, t0, 3, 0.0, 0.0, 4000.0, 0.05, std::vector<double>(7, init));
    double best = 1e300;
    for (const OrbitSegment& s : set.segments) best = std::min(best, sup_diff(s.values, f.segment.values));
    note("flow from %g: converged %g, residual %.3g, distance to nearest window solution %.3g", init,
         f.converged, f.segment.max_residual(), best);
    ok = ok && f.converged && best <= 1e-6;
  }
  return ok;
}

// Runs each config through the file-writing pipeline and returns the file hashes.
std::string file_hashes(const json& config, const std::string& sub, int workers, const fs::path& dir) {
  fs::remove_all(dir);
  RunRequest req{sub, config.dump(), dir.string(), workers};
  json man = run(req);
  fs::remove_all(dir);
  return man["files"].dump();
}

bool criterion9() {
  auto cfg = [](json model, json command) { return json{{"model", model}, {"command", command}}; };
  const json dw = {{"name", "double-well"}, {"epsilon", 0.01}};
  const json dw1 = {{"name", "double-well"}, {"epsilon", 0.4}, {"mode", "1d"}};
  const json lin = {{"name", "linear"}, {"epsilon", 0.1}};
  const json sm = {{"name", "standard-map"}, {"epsilon", 0.05}, {"params", {{"kappa", 0.5}, {"gamma", 0.02}}}};
  const json per = {{"name", "standard-map"},
                    {"epsilon", 0.05},
                    {"rescale", {1.0, 0.0}},
                    {"params", {{"gamma", 0.0}, {"kappa", 1.0}, {"phase", 0.25}}}};
  const json vs = {{"name", "vs-family"}, {"epsilon", 0.01}, {"mode", "1d"}, {"params", {{"s", 1.0}}}};
  json sweep = {{"name", "sweep"}, {"inner", {{"name", "scan-fiber"}, {"theta_samples", 16}}}};
  sweep["grid"] = json::array({{{"param", "s"}, {"values", {{"from", 1.0}, {"to", 0.0}, {"count", 6}}}}});
  const std::vector<std::pair<std::string, json>> runs = {
      {"solve-window", cfg(dw, {{"name", "solve-window"}, {"l", 3}})},
      {"refine", cfg(dw1, {{"name", "refine"}, {"depth", 8}})},
      {"solve-k", cfg(sm, {{"name", "solve-k"}, {"N", 1024}, {"guess", {{"branch", 2}}}})},
      {"lyapunov", cfg(lin, {{"name", "lyapunov"}, {"N", 256}, {"guess", {{"constant", 0.0}}}, {"steps", 10000}})},
      {"rotation-orbit", cfg(per, {{"name", "rotation-orbit"}, {"omega", kGolden}, {"l", 100}})},
      {"scan-fiber", cfg(dw1, {{"name", "scan-fiber"}, {"theta_samples", 8}})},
      {"gradient-flow",
       cfg({{"name", "standard-map"}, {"epsilon", 0.05}, {"params", {{"kappa", 0.5}, {"gamma", 0.0}}}},
           {{"name", "gradient-flow"}, {"l", 3}, {"theta0", 0.1}, {"init", 0.6}, {"t_end", 4000}})},
      {"sweep", cfg(vs, sweep)}};
  const fs::path root = fs::temp_directory_path() / "antilimit_acceptance";
  bool ok = true;
  for (const auto& [sub, config] : runs) {
    const std::string ref = file_hashes(config, sub, 1, root / "a");
    bool same = file_hashes(config, sub, 1, root / "b") == ref;
    for (int w : {4, 8}) same = same && file_hashes(config, sub, w, root / ("w" + std::to_string(w))) == ref;
    std::printf("    %s: outputs identical across repeats and workers 1/4/8: %s\n", sub.c_str(), same ? "yes" : "no");
    ok = ok && same;
  }
  fs::remove_all(root);
  return ok;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<bool()>>> criteria = {
      {"1 window existence (2^7 solutions, multistart agreement)", criterion1},
      {"2 Cantor certification (depth 8)", criterion2},
      {"3 invariant graph (linear K = 0, standard-map grid refinement)", criterion3},
      {"4 Lyapunov oracle", criterion4},
      {"5 rotation orbits (omega = 0, golden, 1/3)", criterion5},
      {"6 projection width bound", criterion6},
      {"7 V_s bifurcation sweep", criterion7},
      {"8 gradient flow vs window solver", criterion8},
      {"9 determinism", criterion9}};
  int failed = 0;
  for (const auto& [label, fn] : criteria) {
    bool pass = false;
    std::string why;
    try {
      pass = fn();
    } catch (const Error& e) {
      why = e.to_json().dump();
    } catch (const std::exception& e) {
      why = e.what();
    }
    std::printf("%s criterion %s\n", pass ? "PASS" : "FAIL", label.c_str());
    if (!why.empty()) std::printf("    exception: %s\n", why.c_str());
    std::fflush(stdout);
    failed += pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
