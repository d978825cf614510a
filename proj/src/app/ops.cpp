#include "app/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "cantor/cantor.hpp"
#include "core/builtin.hpp"
#include "core/conditions.hpp"
#include "core/errors.hpp"
#include "core/parallel.hpp"
#include "core/text.hpp"
#include "fhim/fhim.hpp"
#include "levelset/levelset.hpp"
#include "orbits/orbits.hpp"
#include "rotation/rotation.hpp"

namespace antilimit {

namespace {

using nlohmann::json;

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(); }

int positive_int(const Params& p, const std::string& key, long fallback, long lo = 1) {
  long v = p.integer(key, fallback);
  if (v < lo || v > std::numeric_limits<int>::max())
    throw ConfigError("'" + p.key_path(key) + "' must be at least " + std::to_string(lo),
                      {{"key", p.key_path(key)}});
  return static_cast<int>(v);
}

BasePoint default_theta(const ModelInstance& m) {
  BasePoint t;
  t.dim = m.base().dim();
  return t;
}

// ---- verify -------------------------------------------------------------

OpResult op_verify(const ModelInstance& m, const Params& p, const OpContext& ctx) {
  const int grid = positive_int(p, "grid", 64);
  ConditionReport rep = verify_conditions(m, grid, ctx.workers);
  OpResult r;
  r.name = "conditions.json";
  r.data = rep.to_json();
  r.metrics = {{"all_pass", rep.all_pass()}, {"C0", rep.c0},          {"C1", rep.c1},
               {"C2", rep.c2},               {"partials", rep.partials_ok}, {"epsilon0", rep.epsilon0},
               {"min_abs_dZa", rep.min_abs_dZa.value}, {"max_abs_Z", rep.max_abs_Z.value}};
  return r;
}

// ---- scan-fiber ---------------------------------------------------------

OpResult op_scan_fiber(const ModelInstance& m, const Params& p, const OpContext& ctx) {
  std::vector<BasePoint> thetas;
  if (p.has("thetas")) {
    for (double t : p.numbers("thetas")) thetas.push_back(BasePoint::scalar(t));
  } else if (p.has("theta_samples")) {
    const int n = positive_int(p, "theta_samples", 1);
    for (int i = 0; i < n; ++i) thetas.push_back(BasePoint::scalar(static_cast<double>(i) / n));
  } else {
    thetas.push_back(p.point("theta", default_theta(m)));
  }
  std::optional<double> frozen;
  if (p.has("frozen")) frozen = p.number("frozen");
  const bool one_d = m.mode() == Mode::OneD || frozen.has_value();
  const int grid = positive_int(p, "grid", one_d ? 512 : 128, 8);
  const int slices = positive_int(p, "slices", 17, 2);
  const bool check_bound = p.boolean("check_bound", true);

  const bool single = thetas.size() == 1;
  const int inner = single ? ctx.workers : 1;
  std::vector<FiberReport> reports(thetas.size());
  std::vector<BoundCheck> bounds(thetas.size());
  parallel_for(thetas.size(), single ? 1 : ctx.workers, [&](std::size_t i) {
    reports[i] = one_d ? scan_fiber_1d(m, thetas[i], grid, frozen, inner)
                       : scan_fiber_2d(m, thetas[i], slices, grid, inner);
    if (check_bound) bounds[i] = check_projection_bound(reports[i], m);
  });

  OpResult r;
  int min_ah = std::numeric_limits<int>::max(), max_ah = 0, multi = 0, none = 0;
  double min_width = std::numeric_limits<double>::infinity();
  bool bound_pass = true;
  std::string table = "theta,almost_horizontal,min_projection_width,slope_margin,bound_pass\n";
  json list = json::array();
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const FiberReport& f = reports[i];
    min_ah = std::min(min_ah, f.count_almost_horizontal);
    max_ah = std::max(max_ah, f.count_almost_horizontal);
    if (f.count_almost_horizontal >= 2) ++multi;
    if (f.count_almost_horizontal == 0) ++none;
    if (f.count_almost_horizontal > 0) min_width = std::min(min_width, f.min_projection_width);
    if (check_bound) bound_pass = bound_pass && bounds[i].all_pass;
    json entry = f.to_json(single);
    if (check_bound) entry["projection_bound"] = bounds[i].to_json();
    list.push_back(entry);
    table += fmt17(f.theta[0]) + "," + std::to_string(f.count_almost_horizontal) + "," +
             fmt17(f.min_projection_width) + "," + fmt17(f.slope_margin) + "," +
             (check_bound ? (bounds[i].all_pass ? "true" : "false") : "") + "\n";
  }
  if (single) {
    r.name = "fiber.json";
    r.data = list[0];
    r.extra.push_back({"polylines.csv", polylines_csv(reports[0]), true});
  } else {
    r.name = "fibers.json";
    r.data = {{"fibers", list}};
    r.extra.push_back({"fibers.csv", table, true});
  }
  r.metrics = {{"fibers", reports.size()},
               {"min_almost_horizontal", min_ah},
               {"max_almost_horizontal", max_ah},
               {"fibers_multi", multi},
               {"fibers_none", none},
               {"min_projection_width", finite_or_null(min_width)}};
  if (check_bound) r.metrics["bound_pass"] = bound_pass;
  return r;
}

// ---- solve-window -------------------------------------------------------

OpResult op_solve_window(const ModelInstance& m, const Params& p, const OpContext& ctx) {
  const long l = positive_int(p, "l", 3, 0);
  const double a = p.number("a", 0.0), b = p.number("b", 0.0);
  const BasePoint t0 = p.point("theta0", default_theta(m));
  WindowOptions opt;
  opt.workers = ctx.workers;
  opt.max_seeds = positive_int(p, "max_seeds", opt.max_seeds);
  SolutionSet set = solve_window_2d(m, t0, l, a, b, opt);

  OpResult r;
  r.name = "solutions.json";
  r.data = set.to_json();
  std::string csv = "solution,k,x,residual\n";
  double worst = 0.0;
  for (std::size_t s = 0; s < set.segments.size(); ++s) {
    const OrbitSegment& seg = set.segments[s];
    worst = std::max(worst, seg.max_residual());
    for (std::size_t i = 0; i < seg.values.size(); ++i)
      csv += std::to_string(s) + "," + std::to_string(seg.k_min + static_cast<long>(i)) + "," +
             fmt17(seg.values[i]) + "," + fmt17(seg.residuals[i]) + "\n";
  }
  r.extra.push_back({"solutions.csv", csv, true});
  r.metrics = {{"count", set.segments.size()}, {"complete", set.complete}, {"max_residual", worst}};
  return r;
}

// ---- refine / certify ---------------------------------------------------

RefinementTree build_tree(const ModelInstance& m, const Params& p, const OpContext& ctx) {
  const int depth = positive_int(p, "depth", m.mode() == Mode::OneD ? 8 : 2);
  const BasePoint t0 = p.point("theta0", default_theta(m));
  std::optional<Itinerary> itin;
  if (p.has("itinerary")) itin = Itinerary{p.integers("itinerary"), {}};
  if (m.mode() == Mode::OneD) {
    const int grid = positive_int(p, "grid", 512, 8);
    auto fibers = scan_fibers_1d(m, t0, 0, depth, grid, ctx.workers);
    return refine_1d(m, fibers, itin, depth, ctx.workers);
  }
  const int slices = positive_int(p, "slices", 9, 2);
  const int grid = positive_int(p, "grid", 128, 8);
  auto fibers = scan_fibers_2d(m, t0, -depth, 2 * depth + 1, slices, grid, ctx.workers);
  return refine_2d(m, t0, fibers, itin, depth, ctx.workers);
}

OpResult op_refine(const ModelInstance& m, const Params& p, const OpContext& ctx) {
  RefinementTree tree = build_tree(m, p, ctx);
  OpResult r;
  r.name = "tree.json";
  r.data = tree.to_json();
  r.extra.push_back({"tree.csv", tree.depth_csv(), true});
  r.metrics = {{"depth", tree.depth},
               {"count", tree.component_count.empty() ? 0 : tree.component_count.back()},
               {"max_diameter", tree.max_diameter(tree.depth)},
               {"nesting_ok", tree.nesting_ok},
               {"delta_measured", tree.delta_measured}};
  return r;
}

OpResult op_certify(const ModelInstance& m, const Params& p, const OpContext& ctx) {
  RefinementTree tree = build_tree(m, p, ctx);
  const double delta = p.number("delta", tree.delta_measured);
  const double rho = p.number("rho", 1.0);
  CantorCertificate cert = certify(tree, delta, rho);
  OpResult r;
  r.name = "certificate.json";
  r.data = {{"certificate", cert.to_json()}, {"tree", tree.to_json()}};
  r.extra.push_back({"tree.csv", tree.depth_csv(), true});
  r.metrics = {{"pass", cert.pass()},           {"diameter_ok", cert.diameter_ok},
               {"split_ok", cert.split_ok},     {"nesting_ok", cert.nesting_ok},
               {"count_ok", cert.count_ok},     {"max_diameter", cert.max_diameter},
               {"min_gap", cert.min_gap},       {"box_dim", cert.box_dim_estimate}};
  return r;
}

// ---- rotation-orbit -----------------------------------------------------

OpResult op_rotation_orbit(const ModelInstance& m, const Params& p, const OpContext& ctx) {
  const long l = positive_int(p, "l", 100, 0);
  const double a = p.number("a", 0.0), b = p.number("b", 0.0);
  const BasePoint t0 = p.point("theta0", default_theta(m));
  const json& w = p.raw("omega");
  Staircase s;
  if (w.is_string()) s = staircase_from_string(w.get<std::string>(), -l - 1, l + 1);
  else if (w.is_number()) s = staircase(w.get<double>(), -l - 1, l + 1);
  else throw ConfigError("'" + p.key_path("omega") + "' must be a number or a \"p/q\" string",
                         {{"key", p.key_path("omega")}});
  RotationOrbit orbit = construct_rotation_orbit(m, s, l, a, b, t0, ctx.workers);
  OpResult r;
  r.name = "rotation.json";
  r.data = orbit.to_json();
  r.extra.push_back({"rotation.csv", orbit.csv(), true});
  double worst = 0.0;
  const auto& prof = orbit.rho.profile;
  for (std::size_t i = 0; i < prof.size(); ++i)
    worst = std::max(worst, std::fabs(prof[i] - orbit.omega) * static_cast<double>(i + 1));
  r.metrics = {{"max_deviation", orbit.max_deviation},
               {"bound_ok", orbit.bound_ok},
               {"rho_forward", orbit.rho.forward},
               {"rho_backward", orbit.rho.backward},
               {"max_N_rho_error", worst},
               {"original_residual", orbit.original_residual}};
  return r;
}

// ---- invariant graphs ---------------------------------------------------

TorusGrid parse_grid(const Params& p) {
  TorusGrid g;
  g.N = positive_int(p, "N", 1024, 4);
  std::string interp = p.string("interp", "trigonometric");
  if (interp == "trigonometric") g.interp = Interp::Trigonometric;
  else if (interp == "linear") g.interp = Interp::Linear;
  else throw ConfigError("'" + p.key_path("interp") + "' must be trigonometric or linear",
                         {{"key", p.key_path("interp")}});
  return g;
}

std::vector<double> parse_guess(const ModelInstance& m, const TorusGrid& g, const Params& p) {
  if (!p.has("guess")) return branch_guess(m, g, 0);
  Params q(p.raw("guess"), p.key_path("guess"));
  std::vector<double> K;
  if (q.has("constant")) K.assign(static_cast<std::size_t>(g.N), q.number("constant"));
  else if (q.has("values")) K = resample(q.numbers("values"), g.N, g.interp);
  else K = branch_guess(m, g, static_cast<int>(q.integer("branch", 0)));
  q.finish();
  return K;
}

NewtonKOptions newton_options(const OpContext& ctx) {
  NewtonKOptions o;
  o.workers = ctx.workers;
  return o;
}

OpResult op_solve_k(const ModelInstance& m, const Params& p, const OpContext& ctx) {
  TorusGrid g = parse_grid(p);
  std::vector<double> guess = parse_guess(m, g, p);
  const long lsteps = p.integer("lyapunov_steps", 0);
  const BasePoint t0 = p.point("theta0", default_theta(m));
  GraphK K = newton_solve_K(m, g, guess, newton_options(ctx));
  OpResult r;
  r.name = "graph.json";
  r.data = K.to_json();
  r.metrics = {{"residual", K.residual_norm},
               {"deriv_estimate", K.deriv_estimate},
               {"newton_iters", K.newton_iterations}};
  if (lsteps > 0) {
    LyapunovResult ly = lyapunov_exponents(m, K, t0, lsteps);
    r.data["lyapunov"] = ly.to_json();
    r.metrics["lambda1"] = ly.lambda1;
    r.metrics["lambda2"] = ly.lambda2;
    r.warnings = ly.warnings;
  }
  r.extra.push_back({"graph.csv", K.csv(), true});
  return r;
}

std::vector<double> parse_path(const Params& p) {
  const json& v = p.raw("path");
  if (v.is_array()) return p.numbers("path");
  Params q(v, p.key_path("path"));
  const double from = q.number("from"), to = q.number("to");
  const int count = positive_int(q, "count", 2, 1);
  q.finish();
  std::vector<double> out;
  for (int i = 0; i < count; ++i)
    out.push_back(count == 1 ? from : from + (to - from) * static_cast<double>(i) / (count - 1));
  return out;
}

OpResult op_continue(const ModelInstance& m, const Params& p, const OpContext& ctx) {
  TorusGrid g = parse_grid(p);
  const std::string parameter = p.string("parameter", "");
  if (parameter.empty())
    throw ConfigError("missing required key '" + p.key_path("parameter") + "'", {{"key", p.key_path("parameter")}});
  std::vector<double> path = parse_path(p);
  ContinuationOptions opt;
  opt.newton = newton_options(ctx);
  opt.deriv_threshold = p.number("deriv_threshold", opt.deriv_threshold);
  opt.max_N = positive_int(p, "max_N", opt.max_N, 4);
  // The initial guess belongs to the first path point.
  std::vector<double> guess = parse_guess(with_param(m, parameter, path.empty() ? 0.0 : path[0]), g, p);
  BreakdownScan scan = continue_parameter(m, g, parameter, path, guess, opt);
  OpResult r;
  r.name = "scan.json";
  r.data = scan.to_json();
  r.extra.push_back({"scan.csv", scan.csv(), true});
  if (scan.last_graph) r.extra.push_back({"graph.csv", scan.last_graph->csv(), true});
  long ok = 0;
  for (const ScanStep& s : scan.steps) ok += s.status == "ok";
  r.metrics = {{"critical", scan.critical ? json(*scan.critical) : json()},
               {"critical_reason", scan.critical_reason},
               {"steps_ok", ok},
               {"deriv_nondecreasing", scan.deriv_nondecreasing},
               {"final_deriv", scan.steps.empty() ? json() : finite_or_null(scan.steps.back().deriv_estimate)}};
  return r;
}

// ---- iterate / lyapunov -------------------------------------------------

OpResult op_iterate(const ModelInstance& m, const Params& p, const OpContext&) {
  const BasePoint t0 = p.point("theta0", default_theta(m));
  const double x0 = p.number("x0"), xm = p.number("x_minus1", 0.0);
  const long steps = positive_int(p, "steps", 1000, 0);
  Trajectory tr = iterate_skew(m, t0, x0, xm, steps);
  OpResult r;
  r.name = "trajectory.json";
  r.data = tr.to_json();
  r.extra.push_back({"trajectory.csv", tr.csv(), true});
  r.metrics = {{"steps", static_cast<long>(tr.states.size()) - 1}, {"truncated", tr.truncated}};
  if (tr.truncated) r.warnings.push_back("trajectory truncated: " + tr.reason);
  return r;
}

OpResult op_lyapunov(const ModelInstance& m, const Params& p, const OpContext& ctx) {
  const BasePoint t0 = p.point("theta0", default_theta(m));
  const long steps = positive_int(p, "steps", 10000, 0);
  const std::string source = p.string("source", "graph");
  LyapunovResult ly;
  json extra;
  if (source == "graph") {
    TorusGrid g = parse_grid(p);
    GraphK K = newton_solve_K(m, g, parse_guess(m, g, p), newton_options(ctx));
    ly = lyapunov_exponents(m, K, t0, steps);
    extra = K.to_json(false);
  } else if (source == "trajectory") {
    Trajectory tr = iterate_skew(m, t0, p.number("x0"), p.number("x_minus1", 0.0), steps);
    ly = lyapunov_exponents(m, tr);
    extra = tr.to_json();
  } else {
    throw ConfigError("'" + p.key_path("source") + "' must be graph or trajectory", {{"key", p.key_path("source")}});
  }
  OpResult r;
  r.name = "lyapunov.json";
  r.data = ly.to_json();
  r.data["source"] = source;
  r.data[source] = extra;
  r.warnings = ly.warnings;
  r.metrics = {{"lambda1", ly.lambda1}, {"steps", ly.steps}};
  if (!ly.one_d) {
    r.metrics["lambda2"] = ly.lambda2;
    r.metrics["sum"] = ly.lambda1 + ly.lambda2;
  }
  return r;
}

// ---- gradient-flow ------------------------------------------------------

OpResult op_gradient_flow(const ModelInstance& m, const Params& p, const OpContext&) {
  const long l = positive_int(p, "l", 3, 0);
  const double a = p.number("a", 0.0), b = p.number("b", 0.0);
  const BasePoint t0 = p.point("theta0", default_theta(m));
  const double t_end = p.number("t_end", 1000.0), dt = p.number("dt", 0.05);
  std::optional<std::vector<double>> init;
  if (p.has("init")) {
    if (p.raw("init").is_number())
      init = std::vector<double>(static_cast<std::size_t>(2 * l + 1), p.number("init"));
    else
      init = p.numbers("init");
  }
  FlowResult fl = gradient_flow(m, t0, l, a, b, t_end, dt, init);
  OpResult r;
  r.name = "flow.json";
  r.data = fl.to_json();
  r.extra.push_back({"flow.csv", orbit_csv(m, fl.segment), true});
  if (!fl.converged) r.warnings.push_back("gradient flow did not reach the stationarity tolerance by t_end");
  r.metrics = {{"converged", fl.converged}, {"final_speed", fl.final_speed}, {"t", fl.t},
               {"max_residual", fl.segment.max_residual()}};
  return r;
}

struct OpEntry {
  OpFn fn;
  std::vector<std::string> keys;  // accepted parameters, checked before running
};

const std::map<std::string, OpEntry>& registry() {
  static const std::vector<std::string> graph = {"N", "interp", "guess"};
  auto with = [](std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  static const std::map<std::string, OpEntry> ops = {
      {"verify", {op_verify, {"grid"}}},
      {"scan-fiber", {op_scan_fiber, {"theta", "thetas", "theta_samples", "frozen", "grid", "slices", "check_bound"}}},
      {"solve-window", {op_solve_window, {"l", "a", "b", "theta0", "max_seeds"}}},
      {"refine", {op_refine, {"depth", "theta0", "itinerary", "grid", "slices"}}},
      {"certify", {op_certify, {"depth", "theta0", "itinerary", "grid", "slices", "delta", "rho"}}},
      {"rotation-orbit", {op_rotation_orbit, {"omega", "l", "a", "b", "theta0"}}},
      {"solve-k", {op_solve_k, with(graph, {"lyapunov_steps", "theta0"})}},
      {"continue", {op_continue, with(graph, {"parameter", "path", "deriv_threshold", "max_N"})}},
      {"iterate", {op_iterate, {"theta0", "x0", "x_minus1", "steps"}}},
      {"lyapunov", {op_lyapunov, with(graph, {"theta0", "steps", "source", "x0", "x_minus1"})}},
      {"gradient-flow", {op_gradient_flow, {"l", "a", "b", "theta0", "t_end", "dt", "init"}}}};
  return ops;
}

}  // namespace

const OpFn* find_op(const std::string& name) {
  auto it = registry().find(name);
  return it == registry().end() ? nullptr : &it->second.fn;
}

void check_op_params(const std::string& name, const nlohmann::json& params, const std::string& path) {
  auto it = registry().find(name);
  if (it == registry().end()) throw ConfigError("unknown operation '" + name + "'", {{"key", path + ".name"}});
  if (!params.is_object() && !params.is_null())
    throw ConfigError("'" + path + "' must be an object", {{"key", path}});
  if (params.is_object())
    for (const auto& [key, value] : params.items())
      if (std::find(it->second.keys.begin(), it->second.keys.end(), key) == it->second.keys.end())
        throw ConfigError("unknown key '" + path + "." + key + "'", {{"key", path + "." + key}});
}

OpResult run_op(const std::string& name, const ModelInstance& m, const nlohmann::json& params,
                const OpContext& ctx, const std::string& path) {
  check_op_params(name, params, path);
  Params p(params, path);
  OpResult r = registry().at(name).fn(m, p, ctx);
  p.finish();
  return r;
}

}  // namespace antilimit
