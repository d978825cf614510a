#include "orbits/orbits.hpp"
#include "core/text.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <lapacke.h>

#include "core/errors.hpp"
#include "core/parallel.hpp"
#include "core/roots.hpp"

namespace antilimit {

namespace {

constexpr double kInsideSlack = 1e-9;
constexpr double kDistinct = 1e-6;

double sup_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::fabs(x));
  return s;
}

double sup_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::fabs(a[i] - b[i]));
  return s;
}

}  // namespace

double OrbitSegment::max_residual() const {
  double r = 0.0;
  for (double x : residuals) r = std::max(r, x);
  return r;
}

nlohmann::json OrbitSegment::to_json() const {
  nlohmann::json j = {{"theta0", theta0.to_vector()},
                      {"window", {k_min, k_max}},
                      {"values", values},
                      {"residuals", residuals},
                      {"max_residual", max_residual()},
                      {"method", method}};
  if (boundary) j["boundary"] = {{"a", boundary->first}, {"b", boundary->second}};
  if (!itinerary.empty()) j["itinerary"] = itinerary;
  return j;
}

nlohmann::json SolutionSet::to_json() const {
  nlohmann::json segs = nlohmann::json::array();
  for (const OrbitSegment& s : segments) segs.push_back(s.to_json());
  return {{"count", segments.size()}, {"complete", complete}, {"diagnostics", diagnostics},
          {"segments", segs}};
}

std::vector<double> window_residuals(const ModelInstance& m, const BasePoint& theta0, long k_min,
                                     const std::vector<double>& x, double a, double b) {
  const std::size_t n = x.size();
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) {
    const long k = k_min + static_cast<long>(i);
    const double next = i + 1 < n ? x[i + 1] : a;
    const double prev = i > 0 ? x[i - 1] : b;
    r[i] = std::fabs(m.site_f(k, m.theta(k, theta0), next, x[i], prev));
  }
  return r;
}

std::vector<double> chain_residuals(const ModelInstance& m, const BasePoint& theta0, long k_min,
                                    const std::vector<double>& x) {
  std::vector<double> r;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const long k = k_min + static_cast<long>(i);
    r.push_back(std::fabs(m.f(m.theta(k, theta0), x[i + 1], x[i], 0.0)));
  }
  return r;
}

std::vector<double> solve_backward_1d(const ModelInstance& m, const BasePoint& theta, double x_next,
                                      std::optional<int> component, const FiberReport* fiber) {
  m.require_small_epsilon("solve_backward_1d");
  if (!(x_next >= -1.0 && x_next <= 1.0))
    throw ContractError("x_next must lie in I", {{"x_next", x_next}});
  auto g = [&](double x) { return m.f(theta, x_next, x, 0.0); };
  std::vector<double> roots = bracket_roots(g, -1.0, 1.0, 512, 1e-12);
  if (roots.empty()) {
    throw ResolutionError("no preimage in I", {{"theta", theta.to_vector()}, {"x_next", x_next},
                                               {"epsilon", m.epsilon()}});
  }
  if (!component) return roots;

  FiberReport local;
  if (!fiber) {
    local = scan_fiber_1d(m, theta, 512, m.mode() == Mode::TwoD ? std::optional<double>(0.0) : std::nullopt);
    fiber = &local;
  }
  const auto ah = fiber->almost_horizontal();
  if (*component < 0 || *component >= static_cast<int>(ah.size())) {
    throw ContractError("component index out of range",
                        {{"component", *component}, {"available", ah.size()}});
  }
  const PlanarComponent& c = *ah[static_cast<std::size_t>(*component)];
  std::vector<double> on;
  for (double r : roots)
    if (r >= c.y_lo - 1e-10 && r <= c.y_hi + 1e-10) on.push_back(r);
  if (on.empty()) {
    throw ResolutionError("no preimage on the requested component",
                          {{"component", *component}, {"x_next", x_next}, {"y_range", {c.y_lo, c.y_hi}}});
  }
  return on;
}

double solve_forward_1d(const ModelInstance& m, const BasePoint& theta, double x_k) {
  auto g = [&](double x) { return m.f(theta, x, x_k, 0.0); };
  const double lo = g(-1.0), hi = g(1.0);
  if (lo == 0.0 || hi == 0.0 || (lo < 0) == (hi < 0)) {
    throw BoundaryEscape("forward image leaves the interior of I",
                         {{"theta", theta.to_vector()}, {"x_k", x_k}, {"f_left", lo}, {"f_right", hi}});
  }
  return bisect_full(g, -1.0, 1.0, lo, hi);
}

std::vector<std::vector<double>> zero_branches(const ModelInstance& m, const BasePoint& theta0, long l) {
  std::vector<std::vector<double>> out;
  for (long k = -l; k <= l; ++k) {
    const BasePoint t = m.theta(k, theta0);
    auto roots = bracket_roots([&](double x) { return m.V(t, x); }, -1.0, 1.0, 512, 1e-12);
    if (roots.empty()) {
      throw HypothesisError("V has no zero in I on a fiber of the window",
                            {{"k", k}, {"theta", t.to_vector()}});
    }
    out.push_back(std::move(roots));
  }
  return out;
}

std::optional<std::vector<double>> newton_window(const ModelInstance& m, const BasePoint& theta0, long l,
                                                 double a, double b, std::vector<double> x,
                                                 const WindowOptions& opt, std::string* status) {
  const std::size_t n = x.size();
  std::vector<BasePoint> th(n);
  for (std::size_t i = 0; i < n; ++i) th[i] = m.theta(-l + static_cast<long>(i), theta0);
  auto residual = [&](const std::vector<double>& v, std::vector<double>& r) {
    for (std::size_t i = 0; i < n; ++i) {
      const double next = i + 1 < n ? v[i + 1] : a;
      const double prev = i > 0 ? v[i - 1] : b;
      r[i] = m.site_f(-l + static_cast<long>(i), th[i], next, v[i], prev);
    }
    return sup_norm(r);
  };
  auto set_status = [&](const char* s) {
    if (status) *status = s;
  };
  auto inside = [](const std::vector<double>& v) {
    for (double e : v)
      if (!(std::fabs(e) <= 1.0 + kInsideSlack)) return false;
    return true;
  };

  std::vector<double> r(n), trial(n), rt(n), dl(n), d(n), du(n), rhs(n);
  double norm = residual(x, r);
  for (int it = 0; it < opt.max_iterations; ++it) {
    if (norm <= 1e-14) break;
    for (std::size_t i = 0; i < n; ++i) {
      const double next = i + 1 < n ? x[i + 1] : a;
      const double prev = i > 0 ? x[i - 1] : b;
      const auto g = m.site_grad(-l + static_cast<long>(i), th[i], next, x[i], prev);
      d[i] = g[1];
      if (i + 1 < n) du[i] = g[0];   // d f_i / d x_{i+1}
      if (i > 0) dl[i - 1] = g[2];   // d f_i / d x_{i-1}
      rhs[i] = -r[i];
    }
    const lapack_int info = LAPACKE_dgtsv(LAPACK_COL_MAJOR, static_cast<lapack_int>(n), 1, dl.data(),
                                          d.data(), du.data(), rhs.data(), static_cast<lapack_int>(n));
    if (info != 0) {
      set_status("diverged");
      return std::nullopt;
    }
    double t = 1.0;
    bool accepted = false;
    double tnorm = 0.0;
    for (int h = 0; h <= opt.max_halvings; ++h, t *= 0.5) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] + t * rhs[i];
      tnorm = residual(trial, rt);
      if (tnorm < norm) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (norm <= 1e-10) break;  // already at rounding level
      set_status("diverged");
      return std::nullopt;
    }
    x.swap(trial);
    r.swap(rt);
    norm = tnorm;
    if (!inside(x)) {
      set_status("left-I");
      return std::nullopt;
    }
    if (sup_norm(rhs) * t <= 1e-15 && norm <= 1e-10) break;
  }
  if (!(norm <= 1e-10)) {
    set_status("diverged");
    return std::nullopt;
  }
  for (double& e : x) e = std::clamp(e, -1.0, 1.0);
  set_status("converged");
  return x;
}

SolutionSet solve_window_2d(const ModelInstance& m, const BasePoint& theta0, long l, double a, double b,
                            const WindowOptions& opt) {
  m.require_small_epsilon("solve_window_2d");
  if (l < 0) throw ContractError("half-window must be non-negative", {{"l", l}});
  if (!(std::fabs(a) <= 1.0 && std::fabs(b) <= 1.0))
    throw ContractError("boundary values must lie in I", {{"a", a}, {"b", b}});
  const auto branches = zero_branches(m, theta0, l);
  const std::size_t n = branches.size();

  double combos = 1.0;
  for (const auto& br : branches) combos *= static_cast<double>(br.size());
  std::vector<std::vector<int>> patterns;
  bool complete = false;
  if (combos <= static_cast<double>(opt.max_seeds)) {
    complete = true;
    const auto total = static_cast<std::size_t>(combos);
    for (std::size_t s = 0; s < total; ++s) {
      std::vector<int> pat(n);
      std::size_t rem = s;
      for (std::size_t i = n; i-- > 0;) {
        pat[i] = static_cast<int>(rem % branches[i].size());
        rem /= branches[i].size();
      }
      patterns.push_back(std::move(pat));
    }
  } else if (!opt.itineraries.empty()) {
    for (const auto& it : opt.itineraries) {
      if (it.size() != n) throw ContractError("itinerary length must be 2l+1", {{"length", it.size()}});
      for (std::size_t i = 0; i < n; ++i)
        if (it[i] < 0 || it[i] >= static_cast<int>(branches[i].size()))
          throw ContractError("itinerary index out of range", {{"site", static_cast<long>(i) - l}});
      patterns.push_back(it);
    }
  } else {
    throw ContractError("branch combinations exceed max_seeds; supply itineraries",
                        {{"combinations", combos}, {"max_seeds", opt.max_seeds}});
  }

  std::vector<std::optional<std::vector<double>>> results(patterns.size());
  std::vector<std::string> status(patterns.size());
  parallel_for(patterns.size(), opt.workers, [&](std::size_t s) {
    std::vector<double> seed(n);
    for (std::size_t i = 0; i < n; ++i) seed[i] = branches[i][static_cast<std::size_t>(patterns[s][i])];
    results[s] = newton_window(m, theta0, l, a, b, std::move(seed), opt, &status[s]);
  });

  SolutionSet set;
  set.complete = complete;
  int diverged = 0, left = 0, dup = 0;
  for (std::size_t s = 0; s < results.size(); ++s) {
    if (!results[s]) {
      (status[s] == "left-I" ? left : diverged) += 1;
      continue;
    }
    bool fresh = true;
    for (const OrbitSegment& seg : set.segments)
      if (sup_distance(seg.values, *results[s]) <= kDistinct) {
        fresh = false;
        break;
      }
    if (!fresh) {
      ++dup;
      continue;
    }
    OrbitSegment seg;
    seg.theta0 = theta0;
    seg.k_min = -l;
    seg.k_max = l;
    seg.values = *results[s];
    seg.boundary = std::make_pair(a, b);
    seg.residuals = window_residuals(m, theta0, -l, seg.values, a, b);
    seg.itinerary = patterns[s];
    seg.method = "newton";
    set.segments.push_back(std::move(seg));
  }
  set.diagnostics = {{"seeds", patterns.size()}, {"converged", patterns.size() - diverged - left},
                     {"diverged", diverged},      {"left_I", left},
                     {"duplicates", dup},         {"branch_counts", nlohmann::json::array()}};
  for (const auto& br : branches) set.diagnostics["branch_counts"].push_back(br.size());
  if (set.segments.empty()) {
    throw HypothesisError("no window solution found; existence hypothesis violated", set.diagnostics);
  }
  return set;
}

OrbitSegment make_segment_1d(const ModelInstance& m, const BasePoint& theta0, long k_min,
                             std::vector<double> values) {
  if (values.empty()) throw ContractError("segment needs at least one value");
  OrbitSegment s;
  s.theta0 = theta0;
  s.k_min = k_min;
  s.k_max = k_min + static_cast<long>(values.size()) - 1;
  s.values = std::move(values);
  s.residuals = chain_residuals(m, theta0, k_min, s.values);
  s.method = "recursive";
  return s;
}

OrbitSegment extend_segment(const ModelInstance& m, const OrbitSegment& seg, Direction dir,
                            std::optional<int> component) {
  if (m.mode() != Mode::OneD)
    throw ContractError("extend_segment works on 1D models; enlarge the window for 2D");
  if (seg.values.empty()) throw ContractError("cannot extend an empty segment");
  OrbitSegment out = seg;
  out.method = "recursive";
  if (out.itinerary.size() != out.values.size()) out.itinerary.assign(out.values.size(), -1);
  if (dir == Direction::Forward) {
    if (component) throw ContractError("forward extension is unique; no component index applies");
    const double x = solve_forward_1d(m, m.theta(seg.k_max, seg.theta0), seg.values.back());
    out.values.push_back(x);
    out.itinerary.push_back(0);
    ++out.k_max;
  } else {
    const long k = seg.k_min - 1;
    const BasePoint t = m.theta(k, seg.theta0);
    const std::vector<double> all = solve_backward_1d(m, t, seg.values.front());
    double chosen;
    if (component) {
      chosen = solve_backward_1d(m, t, seg.values.front(), component).front();
    } else {
      chosen = all.front();
      for (double r : all)
        if (std::fabs(r) < std::fabs(chosen)) chosen = r;
    }
    const int idx = static_cast<int>(std::find(all.begin(), all.end(), chosen) - all.begin());
    out.values.insert(out.values.begin(), chosen);
    out.itinerary.insert(out.itinerary.begin(), idx);
    --out.k_min;
  }
  out.residuals = chain_residuals(m, out.theta0, out.k_min, out.values);
  if (out.max_residual() > 1e-9) {
    throw ResolutionError("extended segment exceeds the residual tolerance",
                          {{"max_residual", out.max_residual()}});
  }
  return out;
}

std::string orbit_csv(const ModelInstance& m, const OrbitSegment& seg) {
  const int d = m.base().dim();
  std::string out = "k";
  for (int i = 0; i < d; ++i) out += ",theta_" + std::to_string(i);
  out += ",x_k,residual_k\n";
  for (std::size_t i = 0; i < seg.values.size(); ++i) {
    const long k = seg.k_min + static_cast<long>(i);
    const BasePoint t = m.theta(k, seg.theta0);
    out += std::to_string(k);
    for (int c = 0; c < d; ++c) out += "," + fmt17(t[c]);
    out += "," + fmt17(seg.values[i]) + ",";
    if (i < seg.residuals.size()) out += fmt17(seg.residuals[i]);
    out += "\n";
  }
  return out;
}

}  // namespace antilimit
