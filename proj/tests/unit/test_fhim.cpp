#include <doctest.h>

#include <cmath>

#include "core/builtin.hpp"
#include "core/errors.hpp"
#include "fhim/fhim.hpp"
#include "orbits/orbits.hpp"

using namespace antilimit;
using nlohmann::json;

namespace {
const double kGolden = (std::sqrt(5.0) - 1) / 2;
ModelInstance linear(double eps) { return builtin_model("linear", {{"epsilon", eps}}); }
ModelInstance smap(double eps, double kappa, double gamma) {
  return builtin_model("standard-map", {{"epsilon", eps}, {"kappa", kappa}, {"gamma", gamma}});
}
double sup_diff(const std::vector<double>& a, const std::vector<double>& b, int stride = 1) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::fabs(a[i] - b[i * static_cast<std::size_t>(stride)]));
  return d;
}
}  // namespace

TEST_CASE("shift operator is exact on trigonometric polynomials") {
  const int N = 64;
  std::vector<double> v(N), out;
  const double pi = std::acos(-1.0);
  for (int i = 0; i < N; ++i) v[static_cast<std::size_t>(i)] = std::cos(2 * pi * 3 * i / N) + 0.5 * std::sin(2 * pi * 7 * i / N);
  ShiftOperator S(N, kGolden, Interp::Trigonometric);
  S.apply(v, out, +1);
  for (int i = 0; i < N; ++i) {
    double th = static_cast<double>(i) / N + kGolden;
    CHECK(out[static_cast<std::size_t>(i)] == doctest::Approx(std::cos(2 * pi * 3 * th) + 0.5 * std::sin(2 * pi * 7 * th)).epsilon(1e-12));
  }
  CHECK(interpolate(v, 0.123, Interp::Trigonometric) ==
        doctest::Approx(std::cos(2 * pi * 3 * 0.123) + 0.5 * std::sin(2 * pi * 7 * 0.123)).epsilon(1e-12));
  auto d = spectral_derivative(v);
  CHECK(d[0] == doctest::Approx(0.5 * 2 * pi * 7).epsilon(1e-10));
}

TEST_CASE("linear model: K = 0 for every eps") {
  // Constant guesses are exact Jacobian eigenvectors; GMRES must stop at the breakdown.
  for (double guess : {0.3, 0.25, 0.5})
  for (double eps : {0.5, 0.1, 0.01}) {
    GraphK K = newton_solve_K(linear(eps), TorusGrid{1024}, std::vector<double>(1024, guess));
    CHECK(K.residual_norm < 1e-12);
    for (double v : K.values) CHECK(std::fabs(v) < 1e-12);
  }
}

TEST_CASE("double-well on a rotation base: constant graphs +-1/2") {
  ModelInstance m = model_from_json(
      {{"name", "double-well"}, {"epsilon", 0.2}, {"base", {{"kind", "rotation"}, {"omega", {kGolden}}}}});
  TorusGrid g{256};
  GraphK up = newton_solve_K(m, g, std::vector<double>(256, 0.45));
  GraphK dn = newton_solve_K(m, g, std::vector<double>(256, -0.4));
  for (double v : up.values) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));
  for (double v : dn.values) CHECK(v == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("standard map: grid refinement and interpolation") {
  ModelInstance m = smap(0.05, 0.5, 0.02);
  GraphK a = newton_solve_K(m, TorusGrid{1024}, branch_guess(m, TorusGrid{1024}, 2));
  GraphK b = newton_solve_K(m, TorusGrid{2048}, branch_guess(m, TorusGrid{2048}, 2));
  CHECK(a.residual_norm <= 1e-10);
  CHECK(sup_diff(a.values, b.values, 2) < 1e-8);
  auto r = functional_residual(m, TorusGrid{1024}, a.values);
  double worst = 0.0;
  for (double x : r) worst = std::max(worst, std::fabs(x));
  CHECK(worst <= 1e-10);
  GraphK lin = newton_solve_K(m, TorusGrid{1024, Interp::Linear}, a.values);
  CHECK(lin.residual_norm <= 1e-10);
  CHECK(sup_diff(lin.values, a.values) < 1e-4);
  CHECK(sup_diff(resample(a.values, 2048, Interp::Trigonometric), b.values) < 1e-8);
}

TEST_CASE("Newton reports stagnation with the last iterate") {
  // V = x^2 + 1 has no zero, so no graph exists.
  ModelInstance m = model_from_json({{"name", "custom"},
                                     {"epsilon", 0.1},
                                     {"params", {{"V", {{"terms", {{{"c", 1.0}, {"p", {2}}}, {{"c", 1.0}}}}}}}}});
  try {
    newton_solve_K(m, TorusGrid{64}, std::vector<double>(64, 0.2));
    FAIL("expected NoConvergence");
  } catch (const NoConvergence& e) {
    CHECK(e.last_iterate().size() == 64);
  }
  CHECK_THROWS_AS(newton_solve_K(builtin_model("double-well", {{"epsilon", 0.1}}), TorusGrid{64},
                                 std::vector<double>(64, 0.5)),
                  ContractError);
}

TEST_CASE("continuation") {
  SUBCASE("linear model in eps: no breakdown, derivative zero") {
    ModelInstance m = linear(0.1);
    BreakdownScan s = continue_parameter(m, TorusGrid{256}, "epsilon", {0.1, 0.2, 0.3, 0.4}, std::vector<double>(256, 0.0));
    CHECK_FALSE(s.critical);
    REQUIRE(s.steps.size() == 4);
    for (const ScanStep& st : s.steps) {
      CHECK(st.status == "ok");
      CHECK(st.deriv_estimate < 1e-12);
    }
  }
  SUBCASE("single-point path") {
    ModelInstance m = linear(0.1);
    BreakdownScan s = continue_parameter(m, TorusGrid{64}, "epsilon", {0.3}, std::vector<double>(64, 0.0));
    CHECK(s.steps.size() == 1);
  }
  SUBCASE("standard map in gamma: derivative grows with gamma") {
    ModelInstance m = smap(0.05, 0.5, 0.0);
    TorusGrid g{256};
    BreakdownScan s = continue_parameter(m, g, "gamma", {0.0, 0.02, 0.04, 0.06}, branch_guess(m, g, 2));
    CHECK_FALSE(s.critical);
    CHECK(s.deriv_nondecreasing);
    CHECK(s.steps.back().deriv_estimate > s.steps[1].deriv_estimate);
  }
  SUBCASE("non-monotone path is a contract violation") {
    CHECK_THROWS_AS(continue_parameter(linear(0.1), TorusGrid{64}, "epsilon", {0.1, 0.3, 0.2}, std::vector<double>(64, 0.0)),
                    ContractError);
  }
}

TEST_CASE("skew-map iteration") {
  ModelInstance m = linear(0.1);
  Trajectory zero = iterate_skew(m, BasePoint::scalar(0.2), 0.0, 0.0, 50);
  CHECK(zero.affine);
  CHECK_FALSE(zero.truncated);
  for (const SkewState& s : zero.states) CHECK(s.x == 0.0);

  Trajectory grow = iterate_skew(m, BasePoint::scalar(0.2), 1e-8, 0.0, 50);
  CHECK(grow.truncated);
  const double lam = (78 + std::sqrt(6080.0)) / 2;
  const std::size_t n = grow.states.size();
  CHECK(std::fabs(grow.states[n - 1].x / grow.states[n - 2].x) == doctest::Approx(lam).epsilon(1e-3));

  ModelInstance dw = builtin_model("double-well", {{"epsilon", 0.1}});
  Trajectory fixed = iterate_skew(dw, BasePoint::scalar(0.0), 0.5, 0.5, 20);
  for (const SkewState& s : fixed.states) CHECK(s.x == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(iterate_skew(linear(0.0), BasePoint::scalar(0.0), 0.0, 0.0, 5), ContractError);
}

TEST_CASE("Lyapunov exponents") {
  GraphK zero;
  zero.grid = TorusGrid{64};
  zero.values.assign(64, 0.0);
  double prev = 0.0;
  for (double eps : {0.1, 0.05, 0.025}) {
    LyapunovResult r = lyapunov_exponents(linear(eps), zero, BasePoint::scalar(0.1), 10000);
    const double diag = (1 - 2 * eps / 8) / (eps / 8);
    const double lam = std::log((diag + std::sqrt(diag * diag - 4)) / 2);
    CHECK(r.lambda1 == doctest::Approx(lam).epsilon(1e-7));
    CHECK(std::fabs(r.lambda1 + r.lambda2) < 1e-3);
    CHECK(r.lambda1 > prev);
    prev = r.lambda1;
  }
  CHECK_THROWS_AS(lyapunov_exponents(linear(0.1), zero, BasePoint::scalar(0.1), 0), ContractError);
  Trajectory tr = iterate_skew(linear(0.1), BasePoint::scalar(0.0), 1e-8, 0.0, 100);
  LyapunovResult short_run = lyapunov_exponents(linear(0.1), tr);
  CHECK_FALSE(short_run.warnings.empty());
}

TEST_CASE("gradient flow") {
  json laplace = {{"name", "custom"},
                  {"epsilon", 1.0},
                  {"params", {{"V", {{"terms", {{{"c", 0.0}}}}}}}}};
  ModelInstance m = model_from_json(laplace);
  SUBCASE("zero boundary: x = 0") {
    FlowResult f = gradient_flow(m, BasePoint::scalar(0.0), 3, 0.0, 0.0, 5000, 0.5, std::vector<double>(7, 0.4));
    CHECK(f.converged);
    for (double x : f.segment.values) CHECK(std::fabs(x) < 1e-8);
  }
  SUBCASE("boundary 0 and 1: harmonic profile") {
    FlowResult f = gradient_flow(m, BasePoint::scalar(0.0), 3, 1.0, 0.0, 5000, 0.5, std::vector<double>(7, 0.0));
    CHECK(f.converged);
    for (long k = -3; k <= 3; ++k) CHECK(f.segment.at(k) == doctest::Approx((k + 4) / 8.0).epsilon(1e-8));
  }
  SUBCASE("standard map agrees with the window solver") {
    ModelInstance sm = smap(0.05, 0.5, 0.0);
    FlowResult f = gradient_flow(sm, BasePoint::scalar(0.1), 3, 0.0, 0.0, 2000, 0.05, std::vector<double>(7, 0.6));
    REQUIRE(f.converged);
    CHECK(f.segment.max_residual() <= 1e-8);
    SolutionSet set = solve_window_2d(sm, BasePoint::scalar(0.1), 3, 0.0, 0.0);
    double best = 1e9;
    for (const OrbitSegment& s : set.segments) best = std::min(best, sup_diff(s.values, f.segment.values));
    CHECK(best < 1e-6);
  }
}
