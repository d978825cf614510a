#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "core/builtin.hpp"
#include "core/errors.hpp"
#include "orbits/orbits.hpp"

using namespace antilimit;
using nlohmann::json;

namespace {
ModelInstance one_d(const std::string& name, double eps) {
  return model_from_json({{"name", name}, {"epsilon", eps}, {"mode", "1d"}});
}
const BasePoint kT = BasePoint::scalar(0.0);
}  // namespace

TEST_CASE("backward solves") {
  SUBCASE("double-well, eps = 0.01, x_next = 0") {
    auto roots = solve_backward_1d(one_d("double-well", 0.01), kT, 0.0);
    REQUIRE(roots.size() == 2);
    CHECK(std::fabs(roots[0] + 0.5) < 0.02);
    CHECK(std::fabs(roots[1] - 0.5) < 0.02);
    auto upper = solve_backward_1d(one_d("double-well", 0.01), kT, 0.0, 1);
    REQUIRE(upper.size() == 1);
    CHECK(upper[0] == roots[1]);
  }
  SUBCASE("linear model has the unique root of the linear equation") {
    ModelInstance m = one_d("linear", 0.1);
    for (double xn : {-0.7, 0.0, 0.4}) {
      auto roots = solve_backward_1d(m, kT, xn);
      REQUIRE(roots.size() == 1);
      // 0.1 (xn - 2x)/8 + x = 0
      CHECK(roots[0] == doctest::Approx(-0.1 * xn / 8 / (1 - 0.2 / 8)).epsilon(1e-10));
    }
    auto zero = solve_backward_1d(one_d("linear", 0.0), kT, 0.3);
    REQUIRE(zero.size() == 1);
    CHECK(std::fabs(zero[0]) < 1e-12);
  }
  SUBCASE("eps = 0 returns the zeros of V") {
    auto roots = solve_backward_1d(one_d("double-well", 0.0), kT, 0.9);
    REQUIRE(roots.size() == 2);
    CHECK(roots[0] == doctest::Approx(-0.5));
    CHECK(roots[1] == doctest::Approx(0.5));
  }
}

TEST_CASE("forward solves") {
  CHECK(std::fabs(solve_forward_1d(one_d("linear", 0.1), kT, 0.0)) < 1e-12);
  // (x - 1)/8 eps = 0 puts x_{k+1} on the wall.
  CHECK_THROWS_AS(solve_forward_1d(one_d("double-well", 0.1), kT, 0.5), BoundaryEscape);
  // Perturbing f by +1e-3 moves the root down because d_x Z > 0.
  ModelInstance m = one_d("linear", 0.1);
  json plus = {{"name", "custom"}, {"epsilon", 0.1}, {"mode", "1d"},
               {"params", {{"V", {{"terms", {{{"c", 1.0}, {"p", {1}}}, {{"c", 1e-3}}}}}}}}};
  double base = solve_forward_1d(m, kT, 0.005);
  double shifted = solve_forward_1d(model_from_json(plus), kT, 0.005);
  CHECK(shifted < base);
}

TEST_CASE("window solutions") {
  SUBCASE("double-well, l = 2, eps = 0.01: 32 solutions near +-1/2") {
    ModelInstance m = builtin_model("double-well", {{"epsilon", 0.01}});
    SolutionSet set = solve_window_2d(m, kT, 2, 0.0, 0.0);
    CHECK(set.complete);
    REQUIRE(set.segments.size() == 32);
    std::vector<int> patterns;
    for (const OrbitSegment& s : set.segments) {
      int code = 0;
      for (double x : s.values) {
        CHECK(std::fabs(std::fabs(x) - 0.5) < 0.05);
        code = 2 * code + (x > 0);
      }
      patterns.push_back(code);
      auto r = window_residuals(m, kT, s.k_min, s.values, 0.0, 0.0);
      CHECK(*std::max_element(r.begin(), r.end()) <= 1e-9);
    }
    std::sort(patterns.begin(), patterns.end());
    CHECK(std::unique(patterns.begin(), patterns.end()) == patterns.end());
  }
  SUBCASE("linear model: the unique solution x = 0") {
    for (long l : {0L, 3L, 10L}) {
      SolutionSet set = solve_window_2d(builtin_model("linear", {{"epsilon", 0.1}}), kT, l, 0.0, 0.0);
      REQUIRE(set.segments.size() == 1);
      for (double x : set.segments[0].values) CHECK(std::fabs(x) < 1e-14);
      CHECK(set.segments[0].max_residual() < 1e-14);
    }
  }
  SUBCASE("eps = 0: every per-site zero choice") {
    SolutionSet set = solve_window_2d(builtin_model("double-well", {{"epsilon", 0.0}}), kT, 2, 0.9, -0.3);
    CHECK(set.segments.size() == 32);
  }
  SUBCASE("results do not depend on the worker count") {
    ModelInstance m = builtin_model("double-well", {{"epsilon", 0.05}});
    WindowOptions one, many;
    many.workers = 8;
    CHECK(solve_window_2d(m, kT, 3, 0.1, -0.2, one).to_json().dump() ==
          solve_window_2d(m, kT, 3, 0.1, -0.2, many).to_json().dump());
  }
}

TEST_CASE("segment extension") {
  ModelInstance m = one_d("double-well", 0.01);
  OrbitSegment seg = make_segment_1d(m, kT, 0, {0.5});
  for (int i = 0; i < 5; ++i) seg = extend_segment(m, seg, Direction::Backward, 1);
  CHECK(seg.size() == 6);
  CHECK(seg.k_min == -5);
  for (double x : seg.values) CHECK(std::fabs(x - 0.5) < 0.02);
  CHECK_THROWS_AS(extend_segment(m, seg, Direction::Backward, 7), ContractError);

  ModelInstance l = one_d("linear", 0.1);
  OrbitSegment z = make_segment_1d(l, kT, 0, {0.0, 0.0});
  z = extend_segment(l, z, Direction::Forward);
  z = extend_segment(l, z, Direction::Backward);
  for (double x : z.values) CHECK(std::fabs(x) < 1e-14);
  auto r = chain_residuals(l, kT, z.k_min, z.values);
  CHECK(*std::max_element(r.begin(), r.end()) <= 1e-9);
}
