#include <doctest.h>

#include <cmath>

#include "core/builtin.hpp"
#include "core/errors.hpp"
#include "levelset/levelset.hpp"

using namespace antilimit;
using nlohmann::json;

namespace {
ModelInstance one_d(const std::string& name, double eps) {
  return model_from_json({{"name", name}, {"epsilon", eps}, {"mode", "1d"}});
}
const BasePoint kT = BasePoint::scalar(0.0);
}  // namespace

TEST_CASE("linear 1D fiber: one almost-horizontal graph with the implicit slope bound") {
  ModelInstance m = one_d("linear", 0.1);
  FiberReport r = scan_fiber_1d(m, kT, 512);
  REQUIRE(r.components.size() == 1);
  const PlanarComponent& c = r.components[0];
  CHECK(c.almost_horizontal);
  CHECK(r.count_almost_horizontal == 1);
  const double bound = (0.1 / 8) / (1 - 0.1 * 2 / 8);
  CHECK(c.max_abs_slope_implicit <= bound * (1 + 1e-9));
  CHECK(c.max_abs_slope <= bound * (1 + 1e-6));
  CHECK(c.max_residual <= 1e-10);
  for (const Point2& p : c.polyline) CHECK(std::fabs(m.f(kT, p[0], p[1], 0.0)) <= 1e-10);
}

TEST_CASE("double-well 1D fiber at eps = 0.01: two components near +-1/2") {
  ModelInstance m = one_d("double-well", 0.01);
  FiberReport r = scan_fiber_1d(m, kT, 512);
  auto ah = r.almost_horizontal();
  REQUIRE(ah.size() == 2);
  CHECK(std::fabs(ah[0]->y_lo + 0.5) < 0.02);
  CHECK(std::fabs(ah[1]->y_hi - 0.5) < 0.02);
  CHECK(ah[0]->endpoints.first == Wall::Left);
  CHECK(ah[0]->endpoints.second == Wall::Right);
  // Brute-force root count along a column agrees.
  int sign_changes = 0;
  double prev = m.f(kT, 0.3, -1.0, 0.0);
  for (int i = 1; i <= 1000; ++i) {
    double y = -1.0 + 2.0 * i / 1000;
    double v = m.f(kT, 0.3, y, 0.0);
    if ((v > 0) != (prev > 0)) ++sign_changes;
    prev = v;
  }
  CHECK(sign_changes == 2);
}

TEST_CASE("eps = 0 gives horizontal lines at the zeros of V") {
  FiberReport r = scan_fiber_1d(one_d("double-well", 0.0), kT, 256);
  REQUIRE(r.components.size() == 2);
  CHECK(r.components[0].y_lo == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(r.components[1].y_hi == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.components[1].max_abs_slope == 0.0);
}

TEST_CASE("a 2D model needs a frozen argument for a 1D scan") {
  ModelInstance m = builtin_model("double-well", {{"epsilon", 0.1}});
  CHECK_THROWS_AS(scan_fiber_1d(m, kT, 128), ContractError);
  FiberReport r = scan_fiber_1d(m, kT, 128, 0.0);
  CHECK(r.count_almost_horizontal == 2);
}

TEST_CASE("double-well 2D fiber at eps = 0.01: two almost-horizontal sheets") {
  ModelInstance m = builtin_model("double-well", {{"epsilon", 0.01}});
  FiberReport r = scan_fiber_2d(m, kT, 17, 128, 4);
  CHECK(r.count_almost_horizontal == 2);
  REQUIRE(r.sheets.size() == 2);
  for (const SheetComponent& s : r.sheets) {
    CHECK(s.almost_horizontal);
    CHECK(s.max_leaf_slope < 0.002);
    CHECK(std::fabs(std::fabs(0.5 * (s.y_lo + s.y_hi)) - 0.5) < 0.02);
  }
}

TEST_CASE("linear 2D leaves flatten as eps shrinks") {
  auto slope = [](double eps) {
    FiberReport r = scan_fiber_2d(builtin_model("linear", {{"epsilon", eps}}), kT, 9, 96, 4);
    REQUIRE(r.sheets.size() == 1);
    return r.sheets[0].max_leaf_slope;
  };
  const double s1 = slope(0.1), s2 = slope(0.01);
  CHECK(s1 / s2 == doctest::Approx(10.0).epsilon(0.05));
}

TEST_CASE("2D scans need eps != 0") {
  CHECK_THROWS_AS(scan_fiber_2d(builtin_model("double-well", {{"epsilon", 0.0}}), kT, 9, 64),
                  ContractError);
}

TEST_CASE("projection width bound") {
  SUBCASE("double-well 1D at eps = 0.1") {
    ModelInstance m = one_d("double-well", 0.1);
    BoundCheck b = check_projection_bound(scan_fiber_1d(m, kT, 512), m);
    REQUIRE(b.entries.size() == 2);
    CHECK(b.all_pass);
    for (const auto& e : b.entries) {
      CHECK(e.K1 == doctest::Approx(0.125));
      CHECK(e.width >= e.bound);
    }
  }
  SUBCASE("linear 1D: bound about 2 (1/8) eps") {
    ModelInstance m = one_d("linear", 0.1);
    BoundCheck b = check_projection_bound(scan_fiber_1d(m, kT, 512), m);
    REQUIRE(b.entries.size() == 1);
    CHECK(b.all_pass);
    CHECK(b.entries[0].bound == doctest::Approx(2 * 0.125 * 0.1).epsilon(0.05));
  }
  SUBCASE("zero width fails") {
    ModelInstance m = one_d("double-well", 0.0);
    BoundCheck b = check_projection_bound(scan_fiber_1d(m, kT, 128), m);
    CHECK_FALSE(b.all_pass);
  }
}

TEST_CASE("scans are identical across worker counts") {
  ModelInstance m = builtin_model("double-well", {{"epsilon", 0.05}});
  const std::string a = scan_fiber_2d(m, kT, 9, 96, 1).to_json().dump();
  const std::string b = scan_fiber_2d(m, kT, 9, 96, 8).to_json().dump();
  CHECK(a == b);
}
