#include <doctest.h>

#include <cmath>

#include "cantor/cantor.hpp"
#include "core/builtin.hpp"
#include "core/errors.hpp"

using namespace antilimit;
using nlohmann::json;

namespace {
ModelInstance one_d(const std::string& name, double eps) {
  return model_from_json({{"name", name}, {"epsilon", eps}, {"mode", "1d"}});
}
RefinementTree tree_1d(const ModelInstance& m, int depth) {
  auto fibers = scan_fibers_1d(m, BasePoint::scalar(0.0), 0, std::max(depth, 1), 512, 4);
  return refine_1d(m, fibers, std::nullopt, depth, 4);
}
}  // namespace

TEST_CASE("1D refinement of the double-well") {
  RefinementTree t = tree_1d(one_d("double-well", 0.1), 5);
  CHECK(t.component_count.back() == 32);
  CHECK(t.nesting_ok);
  CHECK(t.max_nesting_violation == 0.0);
  for (int n = 1; n <= 5; ++n) CHECK(t.max_diameter(n) <= 2 * std::pow(1 - t.delta_measured, n) * (1 + 1e-12));
}

TEST_CASE("1D refinement of the linear model: one branch, geometric shrinking") {
  RefinementTree t = tree_1d(one_d("linear", 0.1), 4);
  for (long c : t.component_count) CHECK(c == 1);
  for (int n = 1; n <= 4; ++n) CHECK(t.max_diameter(n) / t.max_diameter(n - 1) <= t.max_slope * (1 + 1e-6));
  CantorCertificate c = certify(t, t.delta_measured);
  CHECK_FALSE(c.split_ok);
  CHECK_FALSE(c.pass());
}

TEST_CASE("depth 0 is the interval itself") {
  RefinementTree t = tree_1d(one_d("double-well", 0.1), 0);
  REQUIRE(t.levels.size() == 1);
  CHECK(t.levels[0].size() == 1);
  CHECK(t.max_diameter(0) == 2.0);
}

TEST_CASE("certificate clauses") {
  RefinementTree t = tree_1d(one_d("double-well", 0.1), 6);
  CantorCertificate c = certify(t, t.delta_measured);
  CHECK(c.pass());
  CHECK(c.min_gap > 0.0);
  CHECK(c.box_dim_estimate > 0.0);
  CHECK(c.box_dim_estimate < 1.0);
  // Measured per-level contraction s gives dimension log 2 / log(1/s).
  const double s = t.max_diameter(6) / t.max_diameter(5);
  CHECK(c.box_dim_estimate == doctest::Approx(std::log(2.0) / std::log(1.0 / s)).epsilon(0.05));
  CantorCertificate flat = certify(t, 1.0);
  CHECK_FALSE(flat.diameter_ok);
}

TEST_CASE("2D refinement of the double-well") {
  ModelInstance m = builtin_model("double-well", {{"epsilon", 0.05}});
  const BasePoint t0 = BasePoint::scalar(0.0);
  auto fibers = scan_fibers_2d(m, t0, -3, 7, 9, 96, 4);
  RefinementTree t = refine_2d(m, t0, fibers, std::nullopt, 3, 4);
  CHECK(t.component_count.back() == 64);
  CHECK(t.nesting_ok);
  RefinementTree t0tree = refine_2d(m, t0, {fibers[3]}, std::nullopt, 0, 1);
  CHECK(t0tree.component_count.front() == 1);
}

TEST_CASE("2D refinement of the linear model stays a single region") {
  ModelInstance m = builtin_model("linear", {{"epsilon", 0.1}});
  const BasePoint t0 = BasePoint::scalar(0.0);
  auto fibers = scan_fibers_2d(m, t0, -2, 5, 9, 64, 4);
  RefinementTree t = refine_2d(m, t0, fibers, std::nullopt, 2, 4);
  for (long c : t.component_count) CHECK(c == 1);
  CHECK(t.max_diameter(2) < t.max_diameter(1));
}
