#include <doctest.h>

#include <cmath>

#include "core/builtin.hpp"
#include "core/errors.hpp"
#include "rotation/rotation.hpp"

using namespace antilimit;
using nlohmann::json;

namespace {
// Periodic potential -cos(2 pi x)/(2 pi) scaled by kappa, Laplacian coupling.
ModelInstance periodic(double eps, double kappa = 1.0) {
  return model_from_json({{"name", "standard-map"},
                          {"epsilon", eps},
                          {"rescale", {1.0, 0.0}},
                          {"params", {{"gamma", 0.0}, {"kappa", kappa}, {"phase", 0.25}}}});
}
}  // namespace

TEST_CASE("staircases") {
  Staircase a = staircase(0.5, 0, 4);
  CHECK(a.m == std::vector<long>{0, 0, 1, 1, 2});
  Staircase z = staircase(0.0, -3, 3);
  for (long v : z.m) CHECK(v == 0);
  Staircase n = staircase(-0.5, 0, 3);
  CHECK(n.m == std::vector<long>{0, -1, -1, -2});
  // Rational input given as a double reproduces the integer floors.
  Staircase third = staircase(1.0 / 3.0, -300, 300);
  Staircase exact = staircase_rational(1, 3, -300, 300);
  CHECK(third.m == exact.m);
  Staircase s = staircase_from_string("2/7", -50, 50);
  for (long k = -50; k <= 50; ++k) {
    long q = 2 * k / 7;
    if (2 * k % 7 != 0 && k < 0) --q;
    CHECK(s.at(k) == q);
  }
}

TEST_CASE("shifted coupling") {
  ModelInstance m = periodic(0.05);
  ShiftReport rep;
  Staircase s = staircase(0.5, -3, 3);
  ModelInstance sh = shifted_coupling(m, s, &rep);
  REQUIRE(sh.shift());
  // G_1 = (m_2 - 2 m_1 + m_0)/8 with m = 0, 0, 1.
  CHECK(rep.G[static_cast<std::size_t>(1 - (-2))] == doctest::Approx(0.125));
  CHECK(rep.max_abs_G <= 2.0);
  CHECK(rep.periodicity_defect < 1e-9);

  ShiftReport integral;
  shifted_coupling(m, staircase(2.0, -3, 3), &integral);
  for (double g : integral.G) CHECK(std::fabs(g) < 1e-15);

  // The double-well potential is not periodic.
  CHECK_THROWS_AS(shifted_coupling(builtin_model("double-well", {{"epsilon", 0.05}}), s), HypothesisError);
}

TEST_CASE("rotation numbers") {
  std::vector<double> exact, noisy, flat(50, 0.3);
  const double w = 0.3819660112501051;
  for (int k = 0; k < 200; ++k) {
    exact.push_back(k * w);
    noisy.push_back(k * w + 2.0 * std::sin(1.7 * k));
  }
  RotationNumber r = measure_rotation_number(exact);
  CHECK(r.forward == doctest::Approx(w));
  RotationNumber rn = measure_rotation_number(noisy);
  for (std::size_t i = 0; i < rn.profile.size(); ++i)
    CHECK(std::fabs(rn.profile[i] - w) <= 4.0 / static_cast<double>(i + 1) + 1e-12);
  CHECK(measure_rotation_number(flat).forward == 0.0);
  RotationNumber back = measure_rotation_number(exact, 100);
  CHECK(back.forward == doctest::Approx(w));
  CHECK(back.backward == doctest::Approx(w));
}

TEST_CASE("rotation orbits") {
  ModelInstance m = periodic(0.05);
  SUBCASE("omega = 0: bounded orbit, y = x") {
    RotationOrbit o = construct_rotation_orbit(m, staircase(0.0, -21, 21), 20, 0.0, 0.0);
    CHECK(o.bound_ok);
    for (std::size_t i = 0; i < o.y.size(); ++i) CHECK(o.y[i] == o.base.values[i]);
    CHECK(o.original_residual <= 1e-9);
  }
  SUBCASE("golden mean") {
    const double g = (std::sqrt(5.0) - 1) / 2;
    RotationOrbit o = construct_rotation_orbit(m, staircase(g, -41, 41), 40, 0.0, 0.0);
    CHECK(o.bound_ok);
    CHECK(o.max_deviation <= 2.0);
    CHECK(o.original_residual <= 1e-9);
  }
  SUBCASE("omega = 1: rho tends to 1") {
    RotationOrbit o = construct_rotation_orbit(m, staircase(1.0, -31, 31), 30, 0.0, 0.0);
    CHECK(o.rho.forward == doctest::Approx(1.0).epsilon(0.05));
    for (std::size_t i = 0; i < o.y.size(); ++i)
      CHECK(o.y[i] == doctest::Approx(o.base.values[i] + static_cast<double>(static_cast<long>(i) - 30)));
  }
  SUBCASE("staircase must cover the window") {
    CHECK_THROWS_AS(construct_rotation_orbit(m, staircase(0.5, -5, 5), 10, 0.0, 0.0), ContractError);
  }
}
