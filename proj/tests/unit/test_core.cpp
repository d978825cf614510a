#include <doctest.h>

#include <atomic>
#include <cmath>

#include "core/builtin.hpp"
#include "core/conditions.hpp"
#include "core/errors.hpp"
#include "core/parallel.hpp"
#include "core/roots.hpp"

using namespace antilimit;
using nlohmann::json;

namespace {
ModelInstance dw(double eps) { return builtin_model("double-well", {{"epsilon", eps}}); }
ModelInstance lin(double eps) { return builtin_model("linear", {{"epsilon", eps}}); }
const BasePoint kT = BasePoint::scalar(0.3);
}  // namespace

TEST_CASE("Laplacian double-well evaluations") {
  ModelInstance m = dw(0.1);
  CHECK(m.arity() == 3);
  CHECK(m.eval_f(kT, {0.5, 0.5, 0.5}) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(m.eval_f(kT, {1.0, 0.0, -1.0}) == doctest::Approx(-0.25));
  CHECK(lin(0.1).eval_f(kT, {0.0, 0.0, 0.0}) == 0.0);
  CHECK_THROWS_AS(m.eval_f(kT, {0.5, 0.5}), ContractError);
}

TEST_CASE("double-well constant sequences at +-1/2 are fixed for every eps") {
  for (double eps : {0.0, 0.01, 0.3, 2.0}) {
    ModelInstance m = dw(eps);
    CHECK(std::fabs(m.f(kT, 0.5, 0.5, 0.5)) < 1e-15);
    CHECK(std::fabs(m.f(kT, -0.5, -0.5, -0.5)) < 1e-15);
  }
}

TEST_CASE("vs-family potential matches the printed polynomial") {
  for (double s : {0.0, 1.0}) {
    ModelInstance m = builtin_model("vs-family", {{"epsilon", 0.01}, {"s", s}});
    const double pi = std::acos(-1.0);
    for (double th : {0.0, 0.137, 0.71}) {
      const double a = 1.1 - 1.2 * std::sin(2 * pi * (th + 0.2));
      const double b = 1.2 + 1.2 * std::cos(pi * th) * std::cos(pi * th);
      for (int i = 0; i < 10; ++i) {
        const double u = -1.0 + 0.2 * i + 0.013;
        const double x = 3.0 * u;
        const double expect = (x * x + a) * (x - b) + 2.15 - 0.15 * s;
        CHECK(m.V(BasePoint::scalar(th), u) == doctest::Approx(expect).epsilon(1e-12));
        CHECK(m.physical_potential().value(BasePoint::scalar(th), x) == doctest::Approx(expect).epsilon(1e-12));
      }
    }
    if (s == 0.0) {
      const double a0 = 1.1 - 1.2 * std::sin(0.4 * pi);
      // b(0) = 2.4 is a root of the cubic's linear factor.
      CHECK(m.physical_potential().value(BasePoint::scalar(0.0), 2.4) == doctest::Approx(2.15));
      CHECK(m.physical_potential().value(BasePoint::scalar(0.0), 0.0) == doctest::Approx(-a0 * 2.4 + 2.15));
    }
  }
}

TEST_CASE("analytic partials agree with finite differences") {
  ModelInstance m = builtin_model("standard-map", {{"epsilon", 0.05}, {"kappa", 0.5}, {"gamma", 0.02}});
  for (double x : {-0.9, -0.2, 0.4, 0.8}) {
    CHECK(m.dV(kT, x) == doctest::Approx(m.potential().fd_derivative(kT, x)).epsilon(1e-6));
    auto g = m.dZ(kT, x, 0.3 * x, -0.5);
    auto fd = m.coupling().fd_gradient(kT, x, 0.3 * x, -0.5);
    for (int i = 0; i < 3; ++i) CHECK(g[static_cast<std::size_t>(i)] == doctest::Approx(fd[static_cast<std::size_t>(i)]).epsilon(1e-6));
  }
}

TEST_CASE("config errors name the offending key") {
  auto key_of = [](const json& block) {
    try {
      model_from_json(block);
    } catch (const ConfigError& e) {
      return e.details().value("key", std::string());
    }
    return std::string("<none>");
  };
  CHECK(key_of({{"name", "double-well"}, {"epsilon", 0.1}, {"colour", 1}}) == "model.colour");
  CHECK(key_of({{"name", "standard-map"}, {"epsilon", 0.1}, {"params", {{"gamma", 0.1}}}}) == "model.params");
  CHECK(key_of({{"name", "double-well"}}) == "model.epsilon");
  CHECK(key_of({{"name", "nope"}, {"epsilon", 0.1}}) == "model.name");
  try {
    model_from_json({{"name", "standard-map"}, {"epsilon", 0.1}, {"params", json::object()}});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.details()["missing"].size() == 2);
  }
}

TEST_CASE("with_param rebuilds the model") {
  ModelInstance m = builtin_model("vs-family", {{"epsilon", 0.01}, {"s", 1.0}});
  ModelInstance m0 = with_param(m, "s", 0.0);
  CHECK(get_param(m0, "s") == 0.0);
  CHECK(m0.V(kT, 0.1) - m.V(kT, 0.1) == doctest::Approx(0.15));
  CHECK(with_param(m, "epsilon", 0.02).epsilon() == 0.02);
  CHECK_THROWS_AS(with_param(m, "kappa", 1.0), ConfigError);
}

TEST_CASE("epsilon0 estimates") {
  CHECK(estimate_epsilon0(lin(0.1), 0.1) == doctest::Approx(0.9).epsilon(0.01));
  CHECK(estimate_epsilon0(dw(0.1), 0.1) == doctest::Approx(0.56).epsilon(0.01));
  ModelInstance vs = builtin_model("vs-family", {{"epsilon", 0.01}, {"s", 1.0}});
  CHECK(vs.epsilon0() > 0.0);
  ModelInstance flat = model_from_json({{"name", "custom"}, {"epsilon", 0.1}, {"params", {{"V", {{"terms", {{{"c", 0.0}}}}}}}}});
  CHECK(flat.epsilon0() == 0.0);
  CHECK_FALSE(flat.warnings().empty());
  CHECK_THROWS_AS(estimate_epsilon0(flat, 0.01), DegeneratePotential);
}

TEST_CASE("verify_conditions on the reference models") {
  SUBCASE("linear") {
    ModelInstance m = lin(0.1).with_epsilon0(0.5);
    ConditionReport r = verify_conditions(m, 64);
    CHECK(r.all_pass());
    REQUIRE(r.band.front().intervals.size() == 1);
    CHECK(r.band.front().intervals[0].first == doctest::Approx(-0.5).epsilon(1e-9));
    CHECK(r.band.front().intervals[0].second == doctest::Approx(0.5).epsilon(1e-9));
  }
  SUBCASE("double-well band and Laplacian extrema") {
    ModelInstance m = dw(0.05).with_epsilon0(0.1);
    ConditionReport r = verify_conditions(m, 64);
    CHECK(r.all_pass());
    const auto& iv = r.band.front().intervals;
    REQUIRE(iv.size() == 2);
    CHECK(iv[1].first == doctest::Approx(std::sqrt(0.15)).epsilon(1e-9));
    CHECK(iv[1].second == doctest::Approx(std::sqrt(0.35)).epsilon(1e-9));
    CHECK(iv[0].second == doctest::Approx(-std::sqrt(0.15)).epsilon(1e-9));
    CHECK(r.max_abs_Z.value == doctest::Approx(0.5));
    CHECK(r.min_abs_dZa.value == doctest::Approx(0.125));
  }
  SUBCASE("grid below 64 is rejected") { CHECK_THROWS_AS(verify_conditions(dw(0.1), 32), ContractError); }
}

TEST_CASE("base dynamics") {
  BaseDynamics r = BaseDynamics::rotation({0.25});
  CHECK(r.at(3, BasePoint::scalar(0.5))[0] == doctest::Approx(0.25));
  CHECK(r.at(-1, BasePoint::scalar(0.0))[0] == doctest::Approx(0.75));
  BaseDynamics e = BaseDynamics::explicit_sequence({BasePoint::scalar(0.1), BasePoint::scalar(0.2)}, -1);
  CHECK(e.at(0, BasePoint{})[0] == 0.2);
  CHECK_THROWS_AS(e.at(1, BasePoint{}), ContractError);
  BaseDynamics g = BaseDynamics::rotation({(std::sqrt(5.0) - 1) / 2});
  auto cf = g.continued_fraction(6);
  CHECK(cf.size() >= 5);
  for (std::size_t i = 1; i < 5; ++i) CHECK(cf[i] == 1);
}

TEST_CASE("root bracketing and bisection") {
  auto roots = bracket_roots([](double x) { return x * x - 0.25; }, -1.0, 1.0, 512);
  REQUIRE(roots.size() == 2);
  CHECK(roots[0] == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(roots[1] == doctest::Approx(0.5).epsilon(1e-12));
  auto grid_zero = bracket_roots([](double x) { return x; }, -1.0, 1.0, 4);
  CHECK(grid_zero.size() == 1);
}

TEST_CASE("parallel_for covers every index and rethrows the first failure") {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 8, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
  try {
    parallel_for(100, 8, [](std::size_t i) {
      if (i == 17 || i == 63) throw ContractError("index " + std::to_string(i));
    });
    FAIL("expected an exception");
  } catch (const ContractError& e) {
    CHECK(std::string(e.what()) == "index 17");
  }
}
