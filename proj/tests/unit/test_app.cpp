#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "antilimit.h"
#include "app/config.hpp"
#include "app/ops.hpp"
#include "app/run.hpp"
#include "core/builtin.hpp"
#include "core/errors.hpp"

using namespace antilimit;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {
fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("antilimit_unit_" + name);
  fs::remove_all(p);
  return p;
}
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}
json window_config() {
  return {{"model", {{"name", "double-well"}, {"epsilon", 0.1}}},
          {"command", {{"name", "solve-window"}, {"l", 2}, {"a", 0.5}, {"b", -0.5}}}};
}
}  // namespace

TEST_CASE("config round trip and key paths") {
  RunConfig c = parse_run_config(window_config(), "solve-window");
  CHECK(c.subcommand == "solve-window");
  RunConfig again = parse_run_config(c.to_json(), "solve-window");
  CHECK(again.to_json() == c.to_json());
  CHECK(again.hashed_json() == c.hashed_json());

  json wrong = window_config();
  wrong["model"]["epsilon"] = "big";
  try {
    RunConfig bad = parse_run_config(wrong, "solve-window");
    (void)model_from_json(bad.model);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.details().value("key", "") == "model.epsilon");
  }
  CHECK_THROWS_AS(parse_run_config(window_config(), "verify"), ConfigError);
  CHECK_THROWS_AS(parse_json_text("{\"model\": "), ConfigError);
  json extra = window_config();
  extra["command"]["ll"] = 3;
  try {
    run_op("solve-window", model_from_json(extra["model"]), {{"ll", 3}}, OpContext{});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.details().value("key", "") == "command.ll");
  }
}

TEST_CASE("C API") {
  al_model* m = nullptr;
  REQUIRE(al_model_create(R"({"name":"double-well","epsilon":0.1})", &m) == AL_OK);
  double theta = 0.0, args[3] = {0.5, 0.5, 0.5}, out = 1.0;
  CHECK(al_model_eval_f(m, &theta, 1, args, 3, &out) == AL_OK);
  CHECK(out == doctest::Approx(0.0).scale(1.0));
  char* res = nullptr;
  REQUIRE(al_call(m, "solve-window", R"({"l":2,"a":0.5,"b":-0.5})", 2, &res) == AL_OK);
  json body = json::parse(res);
  al_free_string(res);
  CHECK(body["metrics"]["count"] == 32);

  CHECK(al_call(m, "no-such-op", "{}", 1, &res) == AL_ERR_CONFIG);
  json err = json::parse(al_last_error_json());
  CHECK(err["status"] == AL_ERR_CONFIG);
  CHECK(al_exit_code(AL_ERR_CONFIG) == 2);
  CHECK(al_exit_code(AL_ERR_HYPOTHESIS) == 3);
  CHECK(al_exit_code(AL_ERR_INTERNAL) == 1);
  al_model_destroy(m);

  CHECK(al_model_create(R"({"name":"nope"})", &m) == AL_ERR_CONFIG);
  CHECK(m == nullptr);
  CHECK(std::string(al_last_error()).size() > 0);
}

TEST_CASE("sweep rows and errors") {
  ModelInstance m = builtin_model("double-well", {{"epsilon", 0.1}});
  json cmd = {{"inner", {{"name", "solve-window"}, {"l", 1}, {"a", 0.5}, {"b", -0.5}}},
              {"grid", {{{"param", "epsilon"}, {"values", {0.05, 0.1, -1.0}}}}}};
  OpResult r = run_sweep(m, cmd, OpContext{4});
  REQUIRE(r.data["points"].size() == 3);
  CHECK(r.data["points"][0]["status"] == "ok");
  CHECK(r.metrics["failures"] == 1);
  CHECK(r.extra.at(0).content.rfind("epsilon,status,error_kind", 0) == 0);

  json bad = cmd;
  bad["grid"][0]["param"] = "zeta";
  CHECK_THROWS_AS(run_sweep(m, bad, OpContext{}), ConfigError);

  json one = cmd;
  one["grid"][0]["values"] = {0.1};
  OpResult single = run_sweep(m, one, OpContext{2});
  OpResult direct = run_op("solve-window", m, {{"l", 1}, {"a", 0.5}, {"b", -0.5}}, OpContext{2});
  CHECK(single.data["points"][0]["metrics"] == direct.metrics);
}

TEST_CASE("runs are deterministic and idempotent") {
  std::vector<std::string> manifests;
  for (int w : {1, 4, 8}) {
    fs::path dir = scratch("det" + std::to_string(w));
    RunRequest req{"solve-window", window_config().dump(), dir.string(), w};
    json man = run(req);
    CHECK(fs::exists(dir / "solutions.json"));
    json files = man["files"];
    manifests.push_back(files.dump());
    fs::remove_all(dir);
  }
  CHECK(manifests[0] == manifests[1]);
  CHECK(manifests[0] == manifests[2]);

  fs::path dir = scratch("noop");
  RunRequest req{"solve-window", window_config().dump(), dir.string(), 1};
  json first = run(req);
  const std::string before = slurp(dir / "manifest.json");
  json second = run(req);
  CHECK(second == first);
  CHECK(slurp(dir / "manifest.json") == before);

  json changed = window_config();
  changed["model"]["epsilon"] = 0.05;
  CHECK_THROWS_AS(run(RunRequest{"solve-window", changed.dump(), dir.string(), 1}), ConfigError);
  changed["output"] = {{"overwrite", true}};
  CHECK_NOTHROW(run(RunRequest{"solve-window", changed.dump(), dir.string(), 1}));
  fs::remove_all(dir);
}
