#include "app/config.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"

namespace antilimit {

namespace {

const char* type_name(const nlohmann::json& j) { return j.type_name(); }

[[noreturn]] void bad_type(const std::string& path, const char* want, const nlohmann::json& got) {
  throw ConfigError("'" + path + "' must be " + want + ", got " + type_name(got),
                    {{"key", path}, {"expected", want}});
}

}  // namespace

const std::vector<std::string>& subcommand_names() {
  static const std::vector<std::string> names = {
      "verify", "scan-fiber", "solve-window", "refine",    "certify",       "rotation-orbit",
      "solve-k", "continue",  "iterate",      "lyapunov", "gradient-flow", "sweep"};
  return names;
}

nlohmann::json parse_json_text(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what(),
                      {{"key", "<root>"}, {"byte", e.byte}});
  }
}

RunConfig parse_run_config(const nlohmann::json& j, const std::string& subcommand) {
  if (!j.is_object()) bad_type("<root>", "an object", j);
  for (const auto& [key, value] : j.items())
    if (key != "model" && key != "command" && key != "output" && key != "workers")
      throw ConfigError("unknown key '" + key + "'", {{"key", key}});

  RunConfig c;
  if (!j.contains("model")) throw ConfigError("missing 'model' block", {{"key", "model"}});
  if (!j["model"].is_object()) bad_type("model", "an object", j["model"]);
  c.model = j["model"];

  nlohmann::json cmd = j.value("command", nlohmann::json::object());
  if (!cmd.is_object()) bad_type("command", "an object", cmd);
  std::string name;
  if (cmd.contains("name")) {
    if (!cmd["name"].is_string()) bad_type("command.name", "a string", cmd["name"]);
    name = cmd["name"].get<std::string>();
  }
  if (!subcommand.empty()) {
    if (!name.empty() && name != subcommand)
      throw ConfigError("command.name '" + name + "' does not match subcommand '" + subcommand + "'",
                        {{"key", "command.name"}});
    name = subcommand;
  }
  if (name.empty()) throw ConfigError("no subcommand given", {{"key", "command.name"}});
  const auto& names = subcommand_names();
  if (std::find(names.begin(), names.end(), name) == names.end())
    throw ConfigError("unknown subcommand '" + name + "'", {{"key", "command.name"}});
  c.subcommand = name;
  cmd.erase("name");
  c.command = cmd;

  if (j.contains("output")) {
    const nlohmann::json& o = j["output"];
    if (!o.is_object()) bad_type("output", "an object", o);
    for (const auto& [key, value] : o.items()) {
      const std::string path = "output." + key;
      if (key == "dir") {
        if (!value.is_string()) bad_type(path, "a string", value);
        c.output.dir = value.get<std::string>();
      } else if (key == "overwrite") {
        if (!value.is_boolean()) bad_type(path, "a boolean", value);
        c.output.overwrite = value.get<bool>();
      } else if (key == "formats") {
        if (!value.is_array()) bad_type(path, "an array", value);
        c.output.json = c.output.csv = false;
        for (const auto& f : value) {
          if (f == "json") c.output.json = true;
          else if (f == "csv") c.output.csv = true;
          else throw ConfigError("unknown format in '" + path + "'", {{"key", path}});
        }
      } else {
        throw ConfigError("unknown key '" + path + "'", {{"key", path}});
      }
    }
  }
  if (j.contains("workers")) {
    const auto& w = j["workers"];
    if (!w.is_number_integer() || w.get<long>() < 0) bad_type("workers", "a nonnegative integer", w);
    c.workers = w.get<int>();
  }
  return c;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json cmd = command;
  cmd["name"] = subcommand;
  nlohmann::json formats = nlohmann::json::array();
  if (output.json) formats.push_back("json");
  if (output.csv) formats.push_back("csv");
  return {{"model", model},
          {"command", cmd},
          {"output", {{"dir", output.dir}, {"formats", formats}, {"overwrite", output.overwrite}}},
          {"workers", workers}};
}

nlohmann::json RunConfig::hashed_json() const {
  nlohmann::json j = to_json();
  j.erase("workers");
  j["output"].erase("dir");
  j["output"].erase("overwrite");
  return j;
}

Params::Params(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
  if (!j_.is_object() && !j_.is_null()) bad_type(path_, "an object", j_);
}

bool Params::has(const std::string& key) const {
  used_.insert(key);
  return j_.is_object() && j_.contains(key);
}

const nlohmann::json& Params::get(const std::string& key) const {
  used_.insert(key);
  if (!has(key)) throw ConfigError("missing required key '" + key_path(key) + "'", {{"key", key_path(key)}});
  return j_.at(key);
}

const nlohmann::json& Params::raw(const std::string& key) const { return get(key); }

double Params::number(const std::string& key) const {
  const auto& v = get(key);
  if (!v.is_number()) bad_type(key_path(key), "a number", v);
  return v.get<double>();
}

double Params::number(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

long Params::integer(const std::string& key) const {
  const auto& v = get(key);
  if (v.is_number_integer()) return v.get<long>();
  if (v.is_number_float()) {
    double d = v.get<double>();
    if (std::floor(d) == d && std::fabs(d) < 9e15) return static_cast<long>(d);
  }
  bad_type(key_path(key), "an integer", v);
}

long Params::integer(const std::string& key, long fallback) const { return has(key) ? integer(key) : fallback; }

bool Params::boolean(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const auto& v = get(key);
  if (!v.is_boolean()) bad_type(key_path(key), "a boolean", v);
  return v.get<bool>();
}

std::string Params::string(const std::string& key, const std::string& fallback) const {
  if (!has(key)) return fallback;
  const auto& v = get(key);
  if (!v.is_string()) bad_type(key_path(key), "a string", v);
  return v.get<std::string>();
}

std::vector<double> Params::numbers(const std::string& key) const {
  const auto& v = get(key);
  if (!v.is_array()) bad_type(key_path(key), "an array of numbers", v);
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) bad_type(key_path(key), "an array of numbers", v);
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<int> Params::integers(const std::string& key) const {
  const auto& v = get(key);
  if (!v.is_array()) bad_type(key_path(key), "an array of integers", v);
  std::vector<int> out;
  for (const auto& e : v) {
    if (!e.is_number_integer()) bad_type(key_path(key), "an array of integers", v);
    out.push_back(e.get<int>());
  }
  return out;
}

BasePoint Params::point(const std::string& key, const BasePoint& fallback) const {
  if (!has(key)) return fallback;
  const auto& v = get(key);
  if (v.is_number()) return BasePoint::scalar(v.get<double>());
  std::vector<double> xs = numbers(key);
  if (xs.empty() || xs.size() > static_cast<std::size_t>(kMaxBaseDim))
    throw ConfigError("'" + key_path(key) + "' needs 1 to 4 coordinates", {{"key", key_path(key)}});
  return BasePoint::from(xs);
}

void Params::finish() const {
  if (!j_.is_object()) return;
  for (const auto& [key, value] : j_.items())
    if (!used_.count(key))
      throw ConfigError("unknown key '" + key_path(key) + "'", {{"key", key_path(key)}});
}

}  // namespace antilimit
