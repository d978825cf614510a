#include "app/run.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "core/builtin.hpp"
#include "core/errors.hpp"
#include "core/parallel.hpp"
#include "core/text.hpp"

namespace antilimit {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorKind::Internal, "SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) throw Error(ErrorKind::Internal, "cannot write " + p.string());
}

std::string csv_cell(const json& v) {
  if (v.is_null()) return "";
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
  if (v.is_number()) return fmt17(v.get<double>());
  std::string s = v.is_string() ? v.get<std::string>() : v.dump();
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

struct Axis {
  std::string param;
  std::vector<double> values;
};

std::vector<Axis> parse_axes(const json& grid) {
  if (!grid.is_array() || grid.empty() || grid.size() > 2)
    throw ConfigError("'command.grid' must list one or two parameters", {{"key", "command.grid"}});
  std::vector<Axis> axes;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const std::string path = "command.grid[" + std::to_string(i) + "]";
    for (const auto& [key, value] : grid[i].items())
      if (key != "param" && key != "values")
        throw ConfigError("unknown key '" + path + "." + key + "'", {{"key", path + "." + key}});
    Params p(grid[i], path);
    Axis a;
    a.param = p.string("param", "");
    if (a.param.empty()) throw ConfigError("missing '" + path + ".param'", {{"key", path + ".param"}});
    const json& v = p.raw("values");
    if (v.is_array()) {
      a.values = p.numbers("values");
    } else {
      Params q(v, path + ".values");
      const double from = q.number("from"), to = q.number("to");
      const long count = q.integer("count");
      q.finish();
      if (count < 1) throw ConfigError("'" + path + ".values.count' must be positive", {{"key", path + ".values.count"}});
      for (long k = 0; k < count; ++k)
        a.values.push_back(count == 1 ? from : from + (to - from) * static_cast<double>(k) / static_cast<double>(count - 1));
    }
    if (a.values.empty()) throw ConfigError("'" + path + ".values' is empty", {{"key", path + ".values"}});
    axes.push_back(std::move(a));
  }
  if (axes.size() == 2 && axes[0].param == axes[1].param)
    throw ConfigError("sweep parameters must differ", {{"key", "command.grid"}});
  return axes;
}

}  // namespace

OpResult run_sweep(const ModelInstance& base, const json& command, const OpContext& ctx) {
  for (const auto& [key, value] : command.items())
    if (key != "inner" && key != "grid")
      throw ConfigError("unknown key 'command." + key + "'", {{"key", "command." + key}});
  if (!command.contains("inner") || !command["inner"].is_object())
    throw ConfigError("'command.inner' must be an object naming the inner subcommand", {{"key", "command.inner"}});
  if (!command.contains("grid")) throw ConfigError("missing 'command.grid'", {{"key", "command.grid"}});
  json inner = command["inner"];
  if (!inner.contains("name") || !inner["name"].is_string())
    throw ConfigError("'command.inner.name' must be a string", {{"key", "command.inner.name"}});
  const std::string op = inner["name"].get<std::string>();
  if (op == "sweep") throw ConfigError("sweeps do not nest", {{"key", "command.inner.name"}});
  inner.erase("name");
  check_op_params(op, inner, "command.inner");
  const std::vector<Axis> axes = parse_axes(command["grid"]);
  // Unknown parameter names are configuration errors, not per-point failures.
  for (const Axis& a : axes) (void)with_param(base, a.param, a.values.front());

  const std::size_t n0 = axes[0].values.size();
  const std::size_t n1 = axes.size() > 1 ? axes[1].values.size() : 1;
  struct Point {
    json row;
    std::vector<std::string> warnings;
  };
  std::vector<Point> points(n0 * n1);
  OpContext inner_ctx;
  inner_ctx.workers = points.size() == 1 ? ctx.workers : 1;
  parallel_for(points.size(), points.size() == 1 ? 1 : ctx.workers, [&](std::size_t idx) {
    std::size_t i0 = idx / n1, i1 = idx % n1;
    json params = json::object();
    params[axes[0].param] = axes[0].values[i0];
    if (axes.size() > 1) params[axes[1].param] = axes[1].values[i1];
    json row = {{"index", axes.size() > 1 ? json{i0, i1} : json{i0}}, {"params", params}};
    try {
      ModelInstance m = with_param(base, axes[0].param, axes[0].values[i0]);
      if (axes.size() > 1) m = with_param(m, axes[1].param, axes[1].values[i1]);
      OpResult r = run_op(op, m, inner, inner_ctx, "command.inner");
      row["status"] = "ok";
      row["metrics"] = r.metrics;
      points[idx].warnings = r.warnings;
    } catch (const Error& e) {
      row["status"] = "error";
      row["error"] = e.to_json();
    } catch (const std::exception& e) {
      row["status"] = "error";
      row["error"] = {{"kind", "internal"}, {"message", e.what()}};
    }
    points[idx].row = std::move(row);
  });

  std::set<std::string> metric_keys;
  for (const Point& p : points)
    if (p.row.contains("metrics"))
      for (const auto& [key, value] : p.row["metrics"].items()) metric_keys.insert(key);

  std::string csv;
  for (const Axis& a : axes) csv += a.param + ",";
  csv += "status,error_kind";
  for (const std::string& k : metric_keys) csv += "," + k;
  csv += "\n";
  OpResult out;
  json rows = json::array();
  std::size_t failures = 0;
  for (Point& p : points) {
    const json& row = p.row;
    for (const Axis& a : axes) csv += csv_cell(row["params"][a.param]) + ",";
    csv += row["status"].get<std::string>() + ",";
    if (row["status"] == "error") {
      ++failures;
      csv += csv_cell(row["error"]["kind"]);
    }
    for (const std::string& k : metric_keys)
      csv += "," + (row.contains("metrics") && row["metrics"].contains(k) ? csv_cell(row["metrics"][k]) : "");
    csv += "\n";
    rows.push_back(row);
    for (std::string& w : p.warnings) out.warnings.push_back(row["params"].dump() + ": " + w);
  }
  json axes_j = json::array();
  for (const Axis& a : axes) axes_j.push_back({{"param", a.param}, {"values", a.values}});
  out.name = "sweep.json";
  out.data = {{"inner", op}, {"grid", axes_j}, {"points", rows}};
  out.extra.push_back({"sweep.csv", csv, true});
  out.metrics = {{"points", points.size()}, {"failures", failures}};
  return out;
}

json run(const RunRequest& req) {
  const auto t_start = Clock::now();
  RunConfig cfg = parse_run_config(parse_json_text(req.config_text), req.subcommand);
  const int workers = resolve_workers(req.workers >= 0 ? req.workers : cfg.workers);
  const fs::path dir = req.out_dir ? fs::path(*req.out_dir) : fs::path(cfg.output.dir);
  const std::string config_hash = sha256_hex(cfg.hashed_json().dump());

  const fs::path manifest_path = dir / "manifest.json";
  if (fs::exists(manifest_path)) {
    json old;
    try {
      old = json::parse(read_file(manifest_path));
    } catch (const json::exception&) {
      old = json::object();
    }
    bool intact = old.value("config_sha256", "") == config_hash && old.contains("files");
    if (intact)
      for (const auto& f : old["files"]) {
        fs::path p = dir / f.value("name", "");
        if (!fs::exists(p) || sha256_hex(read_file(p)) != f.value("sha256", "")) intact = false;
      }
    if (!cfg.output.overwrite) {
      if (intact) return old;
      throw ConfigError("output directory " + dir.string() +
                            " already holds other results; set output.overwrite to replace them",
                        {{"key", "output.overwrite"}});
    }
  }

  json timings = json::object();
  auto t = Clock::now();
  ModelInstance model = model_from_json(cfg.model);
  timings["model"] = seconds_since(t);

  OpContext ctx;
  ctx.workers = workers;
  t = Clock::now();
  OpResult result = cfg.subcommand == "sweep" ? run_sweep(model, cfg.command, ctx)
                                              : run_op(cfg.subcommand, model, cfg.command, ctx);
  timings[cfg.subcommand] = seconds_since(t);

  t = Clock::now();
  std::vector<OutputFile> files;
  files.push_back({"config.json", cfg.to_json().dump(2) + "\n", false});
  if (cfg.output.json) files.push_back({result.name, result.data.dump(2) + "\n", false});
  for (OutputFile& f : result.extra)
    if (f.csv ? cfg.output.csv : cfg.output.json) files.push_back(std::move(f));
  fs::create_directories(dir);
  json listed = json::array();
  for (const OutputFile& f : files) {
    write_file(dir / f.name, f.content);
    listed.push_back({{"name", f.name}, {"sha256", sha256_hex(f.content)}, {"bytes", f.content.size()}});
  }
  timings["write"] = seconds_since(t);

  std::vector<std::string> warnings = model.warnings();
  warnings.insert(warnings.end(), result.warnings.begin(), result.warnings.end());
  json manifest = {{"version", ANTILIMIT_VERSION},
                   {"subcommand", cfg.subcommand},
                   {"config_sha256", config_hash},
                   {"workers", workers},
                   {"wall_time_s", seconds_since(t_start)},
                   {"timings", timings},
                   {"warnings", warnings},
                   {"metrics", result.metrics},
                   {"files", listed}};
  write_file(manifest_path, manifest.dump(2) + "\n");
  return manifest;
}

}  // namespace antilimit
