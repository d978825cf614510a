#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/base.hpp"

namespace antilimit {

struct OutputSpec {
  std::string dir = "out";
  bool json = true;
  bool csv = true;
  bool overwrite = false;
};

// Parsed run configuration. to_json() is the canonical form: parsing it
// again yields the same structure.
struct RunConfig {
  nlohmann::json model;
  std::string subcommand;
  nlohmann::json command = nlohmann::json::object();  // parameters of the subcommand
  OutputSpec output;
  int workers = 0;  // 0 = auto

  nlohmann::json to_json() const;
  // Canonical JSON without the fields that cannot change results (workers, output dir).
  nlohmann::json hashed_json() const;
};

const std::vector<std::string>& subcommand_names();

// `subcommand` (when non-empty) must agree with command.name in the file.
RunConfig parse_run_config(const nlohmann::json& j, const std::string& subcommand = "");
nlohmann::json parse_json_text(const std::string& text);

// Typed access to a parameter object with key-path diagnostics; finish()
// rejects keys that were never read.
class Params {
 public:
  Params(const nlohmann::json& j, std::string path);

  bool has(const std::string& key) const;
  double number(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  long integer(const std::string& key, long fallback) const;
  long integer(const std::string& key) const;
  bool boolean(const std::string& key, bool fallback) const;
  std::string string(const std::string& key, const std::string& fallback) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<int> integers(const std::string& key) const;
  // A base point: number or array of numbers.
  BasePoint point(const std::string& key, const BasePoint& fallback) const;
  const nlohmann::json& raw(const std::string& key) const;
  std::string key_path(const std::string& key) const { return path_ + "." + key; }
  void finish() const;

 private:
  const nlohmann::json& get(const std::string& key) const;
  const nlohmann::json& j_;
  std::string path_;
  mutable std::set<std::string> used_;
};

}  // namespace antilimit
