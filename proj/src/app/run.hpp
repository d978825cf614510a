#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "app/config.hpp"
#include "app/ops.hpp"

namespace antilimit {

std::string sha256_hex(const std::string& data);

struct RunRequest {
  std::string subcommand;   // may be empty when the config names it
  std::string config_text;  // JSON
  std::optional<std::string> out_dir;
  int workers = -1;  // < 0: take the config's value
};

// Executes one subcommand, writes its outputs plus manifest.json and returns
// the manifest. A re-run with an unchanged config and overwrite=false leaves
// the directory untouched and returns the existing manifest.
nlohmann::json run(const RunRequest& req);

// The sweep subcommand without file output.
OpResult run_sweep(const ModelInstance& base, const nlohmann::json& command, const OpContext& ctx);

}  // namespace antilimit
