#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "app/config.hpp"
#include "core/model.hpp"

namespace antilimit {

struct OutputFile {
  std::string name;
  std::string content;
  bool csv = false;
};

struct OpResult {
  std::string name;             // file name of the primary JSON document
  nlohmann::json data;          // primary document
  std::vector<OutputFile> extra;
  nlohmann::json metrics = nlohmann::json::object();  // flat scalars for sweep rows
  std::vector<std::string> warnings;
};

struct OpContext {
  int workers = 1;
};

using OpFn = std::function<OpResult(const ModelInstance&, const Params&, const OpContext&)>;

// Every subcommand except sweep; nullptr for unknown names.
const OpFn* find_op(const std::string& name);

// Rejects unknown operations and parameters without running anything.
void check_op_params(const std::string& name, const nlohmann::json& params, const std::string& path);

// Runs one operation and checks that no unknown parameter was supplied.
OpResult run_op(const std::string& name, const ModelInstance& m, const nlohmann::json& params,
                const OpContext& ctx, const std::string& path = "command");

}  // namespace antilimit
