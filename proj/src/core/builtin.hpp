#pragma once

#include <string>

#include <json.hpp>

#include "core/model.hpp"

namespace antilimit {

// Builds a model from a config block:
//   {"name": ..., "params": {...}, "epsilon": e, "epsilon0": e0 (optional),
//    "base": {...} (optional), "rescale": [alpha, beta] (optional),
//    "mode": "1d" | "2d" (optional)}
// Names: linear, double-well, standard-map, vs-family, custom.
ModelInstance model_from_json(const nlohmann::json& block);

// Convenience wrapper: name + params (epsilon may sit inside params).
ModelInstance builtin_model(const std::string& name, const nlohmann::json& params);

// Rebuilds m with one scalar parameter replaced ("epsilon" or any params key).
ModelInstance with_param(const ModelInstance& m, const std::string& key, double value);

// Reads a scalar parameter back from the model's spec.
double get_param(const ModelInstance& m, const std::string& key);

}  // namespace antilimit
