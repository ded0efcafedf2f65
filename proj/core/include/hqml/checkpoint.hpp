#pragma once

// JSON model checkpoints: a config echo plus flat parameter arrays keyed by
// parameter name.
//
//   {
//     "schema_version": 1,
//     "model": "<kind>",
//     "topology": {...},
//     "config": {...},
//     "parameters": { "<name>": {"shape": [..], "data": [..]}, ... }
//   }

#include <string>

#include <nlohmann/json.hpp>

#include "hqml/model.hpp"

namespace hqml {

inline constexpr int kCheckpointSchemaVersion = 1;

nlohmann::json checkpoint_json(const Model& model, const nlohmann::json& config);
void save_checkpoint(const std::string& path, const Model& model, const nlohmann::json& config);

/// Copies stored parameters into `model`. Config error when the model kind,
/// a parameter name or a shape disagrees; Io / Parse errors for unreadable files.
void load_checkpoint(const nlohmann::json& checkpoint, Model& model);
void load_checkpoint(const std::string& path, Model& model);

}  // namespace hqml
