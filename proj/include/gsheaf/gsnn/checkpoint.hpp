#pragma once

#include <memory>
#include <string>

#include "gsheaf/gsnn/model.hpp"

namespace gsheaf {

std::string config_to_json(const ModelConfig& cfg);
ModelConfig config_from_json(const std::string& text);

/// {"config": ..., "params": [{"name", "shape", "sheaf", "values"}]}.
void save_checkpoint(const Model& model, const std::string& path);
/// Rebuilds the model for `ds` and restores the stored parameter values.
std::unique_ptr<Model> load_checkpoint(const std::string& path, const Dataset& ds);

}  // namespace gsheaf
