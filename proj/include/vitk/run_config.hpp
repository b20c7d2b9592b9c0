#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "vitk/model.hpp"
#include "vitk/train_config.hpp"

namespace vitk {

/// Everything a training run needs, serialized as one flat JSON object.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  LossWeights weights;
  LossOptions loss;
  std::string dataset;
  std::string out_dir;
};

nlohmann::json to_json(const ModelConfig& c);
nlohmann::json to_json(const TrainConfig& c);
nlohmann::json to_json(const LossWeights& w);
nlohmann::json to_json(const LossOptions& o);
nlohmann::json to_json(const RunConfig& c);

// Readers accept a flat object and ignore keys that belong to the other
// sections; missing keys keep their defaults.
ModelConfig model_config_from_json(const nlohmann::json& j);
TrainConfig train_config_from_json(const nlohmann::json& j);
LossWeights loss_weights_from_json(const nlohmann::json& j);
LossOptions loss_options_from_json(const nlohmann::json& j);
/// Rejects keys that no section knows about.
RunConfig run_config_from_json(const nlohmann::json& j);

void save_run_config(const RunConfig& c, const std::filesystem::path& path);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace vitk
