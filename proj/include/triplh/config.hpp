#pragma once

#include <string>

#include <json.hpp>

#include "triplh/model.hpp"
#include "triplh/optimizer.hpp"
#include "triplh/trainer.hpp"

namespace triplh {

/// Everything a training run needs, read from one flat JSON object.
/// Recognised keys (all optional except where the caller demands "dataset"):
///   dataset, out, model, dim, beta, lambda, init_scale,
///   lr, weight_decay, adam_beta1, adam_beta2, adam_epsilon,
///   max_epochs, batch_size, negatives_per_positive, patience, seed
/// Any other key is rejected.
struct RunConfig {
  std::string dataset;
  std::string out_dir = "out";
  ModelConfig model;
  TrainSchedule schedule;
  AdamWConfig optimizer;
};

RunConfig parse_run_config(const nlohmann::json& doc, bool require_dataset);
RunConfig parse_run_config(const std::string& json_text, bool require_dataset);
nlohmann::json to_json(const RunConfig& cfg);

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& doc);

}  // namespace triplh
