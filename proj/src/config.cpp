#include "triplh/config.hpp"

#include <set>

#include "triplh/error.hpp"

namespace triplh {

namespace {

template <class T>
T get_as(const nlohmann::json& doc, const std::string& key) {
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw UsageError("config key '" + key + "' has the wrong type");
  }
}

std::size_t get_count(const nlohmann::json& doc, const std::string& key) {
  const auto& v = doc.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw UsageError("config key '" + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

double get_real(const nlohmann::json& doc, const std::string& key) {
  if (!doc.at(key).is_number()) throw UsageError("config key '" + key + "' must be a number");
  return doc.at(key).get<double>();
}

}  // namespace

RunConfig parse_run_config(const nlohmann::json& doc, bool require_dataset) {
  if (!doc.is_object()) throw UsageError("config must be a JSON object");
  static const std::set<std::string> known = {
      "dataset",    "out",          "model",        "dim",          "beta",
      "lambda",     "init_scale",   "lr",           "weight_decay", "adam_beta1",
      "adam_beta2", "adam_epsilon", "max_epochs",   "batch_size",   "negatives_per_positive",
      "patience",   "seed"};
  for (const auto& [key, value] : doc.items()) {
    if (!known.contains(key)) throw UsageError("unknown config key '" + key + "'");
  }

  RunConfig cfg;
  if (doc.contains("dataset")) cfg.dataset = get_as<std::string>(doc, "dataset");
  if (require_dataset && cfg.dataset.empty()) throw UsageError("config is missing 'dataset'");
  if (doc.contains("out")) cfg.out_dir = get_as<std::string>(doc, "out");
  if (doc.contains("model")) cfg.model.kind = parse_model_kind(get_as<std::string>(doc, "model"));
  if (doc.contains("dim")) cfg.model.dim = get_count(doc, "dim");
  if (doc.contains("beta")) cfg.model.beta = get_real(doc, "beta");
  if (doc.contains("lambda")) cfg.model.lambda = get_real(doc, "lambda");
  if (doc.contains("init_scale")) cfg.model.init_scale = get_real(doc, "init_scale");
  if (doc.contains("lr")) cfg.optimizer.learning_rate = get_real(doc, "lr");
  if (doc.contains("weight_decay")) cfg.optimizer.weight_decay = get_real(doc, "weight_decay");
  if (doc.contains("adam_beta1")) cfg.optimizer.beta1 = get_real(doc, "adam_beta1");
  if (doc.contains("adam_beta2")) cfg.optimizer.beta2 = get_real(doc, "adam_beta2");
  if (doc.contains("adam_epsilon")) cfg.optimizer.epsilon = get_real(doc, "adam_epsilon");
  if (doc.contains("max_epochs")) cfg.schedule.max_epochs = get_count(doc, "max_epochs");
  if (doc.contains("batch_size")) cfg.schedule.batch_size = get_count(doc, "batch_size");
  if (doc.contains("negatives_per_positive")) {
    cfg.schedule.negatives_per_positive = get_count(doc, "negatives_per_positive");
  }
  if (doc.contains("patience")) cfg.schedule.patience = get_count(doc, "patience");
  if (doc.contains("seed")) cfg.schedule.seed = get_count(doc, "seed");

  cfg.model.validate();
  cfg.schedule.validate();
  cfg.optimizer.validate();
  return cfg;
}

RunConfig parse_run_config(const std::string& json_text, bool require_dataset) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_run_config(doc, require_dataset);
}

nlohmann::json to_json(const RunConfig& cfg) {
  nlohmann::json j = to_json(cfg.model);
  j.erase("kind");
  j["model"] = std::string(to_string(cfg.model.kind));
  j["dataset"] = cfg.dataset;
  j["out"] = cfg.out_dir;
  j["lr"] = cfg.optimizer.learning_rate;
  j["weight_decay"] = cfg.optimizer.weight_decay;
  j["adam_beta1"] = cfg.optimizer.beta1;
  j["adam_beta2"] = cfg.optimizer.beta2;
  j["adam_epsilon"] = cfg.optimizer.epsilon;
  j["max_epochs"] = cfg.schedule.max_epochs;
  j["batch_size"] = cfg.schedule.batch_size;
  j["negatives_per_positive"] = cfg.schedule.negatives_per_positive;
  j["patience"] = cfg.schedule.patience;
  j["seed"] = cfg.schedule.seed;
  return j;
}

nlohmann::json to_json(const ModelConfig& cfg) {
  return {{"kind", std::string(to_string(cfg.kind))},
          {"dim", cfg.dim},
          {"beta", cfg.beta},
          {"lambda", cfg.lambda},
          {"init_scale", cfg.init_scale}};
}

ModelConfig model_config_from_json(const nlohmann::json& doc) {
  ModelConfig cfg;
  try {
    cfg.kind = parse_model_kind(doc.at("kind").get<std::string>());
    cfg.dim = doc.at("dim").get<std::size_t>();
    cfg.beta = doc.at("beta").get<double>();
    cfg.lambda = doc.at("lambda").get<double>();
    cfg.init_scale = doc.at("init_scale").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad model config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

}  // namespace triplh
