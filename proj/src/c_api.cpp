#include "triplh/triplh.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <string>

#include <json.hpp>

#include "triplh/config.hpp"
#include "triplh/dataset.hpp"
#include "triplh/error.hpp"
#include "triplh/eval.hpp"
#include "triplh/trainer.hpp"

struct triplh_dataset {
  triplh::InteractionDataset data;
  triplh::BuildReport report;
};

struct triplh_model {
  triplh::EmbeddingTable table;
  triplh::ModelConfig config;
};

namespace {

thread_local std::string g_last_error;

template <class F>
triplh_status guard(F&& body) {
  try {
    g_last_error.clear();
    return body();
  } catch (const triplh::UsageError& e) {
    g_last_error = e.what();
    return TRIPLH_ERR_USAGE;
  } catch (const triplh::DataError& e) {
    g_last_error = e.what();
    return TRIPLH_ERR_DATA;
  } catch (const triplh::TrainingError& e) {
    g_last_error = e.what();
    return TRIPLH_ERR_TRAINING;
  } catch (const nlohmann::json::exception& e) {
    g_last_error = std::string("invalid JSON argument: ") + e.what();
    return TRIPLH_ERR_USAGE;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return TRIPLH_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return TRIPLH_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return TRIPLH_ERR_INTERNAL;
  }
}

void require(const void* p, const char* name) {
  if (p == nullptr) throw triplh::UsageError(std::string(name) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

nlohmann::json parse_optional(const char* text) {
  if (text == nullptr || *text == '\0') return nlohmann::json::object();
  auto doc = nlohmann::json::parse(text);
  if (!doc.is_object()) throw triplh::UsageError("expected a JSON object");
  return doc;
}

triplh::PlantedConfig planted_from_json(const char* params_json) {
  const auto doc = parse_optional(params_json);
  triplh::PlantedConfig cfg;
  for (const auto& [key, value] : doc.items()) {
    if (key == "n_users") cfg.n_users = value.get<std::size_t>();
    else if (key == "n_items") cfg.n_items = value.get<std::size_t>();
    else if (key == "n_clusters") cfg.n_clusters = value.get<std::size_t>();
    else if (key == "interactions_per_user") cfg.interactions_per_user = value.get<std::size_t>();
    else if (key == "noise") cfg.noise = value.get<double>();
    else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
    else throw triplh::UsageError("unknown planted parameter '" + key + "'");
  }
  return cfg;
}

}  // namespace

extern "C" {

const char* triplh_last_error(void) { return g_last_error.c_str(); }

const char* triplh_version(void) { return "1.0.0"; }

void triplh_string_free(char* s) { std::free(s); }

triplh_status triplh_dataset_from_raw(const char* path, const char* format, triplh_dataset** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    const std::string fmt = format == nullptr ? "movielens" : format;
    std::vector<triplh::RawInteraction> raw;
    if (fmt == "movielens") {
      raw = triplh::load_movielens(path);
    } else if (fmt == "csv") {
      raw = triplh::load_amazon_csv(path);
    } else {
      throw triplh::UsageError("unknown format '" + fmt + "'; expected movielens or csv");
    }
    triplh::BuildReport report;
    auto data = triplh::build_dataset(raw, std::nullopt, &report);
    *out = new triplh_dataset{std::move(data), report};
    return TRIPLH_OK;
  });
}

triplh_status triplh_dataset_planted(const char* params_json, triplh_dataset** out) {
  return guard([&] {
    require(out, "out");
    *out = nullptr;
    const auto raw = triplh::make_planted_interactions(planted_from_json(params_json));
    triplh::BuildReport report;
    auto data = triplh::build_dataset(raw, std::nullopt, &report);
    *out = new triplh_dataset{std::move(data), report};
    return TRIPLH_OK;
  });
}

triplh_status triplh_planted_write_csv(const char* params_json, const char* path) {
  return guard([&] {
    require(path, "path");
    const auto raw = triplh::make_planted_interactions(planted_from_json(params_json));
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw triplh::DataError(std::string("cannot open '") + path + "' for writing");
    out << "user,item,rating,timestamp\n";
    for (const auto& r : raw) {
      out << r.user_token << ',' << r.item_token << ',' << r.rating.value_or(1.0) << ','
          << r.timestamp << '\n';
    }
    if (!out) throw triplh::DataError(std::string("error writing '") + path + "'");
    return TRIPLH_OK;
  });
}

triplh_status triplh_dataset_save(const triplh_dataset* ds, const char* path) {
  return guard([&] {
    require(ds, "dataset");
    require(path, "path");
    triplh::save_split(ds->data, path);
    return TRIPLH_OK;
  });
}

triplh_status triplh_dataset_load(const char* path, triplh_dataset** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    *out = new triplh_dataset{triplh::load_split(path), {}};
    return TRIPLH_OK;
  });
}

triplh_status triplh_dataset_stats_get(const triplh_dataset* ds, triplh_dataset_stats* out) {
  return guard([&] {
    require(ds, "dataset");
    require(out, "out");
    const auto s = ds->data.stats();
    *out = triplh_dataset_stats{s.n_users,          s.n_items,
                                s.n_actions,        s.n_train,
                                s.n_validation,     s.n_test,
                                s.avg_length,       s.avg_train_length,
                                ds->report.duplicates_removed, ds->report.dropped_users};
    return TRIPLH_OK;
  });
}

void triplh_dataset_free(triplh_dataset* ds) { delete ds; }

triplh_status triplh_config_normalize(const char* config_json, int require_dataset,
                                      char** normalized_json) {
  return guard([&] {
    require(config_json, "config_json");
    require(normalized_json, "normalized_json");
    const auto cfg = triplh::parse_run_config(std::string(config_json), require_dataset != 0);
    *normalized_json = dup_string(triplh::to_json(cfg).dump(2));
    return TRIPLH_OK;
  });
}

triplh_status triplh_train(const triplh_dataset* ds, const char* config_json,
                           triplh_epoch_fn on_epoch, void* user_data, triplh_model** out) {
  return guard([&] {
    require(ds, "dataset");
    require(config_json, "config_json");
    require(out, "out");
    *out = nullptr;
    const auto cfg = triplh::parse_run_config(std::string(config_json), false);
    triplh::EpochCallback cb;
    if (on_epoch != nullptr) {
      cb = [&](const triplh::EpochRecord& rec) { on_epoch(triplh::to_json_line(rec).c_str(), user_data); };
    }
    try {
      auto result = triplh::train(ds->data, cfg.model, cfg.schedule, cfg.optimizer, cb);
      *out = new triplh_model{std::move(result.table), cfg.model};
    } catch (const triplh::TrainingDiverged& e) {
      *out = new triplh_model{e.last_good().table, cfg.model};
      throw;
    }
    return TRIPLH_OK;
  });
}

triplh_status triplh_model_init(const triplh_dataset* ds, const char* config_json,
                                triplh_model** out) {
  return guard([&] {
    require(ds, "dataset");
    require(config_json, "config_json");
    require(out, "out");
    *out = nullptr;
    const auto cfg = triplh::parse_run_config(std::string(config_json), false);
    *out = new triplh_model{
        triplh::init_table(cfg.model, ds->data.n_users(), ds->data.n_items(), cfg.schedule.seed),
        cfg.model};
    return TRIPLH_OK;
  });
}

triplh_status triplh_model_save(const triplh_model* m, const char* path) {
  return guard([&] {
    require(m, "model");
    require(path, "path");
    triplh::save_checkpoint(path, m->table, m->config);
    return TRIPLH_OK;
  });
}

triplh_status triplh_model_load(const char* path, triplh_model** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    auto ck = triplh::load_checkpoint(path);
    *out = new triplh_model{std::move(ck.table), ck.config};
    return TRIPLH_OK;
  });
}

triplh_status triplh_model_shape(const triplh_model* m, uint64_t* n_users, uint64_t* n_items,
                                 uint64_t* dim) {
  return guard([&] {
    require(m, "model");
    if (n_users) *n_users = m->table.n_users();
    if (n_items) *n_items = m->table.n_items();
    if (dim) *dim = m->table.dim();
    return TRIPLH_OK;
  });
}

triplh_status triplh_model_score(const triplh_model* m, uint64_t user, uint64_t item, double* out) {
  return guard([&] {
    require(m, "model");
    require(out, "out");
    *out = triplh::score(m->table, m->config, user, item);
    return TRIPLH_OK;
  });
}

void triplh_model_free(triplh_model* m) { delete m; }

triplh_status triplh_evaluate(const triplh_model* m, const triplh_dataset* ds,
                              const char* options_json, char** report_json) {
  return guard([&] {
    require(m, "model");
    require(ds, "dataset");
    require(report_json, "report_json");
    const auto& data = ds->data;
    if (m->table.n_users() != data.n_users() || m->table.n_items() != data.n_items()) {
      throw triplh::UsageError(
          "checkpoint has " + std::to_string(m->table.n_users()) + " users and " +
          std::to_string(m->table.n_items()) + " items but the split has " +
          std::to_string(data.n_users()) + " and " + std::to_string(data.n_items()));
    }
    triplh::EvalOptions options;
    const auto doc = parse_optional(options_json);
    for (const auto& [key, value] : doc.items()) {
      if (key == "coverage") options.coverage = value.get<bool>();
      else if (key == "head_mass") options.head_mass = value.get<double>();
      else if (key == "tail_mass") options.tail_mass = value.get<double>();
      else throw triplh::UsageError("unknown evaluation option '" + key + "'");
    }
    const auto report = triplh::evaluate(m->table, m->config, data, options);
    *report_json = dup_string(report.to_json().dump(2));
    return TRIPLH_OK;
  });
}

triplh_status triplh_score_histogram(const triplh_model* m, const triplh_dataset* ds,
                                     uint64_t bins, uint64_t seed, char** csv,
                                     double* separation) {
  return guard([&] {
    require(m, "model");
    require(ds, "dataset");
    require(csv, "csv");
    if (m->table.n_users() != ds->data.n_users() || m->table.n_items() != ds->data.n_items()) {
      throw triplh::UsageError("checkpoint and split have different user/item counts");
    }
    const auto h = triplh::score_histogram(m->table, m->config, ds->data, bins, seed);
    *csv = dup_string(h.to_csv());
    if (separation) *separation = h.separation;
    return TRIPLH_OK;
  });
}

triplh_status triplh_popularity_csv(const triplh_dataset* ds, double head_mass, double tail_mass,
                                    char** csv) {
  return guard([&] {
    require(ds, "dataset");
    require(csv, "csv");
    const auto pop = ds->data.item_popularity();
    const auto bins = triplh::popularity_bins(pop, head_mass, tail_mass);
    static constexpr const char* names[] = {"head", "medium", "tail"};
    std::string out = "item,token,train_count,bin\n";
    for (std::size_t i = 0; i < pop.size(); ++i) {
      out += std::to_string(i) + ',' + ds->data.item_tokens()[i] + ',' + std::to_string(pop[i]) +
             ',' + names[static_cast<int>(bins[i])] + '\n';
    }
    *csv = dup_string(out);
    return TRIPLH_OK;
  });
}

triplh_status triplh_bench(uint64_t dim, uint64_t n_pairs, uint64_t repetitions, uint64_t seed,
                           char** result_json) {
  return guard([&] {
    require(result_json, "result_json");
    const auto r = triplh::latency_bench(dim, n_pairs, repetitions, seed);
    *result_json = dup_string(r.to_json().dump(2));
    return TRIPLH_OK;
  });
}

}  // extern "C"
