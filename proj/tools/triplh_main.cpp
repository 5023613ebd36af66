// triplh command-line front end. Talks to the library only through triplh.h.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "triplh/triplh.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

// Carries an exit code out of a subcommand.
struct CliFailure {
  int code;
  std::string message;
};

int exit_code_for(triplh_status st) {
  switch (st) {
    case TRIPLH_OK: return kExitOk;
    case TRIPLH_ERR_USAGE:
    case TRIPLH_ERR_DATA: return kExitUsage;
    default: return kExitRuntime;
  }
}

void check(triplh_status st) {
  if (st != TRIPLH_OK) throw CliFailure{exit_code_for(st), triplh_last_error()};
}

[[noreturn]] void usage_error(const std::string& msg) { throw CliFailure{kExitUsage, msg}; }

struct DatasetDeleter {
  void operator()(triplh_dataset* p) const { triplh_dataset_free(p); }
};
struct ModelDeleter {
  void operator()(triplh_model* p) const { triplh_model_free(p); }
};
struct StringDeleter {
  void operator()(char* p) const { triplh_string_free(p); }
};
using DatasetPtr = std::unique_ptr<triplh_dataset, DatasetDeleter>;
using ModelPtr = std::unique_ptr<triplh_model, ModelDeleter>;
using OwnedString = std::unique_ptr<char, StringDeleter>;

std::string take(char* s) {
  OwnedString owned(s);
  return owned ? std::string(owned.get()) : std::string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) usage_error("cannot create output directory '" + dir + "': " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw CliFailure{kExitRuntime, "cannot write '" + path.string() + "'"};
}

DatasetPtr load_split(const std::string& path) {
  triplh_dataset* raw = nullptr;
  check(triplh_dataset_load(path.c_str(), &raw));
  return DatasetPtr(raw);
}

// Reads the config file and applies command-line overrides. The result is
// validated (and defaults filled in) by the library.
json load_config(const std::string& path, const CLI::Option* seed_opt, std::uint64_t seed,
                 const CLI::Option* out_opt, const std::string& out_dir) {
  std::ifstream in(path);
  if (!in) usage_error("cannot open config '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    usage_error("config '" + path + "' is not valid JSON: " + e.what());
  }
  if (!doc.is_object()) usage_error("config '" + path + "' must be a JSON object");
  if (seed_opt->count() > 0) doc["seed"] = seed;
  if (out_opt->count() > 0) doc["out"] = out_dir;
  char* normalized = nullptr;
  check(triplh_config_normalize(doc.dump().c_str(), 1, &normalized));
  return json::parse(take(normalized));
}

void print_stats(const triplh_dataset* ds, bool from_raw) {
  triplh_dataset_stats s{};
  check(triplh_dataset_stats_get(ds, &s));
  std::printf("users            %llu\n", static_cast<unsigned long long>(s.n_users));
  std::printf("items            %llu\n", static_cast<unsigned long long>(s.n_items));
  std::printf("actions          %llu\n", static_cast<unsigned long long>(s.n_actions));
  std::printf("avg length       %.2f\n", s.avg_length);
  std::printf("avg train length %.2f\n", s.avg_train_length);
  std::printf("train/val/test   %llu/%llu/%llu\n", static_cast<unsigned long long>(s.n_train),
              static_cast<unsigned long long>(s.n_validation),
              static_cast<unsigned long long>(s.n_test));
  if (from_raw) {
    std::printf("duplicates       %llu\n", static_cast<unsigned long long>(s.duplicates_removed));
  }
}

struct EpochSink {
  std::ofstream* log;
  bool verbose;
};

void on_epoch(const char* line, void* user) {
  auto* sink = static_cast<EpochSink*>(user);
  *sink->log << line << '\n';
  sink->log->flush();
  if (sink->verbose) std::fprintf(stderr, "%s\n", line);
}

// Trains with `cfg` and writes model.ckpt + train_log.jsonl into out_dir. On
// divergence the last good checkpoint is still written before failing.
ModelPtr train_into(const triplh_dataset* ds, const json& cfg, const fs::path& out_dir,
                    bool verbose) {
  ensure_dir(out_dir.string());
  std::ofstream log(out_dir / "train_log.jsonl", std::ios::trunc);
  if (!log) usage_error("cannot write '" + (out_dir / "train_log.jsonl").string() + "'");
  EpochSink sink{&log, verbose};
  triplh_model* raw = nullptr;
  const triplh_status st = triplh_train(ds, cfg.dump().c_str(), on_epoch, &sink, &raw);
  const std::string err = st == TRIPLH_OK ? "" : triplh_last_error();
  ModelPtr model(raw);
  const std::string ckpt = (out_dir / "model.ckpt").string();
  if (model) check(triplh_model_save(model.get(), ckpt.c_str()));
  if (st != TRIPLH_OK) {
    std::string msg = err;
    if (model) msg += " (last good checkpoint kept at " + ckpt + ")";
    throw CliFailure{exit_code_for(st), msg};
  }
  return model;
}

json evaluate(const triplh_model* model, const triplh_dataset* ds, bool coverage) {
  json options = json::object();
  options["coverage"] = coverage;
  char* report = nullptr;
  check(triplh_evaluate(model, ds, options.dump().c_str(), &report));
  return json::parse(take(report));
}

std::vector<std::size_t> parse_dims(const std::string& text) {
  std::vector<std::size_t> dims;
  std::set<std::size_t> seen;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    unsigned long long d = 0;
    try {
      d = std::stoull(item, &pos);
    } catch (const std::exception&) {
      usage_error("--dims: '" + item + "' is not a positive integer");
    }
    if (pos != item.size() || d == 0) usage_error("--dims: '" + item + "' is not a positive integer");
    if (!seen.insert(d).second) usage_error("--dims: duplicate dimension " + item);
    dims.push_back(d);
  }
  if (dims.empty()) usage_error("--dims: no dimensions given");
  return dims;
}

std::vector<std::string> parse_models(const std::string& text) {
  std::vector<std::string> models;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) usage_error("--models: empty model name");
    models.push_back(item);
  }
  if (models.empty()) usage_error("--models: no models given");
  return models;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hyperbolic triplet-loss recommender: data preparation, training and evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(triplh_version()));

  // prepare
  auto* prepare = app.add_subcommand("prepare", "Build a leave-last-out split from raw interactions");
  std::string raw_path, format = "movielens", prepare_out = "out";
  prepare->add_option("raw", raw_path, "Raw interaction file")->required();
  prepare->add_option("--format", format, "Input format")
      ->check(CLI::IsMember({"movielens", "csv"}));
  prepare->add_option("--out", prepare_out, "Output directory (split.bin is written here)");

  // train
  auto* train = app.add_subcommand("train", "Train one model from a JSON config");
  std::string train_config, train_out;
  std::uint64_t train_seed = 0;
  bool verbose = false;
  train->add_option("--config", train_config, "Flat JSON run config")->required();
  auto* train_out_opt = train->add_option("--out", train_out, "Output directory (overrides config)");
  auto* train_seed_opt = train->add_option("--seed", train_seed, "Seed (overrides config)");
  train->add_flag("-v,--verbose", verbose, "Echo epoch records to stderr");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Full-catalog test evaluation of a checkpoint");
  std::string ckpt_path, split_path, eval_out;
  bool want_coverage = false, want_histogram = false;
  std::size_t hist_bins = 50;
  std::uint64_t eval_seed = 1;
  eval->add_option("--checkpoint", ckpt_path, "Model checkpoint")->required();
  eval->add_option("--split", split_path, "Split file from prepare")->required();
  eval->add_option("--out", eval_out, "Directory for report.json and optional CSVs");
  eval->add_flag("--coverage", want_coverage,
                 "Add Coverage@10 and popularity shares; writes popularity.csv with --out");
  eval->add_flag("--histogram", want_histogram,
                 "Write histogram.csv (positive vs sampled negative scores); needs --out");
  eval->add_option("--bins", hist_bins, "Histogram bins")->check(CLI::PositiveNumber);
  eval->add_option("--seed", eval_seed, "Seed for histogram negatives");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Train and evaluate one model per dimension and kind");
  std::string sweep_config, sweep_dims, sweep_models = "TriplH,TriplE", sweep_out;
  std::uint64_t sweep_seed = 0;
  sweep->add_option("--config", sweep_config, "Base run config")->required();
  sweep->add_option("--dims", sweep_dims, "Comma-separated dimensions, e.g. 8,16,32")->required();
  sweep->add_option("--models", sweep_models, "Comma-separated model kinds");
  auto* sweep_out_opt = sweep->add_option("--out", sweep_out, "Output directory (overrides config)");
  auto* sweep_seed_opt = sweep->add_option("--seed", sweep_seed, "Seed (overrides config)");

  // bench
  auto* bench = app.add_subcommand("bench", "Lorentz vs Poincare per-pair scoring latency");
  std::size_t bench_dim = 64, bench_pairs = 1000000, bench_reps = 5;
  std::uint64_t bench_seed = 1;
  std::string bench_out;
  bench->add_option("--dim", bench_dim, "Embedding dimension");
  bench->add_option("--pairs", bench_pairs, "Scored pairs per repetition");
  bench->add_option("--reps", bench_reps, "Timed repetitions per geometry");
  bench->add_option("--seed", bench_seed, "Input seed");
  bench->add_option("--out", bench_out, "Also write bench.json here");

  // synth
  auto* synth = app.add_subcommand("synth", "Write a planted-cluster interaction CSV");
  std::string synth_out = "out";
  std::size_t s_users = 50, s_items = 40, s_clusters = 2, s_per_user = 12;
  double s_noise = 0.0;
  std::uint64_t s_seed = 7;
  synth->add_option("--out", synth_out, "Output directory (planted.csv is written here)");
  synth->add_option("--users", s_users, "Users");
  synth->add_option("--items", s_items, "Items");
  synth->add_option("--clusters", s_clusters, "Clusters");
  synth->add_option("--per-user", s_per_user, "Interactions per user");
  synth->add_option("--noise", s_noise, "Fraction of picks drawn from the whole catalog");
  synth->add_option("--seed", s_seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*prepare) {
      if (!fs::exists(raw_path)) usage_error("input file '" + raw_path + "' does not exist");
      triplh_dataset* raw = nullptr;
      check(triplh_dataset_from_raw(raw_path.c_str(), format.c_str(), &raw));
      DatasetPtr ds(raw);
      ensure_dir(prepare_out);
      const std::string out = (fs::path(prepare_out) / "split.bin").string();
      check(triplh_dataset_save(ds.get(), out.c_str()));
      print_stats(ds.get(), true);
      std::printf("split            %s\n", out.c_str());
    } else if (*train) {
      const json cfg = load_config(train_config, train_seed_opt, train_seed, train_out_opt, train_out);
      const auto ds = load_split(cfg.at("dataset").get<std::string>());
      const fs::path out_dir = cfg.at("out").get<std::string>();
      ensure_dir(out_dir.string());
      write_text(out_dir / "config.json", cfg.dump(2) + "\n");
      const auto model = train_into(ds.get(), cfg, out_dir, verbose);
      const json report = evaluate(model.get(), ds.get(), false);
      std::printf("%s\n", report.dump(2).c_str());
      std::printf("checkpoint %s\n", (out_dir / "model.ckpt").string().c_str());
    } else if (*eval) {
      if (want_histogram && eval_out.empty()) {
        usage_error("--histogram needs --out");
      }
      triplh_model* raw_model = nullptr;
      check(triplh_model_load(ckpt_path.c_str(), &raw_model));
      ModelPtr model(raw_model);
      const auto ds = load_split(split_path);
      const json report = evaluate(model.get(), ds.get(), want_coverage);
      std::printf("%s\n", report.dump(2).c_str());
      if (!eval_out.empty()) {
        ensure_dir(eval_out);
        write_text(fs::path(eval_out) / "report.json", report.dump(2) + "\n");
        if (want_coverage) {
          char* csv = nullptr;
          check(triplh_popularity_csv(ds.get(), 0.2, 0.2, &csv));
          write_text(fs::path(eval_out) / "popularity.csv", take(csv));
        }
        if (want_histogram) {
          char* csv = nullptr;
          double sep = 0.0;
          check(triplh_score_histogram(model.get(), ds.get(), hist_bins, eval_seed, &csv, &sep));
          write_text(fs::path(eval_out) / "histogram.csv", take(csv));
          std::fprintf(stderr, "separation %.6f\n", sep);
        }
      }
    } else if (*sweep) {
      const auto dims = parse_dims(sweep_dims);
      const auto models = parse_models(sweep_models);
      json base = load_config(sweep_config, sweep_seed_opt, sweep_seed, sweep_out_opt, sweep_out);
      // Validate every combination before spending time on training.
      std::vector<json> runs;
      for (std::size_t d : dims) {
        for (const auto& m : models) {
          json cfg = base;
          cfg["dim"] = d;
          cfg["model"] = m;
          char* normalized = nullptr;
          check(triplh_config_normalize(cfg.dump().c_str(), 1, &normalized));
          runs.push_back(json::parse(take(normalized)));
        }
      }
      const auto ds = load_split(base.at("dataset").get<std::string>());
      const fs::path out_dir = base.at("out").get<std::string>();
      ensure_dir(out_dir.string());
      std::ofstream csv(out_dir / "sweep.csv", std::ios::trunc);
      if (!csv) usage_error("cannot write '" + (out_dir / "sweep.csv").string() + "'");
      csv << "dim,model,hr10,ndcg10\n";
      std::printf("dim,model,hr10,ndcg10\n");
      for (const auto& cfg : runs) {
        const std::string name = cfg.at("model").get<std::string>();
        const auto dim = cfg.at("dim").get<std::size_t>();
        const fs::path run_dir = out_dir / (name + "_d" + std::to_string(dim));
        const auto model = train_into(ds.get(), cfg, run_dir, false);
        const json report = evaluate(model.get(), ds.get(), false);
        char row[256];
        std::snprintf(row, sizeof row, "%zu,%s,%.6f,%.6f", dim, name.c_str(),
                      report.at("hr10").get<double>(), report.at("ndcg10").get<double>());
        csv << row << '\n';
        csv.flush();
        std::printf("%s\n", row);
        std::fflush(stdout);
      }
    } else if (*bench) {
      char* result = nullptr;
      check(triplh_bench(bench_dim, bench_pairs, bench_reps, bench_seed, &result));
      const std::string text = take(result);
      std::printf("%s\n", text.c_str());
      if (!bench_out.empty()) {
        ensure_dir(bench_out);
        write_text(fs::path(bench_out) / "bench.json", text + "\n");
      }
    } else if (*synth) {
      const json params = {{"n_users", s_users},       {"n_items", s_items},
                           {"n_clusters", s_clusters}, {"interactions_per_user", s_per_user},
                           {"noise", s_noise},         {"seed", s_seed}};
      ensure_dir(synth_out);
      const std::string out = (fs::path(synth_out) / "planted.csv").string();
      check(triplh_planted_write_csv(params.dump().c_str(), out.c_str()));
      std::printf("%s\n", out.c_str());
    }
  } catch (const CliFailure& f) {
    std::fprintf(stderr, "error: %s\n", f.message.c_str());
    return f.code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitOk;
}
