#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "triplh/dataset.hpp"
#include "triplh/error.hpp"
#include "triplh/model.hpp"
#include "triplh/optimizer.hpp"
#include "triplh/rng.hpp"

namespace triplh {

struct TrainSchedule {
  std::size_t max_epochs = 100;
  std::size_t batch_size = 1024;
  std::size_t negatives_per_positive = 1;
  /// Epochs without a validation NDCG@10 improvement before stopping; 0
  /// disables early stopping.
  std::size_t patience = 10;
  std::uint64_t seed = 42;

  void validate() const;
  bool operator==(const TrainSchedule&) const = default;
};

/// `count` items drawn uniformly from the items outside the user's train set.
/// Each draw rejection-samples up to 100 times, then picks uniformly from the
/// explicit complement. Throws UsageError if the complement is empty.
std::vector<std::uint32_t> sample_negatives(const InteractionDataset& dataset, std::size_t user,
                                            std::size_t count, Rng& rng);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_ndcg10 = 0.0;  // NaN when the dataset has no validation users
  double val_hr10 = 0.0;
  double wall_seconds = 0.0;
};

/// {"epoch":..,"train_loss":..,"val_ndcg10":..,"val_hr10":..,"wall_seconds":..}
std::string to_json_line(const EpochRecord& rec);

struct TrainResult {
  EmbeddingTable table;  // best validation NDCG@10 checkpoint
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;  // 0 = the initial table
};

/// Thrown when the loss or a gradient goes non-finite. Carries the best
/// checkpoint seen before the failure.
class TrainingDiverged : public TrainingError {
 public:
  TrainingDiverged(const std::string& what, TrainResult last_good)
      : TrainingError(what), last_good_(std::move(last_good)) {}
  const TrainResult& last_good() const noexcept { return last_good_; }

 private:
  TrainResult last_good_;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Shuffled passes over every train interaction, one TripletBatch per
/// `batch_size` positives (each paired with `negatives_per_positive` sampled
/// negatives), a sparse AdamW step per batch, and validation NDCG@10 after
/// every epoch. Single-threaded and bitwise reproducible for a fixed seed.
TrainResult train(const InteractionDataset& dataset, const ModelConfig& cfg,
                  const TrainSchedule& schedule, const AdamWConfig& optimizer,
                  const EpochCallback& on_epoch = {});

}  // namespace triplh
