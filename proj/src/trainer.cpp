#include "triplh/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "triplh/eval.hpp"

namespace triplh {

void TrainSchedule::validate() const {
  if (batch_size < 1) throw UsageError("batch_size must be at least 1");
  if (negatives_per_positive < 1) throw UsageError("negatives_per_positive must be at least 1");
}

std::vector<std::uint32_t> sample_negatives(const InteractionDataset& dataset, std::size_t user,
                                            std::size_t count, Rng& rng) {
  if (user >= dataset.n_users()) throw UsageError("sample_negatives: user out of range");
  const auto seen = dataset.train_items(user);
  const std::size_t n_items = dataset.n_items();
  if (seen.size() >= n_items) {
    throw UsageError("user " + std::to_string(user) +
                     " interacted with the entire catalog; no negative exists");
  }
  std::vector<std::uint32_t> out;
  out.reserve(count);
  std::vector<std::uint32_t> complement;
  for (std::size_t k = 0; k < count; ++k) {
    bool found = false;
    for (int attempt = 0; attempt < 100; ++attempt) {
      const auto item = static_cast<std::uint32_t>(uniform_index(rng, n_items));
      if (!std::ranges::binary_search(seen, item)) {
        out.push_back(item);
        found = true;
        break;
      }
    }
    if (found) continue;
    if (complement.empty()) {
      for (std::uint32_t i = 0; i < n_items; ++i) {
        if (!std::ranges::binary_search(seen, i)) complement.push_back(i);
      }
    }
    out.push_back(complement[uniform_index(rng, complement.size())]);
  }
  return out;
}

std::string to_json_line(const EpochRecord& rec) {
  auto num = [](double v) -> nlohmann::json {
    if (std::isnan(v)) return nullptr;
    return v;
  };
  const nlohmann::json j = {{"epoch", rec.epoch},
                            {"train_loss", num(rec.train_loss)},
                            {"val_ndcg10", num(rec.val_ndcg10)},
                            {"val_hr10", num(rec.val_hr10)},
                            {"wall_seconds", rec.wall_seconds}};
  return j.dump();
}

namespace {

bool rows_finite(const EmbeddingTable& table, const GradientBuffer& grads) {
  auto finite = [](double v) { return std::isfinite(v); };
  for (std::uint32_t u : grads.touched_users()) {
    if (!std::ranges::all_of(table.user(u), finite)) return false;
  }
  for (std::uint32_t i : grads.touched_items()) {
    if (!std::ranges::all_of(table.item(i), finite)) return false;
  }
  return std::isfinite(table.margin_a) && std::isfinite(table.margin_b);
}

}  // namespace

TrainResult train(const InteractionDataset& dataset, const ModelConfig& cfg,
                  const TrainSchedule& schedule, const AdamWConfig& optimizer,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  schedule.validate();
  optimizer.validate();

  EmbeddingTable table = init_table(cfg, dataset.n_users(), dataset.n_items(), schedule.seed);
  TrainResult best{table, {}, 0};
  if (schedule.max_epochs == 0) return best;

  const auto train_idx = dataset.train_indices();
  if (train_idx.empty()) throw UsageError("train: dataset has no train interactions");

  // Separate stream from the initializer so changing one never perturbs the other.
  Rng rng(schedule.seed ^ 0x9e3779b97f4a7c15ULL);
  AdamW adam(optimizer, dataset.n_users(), dataset.n_items(), cfg.dim);
  GradientBuffer grads(dataset.n_users(), dataset.n_items(), cfg.dim);
  std::vector<std::size_t> order(train_idx.begin(), train_idx.end());
  TripletBatch batch;
  double best_ndcg = -std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  const auto interactions = dataset.interactions();

  auto diverge = [&](const std::string& why) {
    throw TrainingDiverged(why, best);
  };

  for (std::size_t epoch = 1; epoch <= schedule.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t k = order.size(); k > 1; --k) {
      std::swap(order[k - 1], order[uniform_index(rng, k)]);
    }

    double loss_sum = 0.0;
    std::size_t triplets = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += schedule.batch_size) {
      const std::size_t end = std::min(order.size(), begin + schedule.batch_size);
      batch.clear();
      for (std::size_t k = begin; k < end; ++k) {
        const Interaction& it = interactions[order[k]];
        for (std::uint32_t neg : sample_negatives(dataset, it.user, schedule.negatives_per_positive, rng)) {
          batch.push(it.user, it.item, neg);
        }
      }
      const double loss = model_loss(table, cfg, batch, &grads);
      if (!std::isfinite(loss)) {
        diverge("non-finite training loss at epoch " + std::to_string(epoch));
      }
      try {
        adam.step(table, grads);
      } catch (const TrainingError& e) {
        diverge(e.what());
      }
      if (!rows_finite(table, grads)) {
        diverge("parameters became non-finite at epoch " + std::to_string(epoch));
      }
      grads.clear();
      loss_sum += loss * static_cast<double>(batch.size());
      triplets += batch.size();
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(triplets);
    const auto val = rank_all(table, cfg, dataset, Target::Validation, 10);
    if (val.empty()) {
      rec.val_ndcg10 = std::numeric_limits<double>::quiet_NaN();
      rec.val_hr10 = std::numeric_limits<double>::quiet_NaN();
    } else {
      rec.val_ndcg10 = ndcg(val, 10);
      rec.val_hr10 = hit_rate(val, 10);
    }
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    best.log.push_back(rec);
    if (on_epoch) on_epoch(rec);

    // Without validation users the latest epoch is always taken.
    if (std::isnan(rec.val_ndcg10) || rec.val_ndcg10 > best_ndcg) {
      if (!std::isnan(rec.val_ndcg10)) best_ndcg = rec.val_ndcg10;
      best.table = table;
      best.best_epoch = epoch;
      stale = 0;
    } else if (schedule.patience > 0 && ++stale >= schedule.patience) {
      break;
    }
  }
  return best;
}

}  // namespace triplh
