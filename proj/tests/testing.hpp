#pragma once

// Independent oracles shared by the unit tests and the acceptance binary.
// Nothing here calls into the evaluation or gradient code it is checking.

#include <cstdint>
#include <string>
#include <vector>

#include "triplh/dataset.hpp"
#include "triplh/model.hpp"
#include "triplh/rng.hpp"

namespace triplh::testing {

/// Fresh path under $TRIPLH_TMP (or the system temp dir).
std::string tmp_path(const std::string& name);

/// Random table with entries uniform in [-scale, scale] and margins drawn
/// from [0.5, 1.5] and [-0.5, 0.5].
EmbeddingTable random_table(std::size_t n_users, std::size_t n_items, std::size_t dim,
                            double scale, Rng& rng);

TripletBatch random_batch(std::size_t n_users, std::size_t n_items, std::size_t size, Rng& rng);

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;  // coordinates with |grad| above the floor
  std::string worst;        // which coordinate produced max_rel_error
};

/// Central differences of model_loss over every user, item and margin
/// coordinate, compared against the analytic gradient.
/// rel error = |fd - an| / max(|fd|, |an|); coordinates where both are below
/// `floor` are skipped.
GradCheck check_gradients(const EmbeddingTable& table, const ModelConfig& cfg,
                          const TripletBatch& batch, double h = 1e-6, double floor = 1e-8);

struct BruteRank {
  std::uint32_t user;
  std::uint32_t rank;  // 1-based, ties counted against the target
  std::vector<std::uint32_t> topk;
};

/// Full sort of every unmasked item per user via score(); test target masks
/// train and validation items, validation target masks train items.
std::vector<BruteRank> brute_force_ranks(const EmbeddingTable& table, const ModelConfig& cfg,
                                         const InteractionDataset& data, bool test_target,
                                         std::size_t k);

double brute_hr(const std::vector<BruteRank>& ranks, std::size_t k);
double brute_ndcg(const std::vector<BruteRank>& ranks, std::size_t k);
double brute_coverage(const std::vector<BruteRank>& ranks, std::size_t k, std::size_t n_items);

/// Random raw log: n_users users with between min_len and max_len distinct
/// items each, timestamps random (with occasional ties).
std::vector<RawInteraction> random_raw(std::size_t n_users, std::size_t n_items,
                                       std::size_t min_len, std::size_t max_len, Rng& rng);

}  // namespace triplh::testing
