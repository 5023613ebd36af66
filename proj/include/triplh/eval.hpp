#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "triplh/dataset.hpp"
#include "triplh/model.hpp"

namespace triplh {

/// Worker threads for read-only evaluation, from TRIPLH_THREADS (unset or 0:
/// one thread).
unsigned worker_threads();

/// Precomputed per-item state for full-catalog scoring of one model.
class Scorer {
 public:
  Scorer(const EmbeddingTable& table, const ModelConfig& cfg);

  double score(std::size_t user, std::size_t item) const;
  /// Writes the score of every item for `user` into `out` (size n_items).
  void score_all(std::size_t user, std::span<double> out) const;
  std::size_t n_items() const noexcept { return table_->n_items(); }

 private:
  const EmbeddingTable* table_;
  ModelConfig cfg_;
  std::vector<double> item_x0_;       // Lorentz kinds: zeroth lifted component
  std::vector<double> item_scale_;    // HyperBPR: clip scale per item
  std::vector<double> item_norm_sq_;  // HyperBPR: squared norm after clipping
};

enum class Target { Validation, Test };

struct RankResult {
  std::uint32_t user = 0;
  std::uint32_t target_rank = 0;  // 1-based, ties ranked ahead of the target
  std::vector<std::uint32_t> topk;

  bool operator==(const RankResult&) const = default;
};

/// Ranks each user's held-out item against the full catalog. Train items are
/// masked; for the test target the validation item is masked as well.
/// Results are in ascending user order.
std::vector<RankResult> rank_all(const EmbeddingTable& table, const ModelConfig& cfg,
                                 const InteractionDataset& dataset, Target target = Target::Test,
                                 std::size_t k = 10, unsigned threads = worker_threads());

/// Rank of `target` among the unmasked scores, ties counted pessimistically.
/// Masked entries hold -infinity.
std::uint32_t pessimistic_rank(std::span<const double> scores, std::uint32_t target);
/// Up to k unmasked items by descending score, lower item index first on ties.
std::vector<std::uint32_t> top_k(std::span<const double> scores, std::size_t k);

double hit_rate(std::span<const RankResult> results, std::size_t k);
double ndcg(std::span<const RankResult> results, std::size_t k);
double coverage(std::span<const RankResult> results, std::size_t k, std::size_t n_items);

enum class PopularityBin : std::uint8_t { Head = 0, Medium = 1, Tail = 2 };

/// Items ordered by train popularity (descending, index ascending on ties).
/// An item is head while the mass before it is below `head_mass` of the
/// total, tail once the mass before it reaches 1 - `tail_mass`, medium
/// otherwise.
std::vector<PopularityBin> popularity_bins(std::span<const std::uint32_t> popularity,
                                           double head_mass = 0.2, double tail_mass = 0.2);

struct PopularityShares {
  double head = 0.0;
  double medium = 0.0;
  double tail = 0.0;
};

/// Fraction of all recommended top-k slots that fall in each bin.
PopularityShares popularity_shares(std::span<const RankResult> results,
                                   const InteractionDataset& dataset, std::size_t k = 10,
                                   double head_mass = 0.2, double tail_mass = 0.2);

/// (mean_pos - mean_neg) / sqrt((var_pos + var_neg) / 2) with sample
/// variances; 0 when both the mean gap and the pooled spread vanish.
double separation_statistic(std::span<const double> positives, std::span<const double> negatives);

struct ScoreHistogram {
  std::vector<double> edges;  // bins + 1
  std::vector<std::size_t> positive_counts;
  std::vector<std::size_t> negative_counts;
  std::vector<double> positive_scores;
  std::vector<double> negative_scores;
  double separation = 0.0;

  /// bin_left,bin_right,pos_count,neg_count
  std::string to_csv() const;
};

ScoreHistogram make_histogram(std::vector<double> positives, std::vector<double> negatives,
                              std::size_t bins);

/// Scores of each user's test item versus one sampled item the user never
/// interacted with.
ScoreHistogram score_histogram(const EmbeddingTable& table, const ModelConfig& cfg,
                               const InteractionDataset& dataset, std::size_t bins = 50,
                               std::uint64_t seed = 1);

struct LatencyStats {
  double mean_ns = 0.0;
  double p95_ns = 0.0;
};

struct BenchResult {
  std::size_t dim = 0;
  std::size_t n_pairs = 0;
  std::size_t repetitions = 0;
  LatencyStats lorentz;
  LatencyStats poincare;
  double ratio = 0.0;  // poincare mean / lorentz mean
  double checksum = 0.0;

  nlohmann::json to_json() const;
};

/// Times per-pair scoring of the same random user x item grid under the
/// squared-Lorentz score and under the Poincare distance. Inputs are built
/// before timing starts; the timed loops do not allocate. Throws UsageError
/// when a repetition is too short for the clock to resolve.
BenchResult latency_bench(std::size_t dim, std::size_t n_pairs, std::size_t repetitions,
                          std::uint64_t seed = 1);

struct EvalOptions {
  bool coverage = false;
  double head_mass = 0.2;
  double tail_mass = 0.2;
  unsigned threads = worker_threads();
};

struct EvalReport {
  std::string model;
  std::size_t n_users_evaluated = 0;
  double hr5 = 0.0, hr10 = 0.0, ndcg5 = 0.0, ndcg10 = 0.0;
  std::optional<double> coverage10;
  std::optional<PopularityShares> popularity;
  std::optional<BenchResult> latency;

  nlohmann::json to_json() const;
};

EvalReport evaluate(const EmbeddingTable& table, const ModelConfig& cfg,
                    const InteractionDataset& dataset, const EvalOptions& options = {});
EvalReport make_report(std::span<const RankResult> results, const InteractionDataset& dataset,
                       const EvalOptions& options);

}  // namespace triplh
