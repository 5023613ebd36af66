#include "triplh/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <thread>

#include "scoring.hpp"
#include "triplh/error.hpp"
#include "triplh/geometry.hpp"
#include "triplh/rng.hpp"

namespace triplh {

unsigned worker_threads() {
  const char* env = std::getenv("TRIPLH_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 0) {
    throw UsageError(std::string("TRIPLH_THREADS must be a non-negative integer, got '") + env + "'");
  }
  return v == 0 ? 1u : static_cast<unsigned>(v);
}

Scorer::Scorer(const EmbeddingTable& table, const ModelConfig& cfg) : table_(&table), cfg_(cfg) {
  const std::size_t n = table.n_items();
  if (uses_lorentz_score(cfg.kind)) {
    item_x0_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      item_x0_[i] = kernels::lift_x0(kernels::squared_norm(table.item(i)), 1.0);
    }
  } else if (cfg.kind == ModelKind::HyperBPR) {
    item_scale_.resize(n);
    item_norm_sq_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double sq = kernels::squared_norm(table.item(i));
      item_scale_[i] = kernels::poincare_clip_scale(sq);
      item_norm_sq_[i] = item_scale_[i] * item_scale_[i] * sq;
    }
  }
}

double Scorer::score(std::size_t user, std::size_t item) const {
  return triplh::score(*table_, cfg_, user, item);
}

void Scorer::score_all(std::size_t user, std::span<double> out) const {
  const auto u = table_->user(user);
  const std::size_t n = table_->n_items();
  if (uses_lorentz_score(cfg_.kind)) {
    const double u0 = kernels::lift_x0(kernels::squared_norm(u), 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = kernels::lorentz_score(u0, item_x0_[i], kernels::dot(u, table_->item(i)));
    }
  } else if (cfg_.kind == ModelKind::HyperBPR) {
    const double sq = kernels::squared_norm(u);
    const double su = kernels::poincare_clip_scale(sq);
    const double cu_sq = su * su * sq;
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = detail::poincare_neg_distance(su, cu_sq, item_scale_[i], item_norm_sq_[i],
                                             kernels::dot(u, table_->item(i)));
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) out[i] = kernels::dot(u, table_->item(i));
  }
}

std::uint32_t pessimistic_rank(std::span<const double> scores, std::uint32_t target) {
  const double t = scores[target];
  std::uint32_t ahead = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i != target && scores[i] >= t && scores[i] != -std::numeric_limits<double>::infinity()) {
      ++ahead;
    }
  }
  return ahead + 1;
}

std::vector<std::uint32_t> top_k(std::span<const double> scores, std::size_t k) {
  std::vector<std::uint32_t> idx;
  idx.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] != -std::numeric_limits<double>::infinity()) {
      idx.push_back(static_cast<std::uint32_t>(i));
    }
  }
  const std::size_t m = std::min(k, idx.size());
  auto better = [&](std::uint32_t a, std::uint32_t b) {
    return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(m), idx.end(), better);
  idx.resize(m);
  return idx;
}

std::vector<RankResult> rank_all(const EmbeddingTable& table, const ModelConfig& cfg,
                                 const InteractionDataset& dataset, Target target, std::size_t k,
                                 unsigned threads) {
  if (table.n_users() != dataset.n_users() || table.n_items() != dataset.n_items()) {
    throw UsageError("rank_all: table shape does not match the dataset");
  }
  std::vector<std::uint32_t> users;
  for (std::size_t u = 0; u < dataset.n_users(); ++u) {
    const auto item = target == Target::Test ? dataset.test_item(u) : dataset.validation_item(u);
    if (item) users.push_back(static_cast<std::uint32_t>(u));
  }
  std::vector<RankResult> results(users.size());
  const Scorer scorer(table, cfg);

  auto work = [&](std::size_t begin, std::size_t end) {
    std::vector<double> scores(dataset.n_items());
    for (std::size_t slot = begin; slot < end; ++slot) {
      const std::uint32_t u = users[slot];
      scorer.score_all(u, scores);
      for (std::uint32_t i : dataset.train_items(u)) {
        scores[i] = -std::numeric_limits<double>::infinity();
      }
      std::uint32_t goal;
      if (target == Target::Test) {
        scores[*dataset.validation_item(u)] = -std::numeric_limits<double>::infinity();
        goal = *dataset.test_item(u);
      } else {
        goal = *dataset.validation_item(u);
      }
      results[slot] = RankResult{u, pessimistic_rank(scores, goal), top_k(scores, k)};
    }
  };

  const std::size_t n_threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(1, users.size()));
  if (n_threads == 1) {
    work(0, users.size());
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (users.size() + n_threads - 1) / n_threads;
    for (std::size_t t = 0; t < n_threads; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(users.size(), begin + chunk);
      if (begin < end) pool.emplace_back(work, begin, end);
    }
  }
  return results;
}

namespace {

void require_nonempty(std::span<const RankResult> results, const char* what) {
  if (results.empty()) throw UsageError(std::string(what) + ": empty result set");
}

}  // namespace

double hit_rate(std::span<const RankResult> results, std::size_t k) {
  require_nonempty(results, "hit_rate");
  std::size_t hits = 0;
  for (const RankResult& r : results) hits += r.target_rank <= k ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(results.size());
}

double ndcg(std::span<const RankResult> results, std::size_t k) {
  require_nonempty(results, "ndcg");
  // long double keeps the mean correctly rounded for catalog-sized sums.
  long double total = 0.0L;
  for (const RankResult& r : results) {
    if (r.target_rank <= k) total += 1.0L / std::log2(static_cast<long double>(r.target_rank) + 1.0L);
  }
  return static_cast<double>(total / static_cast<long double>(results.size()));
}

double coverage(std::span<const RankResult> results, std::size_t k, std::size_t n_items) {
  if (n_items == 0) throw UsageError("coverage: empty catalog");
  std::vector<bool> seen(n_items, false);
  std::size_t distinct = 0;
  for (const RankResult& r : results) {
    const std::size_t m = std::min(k, r.topk.size());
    for (std::size_t j = 0; j < m; ++j) {
      if (r.topk[j] >= n_items) throw UsageError("coverage: item index out of range");
      if (!seen[r.topk[j]]) {
        seen[r.topk[j]] = true;
        ++distinct;
      }
    }
  }
  return static_cast<double>(distinct) / static_cast<double>(n_items);
}

std::vector<PopularityBin> popularity_bins(std::span<const std::uint32_t> popularity,
                                           double head_mass, double tail_mass) {
  if (!(head_mass >= 0.0 && tail_mass >= 0.0 && head_mass + tail_mass <= 1.0)) {
    throw UsageError("popularity bin masses must be non-negative and sum to at most 1");
  }
  std::vector<std::uint32_t> order(popularity.size());
  std::iota(order.begin(), order.end(), 0u);
  std::ranges::sort(order, [&](std::uint32_t a, std::uint32_t b) {
    return popularity[a] != popularity[b] ? popularity[a] > popularity[b] : a < b;
  });
  const double total = std::accumulate(popularity.begin(), popularity.end(), 0.0);
  std::vector<PopularityBin> bins(popularity.size(), PopularityBin::Tail);
  double before = 0.0;
  for (std::uint32_t i : order) {
    if (total > 0.0) {
      const double frac = before / total;
      if (frac < head_mass) {
        bins[i] = PopularityBin::Head;
      } else if (frac < 1.0 - tail_mass) {
        bins[i] = PopularityBin::Medium;
      }
    }
    before += popularity[i];
  }
  return bins;
}

PopularityShares popularity_shares(std::span<const RankResult> results,
                                   const InteractionDataset& dataset, std::size_t k,
                                   double head_mass, double tail_mass) {
  const auto bins = popularity_bins(dataset.item_popularity(), head_mass, tail_mass);
  std::size_t counts[3] = {0, 0, 0};
  std::size_t slots = 0;
  for (const RankResult& r : results) {
    const std::size_t m = std::min(k, r.topk.size());
    for (std::size_t j = 0; j < m; ++j) {
      ++counts[static_cast<std::size_t>(bins.at(r.topk[j]))];
      ++slots;
    }
  }
  if (slots == 0) throw UsageError("popularity_shares: no recommendations");
  const double n = static_cast<double>(slots);
  return {static_cast<double>(counts[0]) / n, static_cast<double>(counts[1]) / n,
          static_cast<double>(counts[2]) / n};
}

double separation_statistic(std::span<const double> positives, std::span<const double> negatives) {
  if (positives.size() < 2 || negatives.size() < 2) {
    throw UsageError("separation_statistic needs at least two scores per side");
  }
  auto moments = [](std::span<const double> xs) {
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return std::pair{mean, ss / static_cast<double>(xs.size() - 1)};
  };
  const auto [mp, vp] = moments(positives);
  const auto [mn, vn] = moments(negatives);
  const double pooled = std::sqrt(0.5 * (vp + vn));
  const double gap = mp - mn;
  if (gap == 0.0) return 0.0;
  if (pooled == 0.0) return gap > 0.0 ? std::numeric_limits<double>::infinity()
                                      : -std::numeric_limits<double>::infinity();
  return gap / pooled;
}

ScoreHistogram make_histogram(std::vector<double> positives, std::vector<double> negatives,
                              std::size_t bins) {
  if (bins == 0) throw UsageError("histogram needs at least one bin");
  if (positives.empty() || negatives.empty()) throw UsageError("histogram needs scores on both sides");
  ScoreHistogram h;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double v : positives) lo = std::min(lo, v), hi = std::max(hi, v);
  for (double v : negatives) lo = std::min(lo, v), hi = std::max(hi, v);
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  h.edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) {
    h.edges[b] = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins);
  }
  h.edges[bins] = hi;
  auto bin_of = [&](double v) {
    const auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
    return std::min(b, bins - 1);
  };
  h.positive_counts.assign(bins, 0);
  h.negative_counts.assign(bins, 0);
  for (double v : positives) ++h.positive_counts[bin_of(v)];
  for (double v : negatives) ++h.negative_counts[bin_of(v)];
  h.separation = positives.size() >= 2 && negatives.size() >= 2
                     ? separation_statistic(positives, negatives)
                     : 0.0;
  h.positive_scores = std::move(positives);
  h.negative_scores = std::move(negatives);
  return h;
}

std::string ScoreHistogram::to_csv() const {
  std::string out = "bin_left,bin_right,pos_count,neg_count\n";
  char line[128];
  for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
    std::snprintf(line, sizeof line, "%.10g,%.10g,%zu,%zu\n", edges[b], edges[b + 1],
                  positive_counts[b], negative_counts[b]);
    out += line;
  }
  return out;
}

ScoreHistogram score_histogram(const EmbeddingTable& table, const ModelConfig& cfg,
                               const InteractionDataset& dataset, std::size_t bins,
                               std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> pos, neg;
  for (std::size_t u = 0; u < dataset.n_users(); ++u) {
    const auto test = dataset.test_item(u);
    if (!test) continue;
    pos.push_back(score(table, cfg, u, *test));
    const auto seen = dataset.all_items(u);
    if (seen.size() >= dataset.n_items()) continue;
    std::uint32_t item = 0;
    bool found = false;
    for (int attempt = 0; attempt < 100 && !found; ++attempt) {
      item = static_cast<std::uint32_t>(uniform_index(rng, dataset.n_items()));
      found = !std::ranges::binary_search(seen, item);
    }
    if (!found) {
      std::vector<std::uint32_t> complement;
      for (std::uint32_t i = 0; i < dataset.n_items(); ++i) {
        if (!std::ranges::binary_search(seen, i)) complement.push_back(i);
      }
      item = complement[uniform_index(rng, complement.size())];
    }
    neg.push_back(score(table, cfg, u, item));
  }
  return make_histogram(std::move(pos), std::move(neg), bins);
}

nlohmann::json BenchResult::to_json() const {
  return {{"dim", dim},
          {"pairs", n_pairs},
          {"repetitions", repetitions},
          {"lorentz_mean_ns", lorentz.mean_ns},
          {"lorentz_p95_ns", lorentz.p95_ns},
          {"poincare_mean_ns", poincare.mean_ns},
          {"poincare_p95_ns", poincare.p95_ns},
          {"ratio", ratio}};
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j = {{"model", model},   {"users", n_users_evaluated}, {"hr5", hr5},
                      {"hr10", hr10},     {"ndcg5", ndcg5},             {"ndcg10", ndcg10}};
  if (coverage10) j["coverage10"] = *coverage10;
  if (popularity) {
    j["popularity_shares"] = {
        {"head", popularity->head}, {"medium", popularity->medium}, {"tail", popularity->tail}};
  }
  if (latency) j["latency"] = latency->to_json();
  return j;
}

EvalReport make_report(std::span<const RankResult> results, const InteractionDataset& dataset,
                       const EvalOptions& options) {
  EvalReport r;
  r.n_users_evaluated = results.size();
  r.hr5 = hit_rate(results, 5);
  r.hr10 = hit_rate(results, 10);
  r.ndcg5 = ndcg(results, 5);
  r.ndcg10 = ndcg(results, 10);
  if (options.coverage) {
    r.coverage10 = coverage(results, 10, dataset.n_items());
    r.popularity = popularity_shares(results, dataset, 10, options.head_mass, options.tail_mass);
  }
  return r;
}

EvalReport evaluate(const EmbeddingTable& table, const ModelConfig& cfg,
                    const InteractionDataset& dataset, const EvalOptions& options) {
  const auto results = rank_all(table, cfg, dataset, Target::Test, 10, options.threads);
  EvalReport r = make_report(results, dataset, options);
  r.model = std::string(to_string(cfg.kind));
  return r;
}

}  // namespace triplh
