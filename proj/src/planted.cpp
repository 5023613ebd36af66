#include <algorithm>
#include <string>

#include "triplh/dataset.hpp"
#include "triplh/error.hpp"
#include "triplh/rng.hpp"

namespace triplh {

std::size_t planted_user_cluster(const PlantedConfig& cfg, std::size_t user_index) {
  return user_index * cfg.n_clusters / cfg.n_users;
}

std::size_t planted_item_cluster(const PlantedConfig& cfg, std::size_t item_index) {
  return item_index * cfg.n_clusters / cfg.n_items;
}

std::vector<RawInteraction> make_planted_interactions(const PlantedConfig& cfg) {
  if (cfg.n_clusters == 0 || cfg.n_users < cfg.n_clusters || cfg.n_items < cfg.n_clusters) {
    throw UsageError("planted dataset needs at least one user and item per cluster");
  }
  if (cfg.interactions_per_user == 0 || cfg.interactions_per_user > cfg.n_items / cfg.n_clusters) {
    throw UsageError("interactions_per_user must be in [1, items per cluster]");
  }
  if (!(cfg.noise >= 0.0 && cfg.noise <= 1.0)) throw UsageError("noise must lie in [0, 1]");

  Rng rng(cfg.seed);
  std::vector<std::vector<std::size_t>> cluster_items(cfg.n_clusters);
  for (std::size_t i = 0; i < cfg.n_items; ++i) cluster_items[planted_item_cluster(cfg, i)].push_back(i);

  std::vector<std::vector<std::size_t>> picks(cfg.n_users);
  std::vector<bool> covered(cfg.n_items, false);
  for (std::size_t u = 0; u < cfg.n_users; ++u) {
    const auto& own = cluster_items[planted_user_cluster(cfg, u)];
    auto& chosen = picks[u];
    while (chosen.size() < cfg.interactions_per_user) {
      const bool stray = uniform_unit(rng) < cfg.noise;
      const std::size_t item = stray ? uniform_index(rng, cfg.n_items) : own[uniform_index(rng, own.size())];
      if (std::ranges::find(chosen, item) == chosen.end()) chosen.push_back(item);
    }
    for (std::size_t i : chosen) covered[i] = true;
  }
  // Give every unpicked item one early interaction inside its own cluster.
  std::vector<std::size_t> n_extra(cfg.n_users, 0);
  for (std::size_t i = 0; i < cfg.n_items; ++i) {
    if (covered[i]) continue;
    const std::size_t c = planted_item_cluster(cfg, i);
    std::vector<std::size_t> members;
    for (std::size_t u = 0; u < cfg.n_users; ++u) {
      if (planted_user_cluster(cfg, u) == c) members.push_back(u);
    }
    const std::size_t u = members[uniform_index(rng, members.size())];
    picks[u].insert(picks[u].begin(), i);
    ++n_extra[u];
  }

  std::vector<RawInteraction> out;
  for (std::size_t u = 0; u < cfg.n_users; ++u) {
    std::vector<std::int64_t> times;
    while (times.size() < picks[u].size()) {
      const auto t = static_cast<std::int64_t>(1000 + uniform_index(rng, 1'000'000));
      if (std::ranges::find(times, t) == times.end()) times.push_back(t);
    }
    std::ranges::sort(times);
    // Coverage items keep the earliest timestamps so they always land in
    // train; the regular picks are shuffled over the rest.
    auto& p = picks[u];
    for (std::size_t k = p.size(); k > n_extra[u] + 1; --k) {
      std::swap(p[k - 1], p[n_extra[u] + uniform_index(rng, k - n_extra[u])]);
    }
    for (std::size_t k = 0; k < p.size(); ++k) {
      out.push_back({"u" + std::to_string(u), "i" + std::to_string(p[k]), 1.0, times[k]});
    }
  }
  return out;
}

InteractionDataset make_planted_dataset(const PlantedConfig& cfg) {
  const auto raw = make_planted_interactions(cfg);
  return build_dataset(raw);
}

}  // namespace triplh
