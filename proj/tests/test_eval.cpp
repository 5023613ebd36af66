#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "testing.hpp"
#include "triplh/error.hpp"
#include "triplh/eval.hpp"

using namespace triplh;

namespace {

ModelConfig config_for(ModelKind kind, std::size_t dim) {
  ModelConfig cfg;
  cfg.kind = kind;
  cfg.dim = dim;
  return cfg;
}

RankResult rr(std::uint32_t rank, std::vector<std::uint32_t> topk = {}) {
  return RankResult{0, rank, std::move(topk)};
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("ranks and top-k match a brute-force full sort for every kind") {
  Rng rng(61);
  for (ModelKind kind : kAllModelKinds) {
    CAPTURE(to_string(kind));
    for (int trial = 0; trial < 10; ++trial) {
      const auto ds = build_dataset(testing::random_raw(25, 40, 1, 15, rng));
      const auto table = testing::random_table(ds.n_users(), ds.n_items(), 4, 0.7, rng);
      const auto cfg = config_for(kind, 4);
      for (bool test_target : {true, false}) {
        const auto fast = rank_all(table, cfg, ds, test_target ? Target::Test : Target::Validation, 10);
        const auto slow = testing::brute_force_ranks(table, cfg, ds, test_target, 10);
        REQUIRE(fast.size() == slow.size());
        for (std::size_t k = 0; k < fast.size(); ++k) {
          REQUIRE(fast[k].user == slow[k].user);
          REQUIRE(fast[k].target_rank == slow[k].rank);
          REQUIRE(fast[k].topk == slow[k].topk);
        }
        REQUIRE(hit_rate(fast, 10) == testing::brute_hr(slow, 10));
        REQUIRE(ndcg(fast, 10) == doctest::Approx(testing::brute_ndcg(slow, 10)).epsilon(1e-15));
        REQUIRE(coverage(fast, 10, ds.n_items()) == testing::brute_coverage(slow, 10, ds.n_items()));
      }
    }
  }
}

TEST_CASE("ties are ranked pessimistically") {
  // An all-zero table scores every item identically, so the target lands
  // behind every unmasked item.
  Rng rng(62);
  const auto ds = build_dataset(testing::random_raw(10, 20, 4, 8, rng));
  const EmbeddingTable zero(ds.n_users(), ds.n_items(), 3);
  const auto res = rank_all(zero, config_for(ModelKind::BPR, 3), ds);
  for (const auto& r : res) {
    const std::size_t unmasked = ds.n_items() - ds.train_items(r.user).size() - 1;  // minus validation
    CHECK(r.target_rank == unmasked);
    // Ties in top-k go to the lowest index.
    for (std::size_t j = 1; j < r.topk.size(); ++j) CHECK(r.topk[j - 1] < r.topk[j]);
  }

  const std::vector<double> scores{0.5, 0.9, 0.5, -std::numeric_limits<double>::infinity(), 0.1};
  CHECK(pessimistic_rank(scores, 0) == 3);
  CHECK(pessimistic_rank(scores, 1) == 1);
  CHECK(pessimistic_rank(scores, 4) == 4);
  CHECK(top_k(scores, 3) == std::vector<std::uint32_t>{1, 0, 2});
  CHECK(top_k(scores, 10).size() == 4);
}

TEST_CASE("metric closed forms") {
  const std::vector<RankResult> one{rr(1)};
  CHECK(hit_rate(one, 10) == 1.0);
  CHECK(ndcg(one, 10) == 1.0);
  const std::vector<RankResult> three{rr(3)};
  CHECK(ndcg(three, 10) == doctest::Approx(0.5));  // 1 / log2(4)
  CHECK(ndcg(three, 2) == 0.0);
  const std::vector<RankResult> mixed{rr(1), rr(7), rr(11), rr(10)};
  CHECK(hit_rate(mixed, 10) == 0.75);
  CHECK(hit_rate(mixed, 5) == 0.25);
  CHECK(ndcg(mixed, 10) == doctest::Approx((1.0 + 1.0 / 3.0 + 1.0 / std::log2(11.0)) / 4.0));
  const std::vector<RankResult> none;
  CHECK_THROWS_AS(hit_rate(none, 10), UsageError);
  CHECK_THROWS_AS(ndcg(none, 10), UsageError);
}

TEST_CASE("coverage counts distinct recommended items") {
  const std::vector<RankResult> res{rr(1, {0, 1, 2}), rr(1, {2, 3, 4}), rr(1, {0, 4, 1})};
  CHECK(coverage(res, 3, 10) == 0.5);
  CHECK(coverage(res, 1, 10) == doctest::Approx(0.2));
  CHECK(coverage(res, 3, 5) == 1.0);
  CHECK_THROWS_AS(coverage(res, 3, 4), UsageError);
}

TEST_CASE("popularity bins by cumulative train mass") {
  using B = PopularityBin;
  const std::vector<std::uint32_t> pop{10, 5, 3, 1, 1};
  CHECK(popularity_bins(pop) == std::vector<B>{B::Head, B::Medium, B::Medium, B::Tail, B::Tail});
  const std::vector<std::uint32_t> flat{1, 1, 1, 1, 1};
  CHECK(popularity_bins(flat) == std::vector<B>{B::Head, B::Medium, B::Medium, B::Medium, B::Tail});
  // Order is by popularity, not by index.
  const std::vector<std::uint32_t> shuffled{1, 10, 1, 3, 5};
  CHECK(popularity_bins(shuffled) == std::vector<B>{B::Tail, B::Head, B::Tail, B::Medium, B::Medium});
  CHECK_THROWS_AS(popularity_bins(pop, 0.7, 0.5), UsageError);
}

TEST_CASE("popularity shares of recommendation slots") {
  const std::vector<RawInteraction> raw = {
      {"a", "p", 1.0, 1}, {"b", "p", 1.0, 1}, {"c", "p", 1.0, 1}, {"a", "q", 1.0, 2},
      {"b", "q", 1.0, 2}, {"c", "r", 1.0, 2}, {"a", "s", 1.0, 3}};
  const auto ds = build_dataset(raw);  // train popularity p:3 q:2 r:1 s:0; a has 3 actions
  // p = 0, q = 1, r = 2, s = 3. Bins: p head, q medium (3/6 before), r tail
  // (5/6), s tail.
  const std::vector<RankResult> res{rr(1, {0, 1, 2, 3})};
  const auto shares = popularity_shares(res, ds, 4);
  CHECK(shares.head == 0.25);
  CHECK(shares.medium == 0.25);
  CHECK(shares.tail == 0.5);
}

TEST_CASE("separation statistic") {
  const std::vector<double> pos{1.0, 2.0, 3.0};
  const std::vector<double> neg{0.0, 1.0, 2.0};
  CHECK(separation_statistic(pos, neg) == doctest::Approx(1.0));  // gap 1, pooled sd 1
  CHECK(separation_statistic(neg, pos) == doctest::Approx(-1.0));
  const std::vector<double> same{1.0, 1.0};
  CHECK(separation_statistic(same, same) == 0.0);
  const std::vector<double> one{1.0};
  CHECK_THROWS_AS(separation_statistic(one, pos), UsageError);
}

TEST_CASE("histogram bins and csv") {
  const auto h = make_histogram({0.0, 1.0, 1.0}, {0.5, 0.25}, 4);
  REQUIRE(h.edges.size() == 5);
  CHECK(h.edges.front() == 0.0);
  CHECK(h.edges.back() == 1.0);
  CHECK(h.positive_counts == std::vector<std::size_t>{1, 0, 0, 2});
  CHECK(h.negative_counts == std::vector<std::size_t>{0, 1, 1, 0});
  const auto csv = h.to_csv();
  CHECK(csv.rfind("bin_left,bin_right,pos_count,neg_count\n", 0) == 0);
  CHECK(csv.find("0.75,1,2,0") != std::string::npos);
}

TEST_CASE("score histogram negatives come from outside the user's items") {
  const auto ds = make_planted_dataset({});
  Rng rng(63);
  const auto table = testing::random_table(ds.n_users(), ds.n_items(), 4, 0.5, rng);
  const auto cfg = config_for(ModelKind::TriplH, 4);
  const auto h = score_histogram(table, cfg, ds, 10, 3);
  CHECK(h.positive_scores.size() == ds.n_users());
  CHECK(h.negative_scores.size() == ds.n_users());
  std::size_t total = 0;
  for (std::size_t c : h.positive_counts) total += c;
  CHECK(total == ds.n_users());
  const auto again = score_histogram(table, cfg, ds, 10, 3);
  CHECK(again.negative_scores == h.negative_scores);
}

TEST_CASE("thread count does not change results") {
  Rng rng(64);
  const auto ds = build_dataset(testing::random_raw(60, 50, 3, 20, rng));
  const auto table = testing::random_table(ds.n_users(), ds.n_items(), 5, 0.6, rng);
  const auto cfg = config_for(ModelKind::HyperBPR, 5);
  const auto one = rank_all(table, cfg, ds, Target::Test, 10, 1);
  const auto four = rank_all(table, cfg, ds, Target::Test, 10, 4);
  CHECK(one == four);
}

TEST_CASE("scorer is bit-identical to score()") {
  Rng rng(65);
  for (ModelKind kind : kAllModelKinds) {
    const auto table = testing::random_table(4, 30, 7, 0.9, rng);
    const auto cfg = config_for(kind, 7);
    const Scorer scorer(table, cfg);
    std::vector<double> out(30);
    for (std::size_t u = 0; u < 4; ++u) {
      scorer.score_all(u, out);
      for (std::size_t i = 0; i < 30; ++i) REQUIRE(out[i] == score(table, cfg, u, i));
    }
  }
}

TEST_CASE("evaluate report fields") {
  const auto ds = make_planted_dataset({});
  Rng rng(66);
  const auto table = testing::random_table(ds.n_users(), ds.n_items(), 4, 0.5, rng);
  const auto cfg = config_for(ModelKind::TriplE, 4);
  EvalOptions opts;
  auto report = evaluate(table, cfg, ds, opts);
  auto j = report.to_json();
  CHECK(j["model"] == "TriplE");
  CHECK(j["users"] == 50);
  CHECK_FALSE(j.contains("coverage10"));
  opts.coverage = true;
  j = evaluate(table, cfg, ds, opts).to_json();
  REQUIRE(j.contains("coverage10"));
  const double shares = j["popularity_shares"]["head"].get<double>() +
                        j["popularity_shares"]["medium"].get<double>() +
                        j["popularity_shares"]["tail"].get<double>();
  CHECK(shares == doctest::Approx(1.0));
  EmbeddingTable wrong(3, 3, 4);
  CHECK_THROWS_AS(evaluate(wrong, cfg, ds), UsageError);
}

TEST_CASE("latency bench input checks") {
  CHECK_THROWS_AS(latency_bench(64, 0, 1), UsageError);
  CHECK_THROWS_AS(latency_bench(0, 10, 1), UsageError);
  CHECK_THROWS_AS(latency_bench(64, 10, 0), UsageError);
  const auto r = latency_bench(16, 200000, 2);
  CHECK(r.n_pairs >= 200000);
  CHECK(r.lorentz.mean_ns > 0.0);
  CHECK(r.ratio == doctest::Approx(r.poincare.mean_ns / r.lorentz.mean_ns));
  CHECK(r.to_json().contains("poincare_p95_ns"));
}

}  // TEST_SUITE
