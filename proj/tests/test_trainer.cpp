#include <doctest.h>

#include <cmath>
#include <map>

#include "testing.hpp"
#include "triplh/config.hpp"
#include "triplh/error.hpp"
#include "triplh/eval.hpp"
#include "triplh/trainer.hpp"

using namespace triplh;

namespace {

InteractionDataset tiny_dataset() {
  // User "a" has seen every item but "free" in train; user "b" a single item.
  std::vector<RawInteraction> raw;
  for (int i = 0; i < 6; ++i) raw.push_back({"a", "i" + std::to_string(i), 1.0, i});
  raw.push_back({"a", "v", 1.0, 10});
  raw.push_back({"a", "t", 1.0, 11});
  raw.push_back({"b", "free", 1.0, 1});
  return build_dataset(raw);
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("negative sampling never returns a train item") {
  Rng rng(51);
  const auto ds = build_dataset(testing::random_raw(20, 15, 3, 12, rng));
  for (std::size_t u = 0; u < ds.n_users(); ++u) {
    for (std::uint32_t n : sample_negatives(ds, u, 50, rng)) REQUIRE_FALSE(ds.is_train_item(u, n));
  }
}

TEST_CASE("negative sampling with a single allowed item") {
  // Two interactions keep everything in train, so user "a" may only draw
  // the one item it has never seen.
  const std::vector<RawInteraction> raw = {
      {"a", "x", 1.0, 1}, {"a", "y", 1.0, 2}, {"b", "only", 1.0, 1}};
  const auto ds = build_dataset(raw);
  Rng rng(52);
  const auto only = static_cast<std::uint32_t>(2);
  REQUIRE(ds.item_tokens()[only] == "only");
  for (std::uint32_t n : sample_negatives(ds, 0, 200, rng)) REQUIRE(n == only);
}

TEST_CASE("negative sampling is uniform over the complement") {
  const auto ds = tiny_dataset();
  Rng rng(53);
  std::map<std::uint32_t, int> counts;
  const int draws = 30000;
  for (std::uint32_t n : sample_negatives(ds, 0, draws, rng)) ++counts[n];
  // Complement of user a's train set: v, t, free.
  REQUIRE(counts.size() == 3);
  double chi2 = 0.0;
  const double expected = draws / 3.0;
  for (const auto& [item, c] : counts) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(chi2 < 13.8);  // chi-square, 2 dof, p = 0.001
}

TEST_CASE("negative sampling with an exhausted catalog is a usage error") {
  const std::vector<RawInteraction> raw = {{"a", "x", 1.0, 1}, {"a", "y", 1.0, 2}};
  const auto ds = build_dataset(raw);
  Rng rng(54);
  CHECK_THROWS_AS(sample_negatives(ds, 0, 1, rng), UsageError);
}

TEST_CASE("zero epochs returns the initial table") {
  const auto ds = make_planted_dataset({});
  ModelConfig cfg;
  cfg.dim = 8;
  TrainSchedule sched;
  sched.max_epochs = 0;
  sched.seed = 9;
  const auto result = train(ds, cfg, sched, AdamWConfig{});
  CHECK(result.table == init_table(cfg, ds.n_users(), ds.n_items(), 9));
  CHECK(result.log.empty());
  CHECK(result.best_epoch == 0);
}

TEST_CASE("fixed seed gives bit-identical tables") {
  const auto ds = make_planted_dataset({});
  for (ModelKind kind : kAllModelKinds) {
    CAPTURE(to_string(kind));
    ModelConfig cfg;
    cfg.kind = kind;
    cfg.dim = 6;
    TrainSchedule sched;
    sched.max_epochs = 3;
    sched.batch_size = 32;
    AdamWConfig opt;
    opt.learning_rate = 0.01;
    const auto a = train(ds, cfg, sched, opt);
    const auto b = train(ds, cfg, sched, opt);
    CHECK(a.table == b.table);
    sched.seed += 1;
    CHECK_FALSE(train(ds, cfg, sched, opt).table == a.table);
  }
}

TEST_CASE("epoch log, best epoch and early stopping") {
  const auto ds = make_planted_dataset({});
  ModelConfig cfg;
  cfg.dim = 8;
  TrainSchedule sched;
  sched.max_epochs = 60;
  sched.batch_size = 64;
  sched.patience = 3;
  AdamWConfig opt;
  opt.learning_rate = 0.05;
  std::vector<EpochRecord> seen;
  const auto result = train(ds, cfg, sched, opt, [&](const EpochRecord& r) { seen.push_back(r); });
  REQUIRE(seen.size() == result.log.size());
  REQUIRE_FALSE(seen.empty());
  CHECK(seen.front().epoch == 1);
  CHECK(result.best_epoch >= 1);
  // Stopping happens exactly `patience` epochs after the best one, unless
  // the budget ran out first.
  if (seen.size() < sched.max_epochs) CHECK(seen.size() == result.best_epoch + sched.patience);
  double best = -1.0;
  for (const auto& r : seen) best = std::max(best, r.val_ndcg10);
  CHECK(seen[result.best_epoch - 1].val_ndcg10 == best);
  // The returned table is the best epoch's, so re-evaluating reproduces it.
  const auto val = rank_all(result.table, cfg, ds, Target::Validation);
  CHECK(ndcg(val, 10) == best);

  const std::string line = to_json_line(seen.front());
  CHECK(line.find("\"epoch\":1") != std::string::npos);
  CHECK(line.find("val_ndcg10") != std::string::npos);
}

TEST_CASE("no validation users: NaN metrics, latest epoch kept") {
  const std::vector<RawInteraction> raw = {
      {"a", "x", 1.0, 1}, {"a", "y", 1.0, 2}, {"b", "y", 1.0, 1}, {"b", "z", 1.0, 2}};
  const auto ds = build_dataset(raw);
  ModelConfig cfg;
  cfg.dim = 2;
  TrainSchedule sched;
  sched.max_epochs = 4;
  const auto result = train(ds, cfg, sched, AdamWConfig{});
  CHECK(result.best_epoch == 4);
  CHECK(std::isnan(result.log.back().val_ndcg10));
  CHECK(to_json_line(result.log.back()).find("\"val_ndcg10\":null") != std::string::npos);
}

TEST_CASE("divergence throws and keeps the last good table") {
  const auto ds = make_planted_dataset({});
  ModelConfig cfg;
  cfg.kind = ModelKind::TriplE;
  cfg.dim = 4;
  cfg.init_scale = 1.0;
  TrainSchedule sched;
  sched.max_epochs = 5;
  sched.batch_size = 16;
  AdamWConfig opt;
  opt.learning_rate = 1e300;  // parameters overflow on the first steps
  try {
    train(ds, cfg, sched, opt);
    FAIL("expected TrainingDiverged");
  } catch (const TrainingDiverged& e) {
    CHECK(e.last_good().best_epoch == 0);
    CHECK(e.last_good().table == init_table(cfg, ds.n_users(), ds.n_items(), sched.seed));
    CHECK(e.last_good().table.all_finite());
  }
}

TEST_CASE("schedule validation") {
  TrainSchedule s;
  s.batch_size = 0;
  CHECK_THROWS_AS(s.validate(), UsageError);
  s = {};
  s.negatives_per_positive = 0;
  CHECK_THROWS_AS(s.validate(), UsageError);
  s = {};
  s.max_epochs = 0;  // patience larger than the budget is fine
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("run config parsing") {
  const auto cfg = parse_run_config(std::string(R"({"dataset":"d.bin","model":"triple","dim":8})"), true);
  CHECK(cfg.model.kind == ModelKind::TriplE);
  CHECK(cfg.model.dim == 8);
  CHECK(cfg.schedule.batch_size == 1024);
  CHECK(cfg.optimizer.learning_rate == 1e-3);
  CHECK_THROWS_AS(parse_run_config(std::string(R"({"dataset":"d","dimm":8})"), true), UsageError);
  CHECK_THROWS_AS(parse_run_config(std::string(R"({"dim":8})"), true), UsageError);
  CHECK_THROWS_AS(parse_run_config(std::string(R"({"dim":-1})"), false), UsageError);
  CHECK_THROWS_AS(parse_run_config(std::string(R"({"dim":"8"})"), false), UsageError);
  CHECK_THROWS_AS(parse_run_config(std::string("{not json"), false), UsageError);
  // Normalized output parses back to the same config.
  const auto again = parse_run_config(to_json(cfg), true);
  CHECK(again.model == cfg.model);
  CHECK(again.schedule == cfg.schedule);
  CHECK(again.optimizer == cfg.optimizer);
}

}  // TEST_SUITE
