#include <doctest.h>

#include <fstream>
#include <string>
#include <vector>

#include "testing.hpp"
#include "triplh/dataset.hpp"
#include "triplh/error.hpp"

using namespace triplh;

namespace {

const std::string kFixtures = TRIPLH_FIXTURES;

std::uint32_t bitwise_crc32(const std::vector<std::uint8_t>& bytes) {
  std::uint32_t crc = 0xFFFFFFFFu;
  for (std::uint8_t b : bytes) {
    crc ^= b;
    for (int k = 0; k < 8; ++k) crc = (crc >> 1) ^ (0xEDB88320u & (0u - (crc & 1u)));
  }
  return ~crc;
}

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int width) {
  for (int k = 0; k < width; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("movielens fixture: ids, dedup, ties and split") {
  const auto raw = load_movielens(kFixtures + "/ml_small.dat");
  REQUIRE(raw.size() == 11);
  CHECK(raw[0] == RawInteraction{"20", "7", 4.0, 100});

  BuildReport rep;
  const auto ds = build_dataset(raw, std::nullopt, &rep);
  CHECK(rep.input_records == 11);
  CHECK(rep.duplicates_removed == 1);
  CHECK(rep.dropped_users == 0);

  // First appearance: users 20, 10, 30; items 7, 5, 6, 8, 9.
  CHECK(ds.user_tokens() == std::vector<std::string>{"20", "10", "30"});
  CHECK(ds.item_tokens() == std::vector<std::string>{"7", "5", "6", "8", "9"});

  // User "20": 5@90, 7@100, 8@150, 6@150 (file order breaks the tie); the
  // repeat of 5@200 is dropped.
  const auto u0 = ds.user_interactions(0);
  REQUIRE(u0.size() == 4);
  CHECK(u0[0] == Interaction{0, 1, 90, Split::Train});
  CHECK(u0[1] == Interaction{0, 0, 100, Split::Train});
  CHECK(u0[2] == Interaction{0, 3, 150, Split::Validation});
  CHECK(u0[3] == Interaction{0, 2, 150, Split::Test});
  CHECK(ds.validation_item(0) == 3u);
  CHECK(ds.test_item(0) == 2u);

  // User "10": 6, 7, 5, 9.
  CHECK(ds.validation_item(1) == 1u);
  CHECK(ds.test_item(1) == 4u);
  CHECK(ds.train_items(1).size() == 2);
  CHECK(ds.is_train_item(1, 0));
  CHECK_FALSE(ds.is_train_item(1, 1));

  // User "30" has two interactions: both train, nothing held out.
  CHECK_FALSE(ds.test_item(2).has_value());
  CHECK_FALSE(ds.validation_item(2).has_value());
  CHECK(ds.train_items(2).size() == 2);

  const std::vector<std::uint32_t> pop(ds.item_popularity().begin(), ds.item_popularity().end());
  CHECK(pop == std::vector<std::uint32_t>{2, 2, 1, 0, 1});

  const auto s = ds.stats();
  CHECK(s.n_users == 3);
  CHECK(s.n_items == 5);
  CHECK(s.n_actions == 10);
  CHECK(s.n_train == 6);
  CHECK(s.n_validation == 2);
  CHECK(s.n_test == 2);
  CHECK(s.avg_length == doctest::Approx(10.0 / 3.0));
}

TEST_CASE("malformed lines abort with a line number") {
  try {
    load_movielens(kFixtures + "/ml_malformed.dat");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("ml_malformed.dat:2") != std::string::npos);
    CHECK(msg.find("2 malformed lines") != std::string::npos);
  }
  CHECK_THROWS_AS(load_movielens(kFixtures + "/does_not_exist.dat"), DataError);
}

TEST_CASE("csv loader: header detection and optional rating") {
  const auto raw = load_amazon_csv(kFixtures + "/amazon_small.csv");
  REQUIRE(raw.size() == 6);
  CHECK_FALSE(raw[1].rating.has_value());
  const auto no_header = load_amazon_csv(kFixtures + "/amazon_noheader.csv");
  REQUIRE(no_header.size() == 2);
  CHECK(no_header[0].user_token == "A1");

  const auto ds = build_dataset(raw);
  CHECK(ds.n_users() == 2);
  CHECK(ds.stats().n_test == 2);
}

TEST_CASE("rating threshold drops records and reports emptied users") {
  const auto raw = load_amazon_csv(kFixtures + "/amazon_small.csv");
  BuildReport rep;
  const auto ds = build_dataset(raw, 4.0, &rep);
  CHECK(rep.filtered_by_rating == 4);
  CHECK(rep.dropped_users == 1);
  CHECK(ds.n_users() == 1);
  CHECK(ds.n_items() == 2);
  CHECK(ds.stats().n_train == 2);
}

TEST_CASE("every held-out target is unseen in train and split rules hold") {
  Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const auto ds = build_dataset(testing::random_raw(30, 25, 1, 12, rng));
    std::size_t with_test = 0;
    for (std::size_t u = 0; u < ds.n_users(); ++u) {
      const auto events = ds.user_interactions(u);
      for (std::size_t k = 1; k < events.size(); ++k) {
        REQUIRE(events[k - 1].timestamp <= events[k].timestamp);
      }
      if (events.size() >= 3) {
        ++with_test;
        REQUIRE(ds.test_item(u) == events.back().item);
        REQUIRE(ds.validation_item(u) == events[events.size() - 2].item);
        REQUIRE_FALSE(ds.is_train_item(u, *ds.test_item(u)));
        REQUIRE_FALSE(ds.is_train_item(u, *ds.validation_item(u)));
        REQUIRE(ds.train_items(u).size() == events.size() - 2);
      } else {
        REQUIRE_FALSE(ds.test_item(u).has_value());
      }
    }
    REQUIRE(ds.stats().n_test == with_test);
  }
}

TEST_CASE("split container matches a hand-assembled byte image") {
  // Two users: "a" with items x, y, z (train, validation, test) and "b" with
  // the single train item y.
  const std::vector<RawInteraction> raw = {
      {"a", "x", 1.0, 5}, {"b", "y", 1.0, 7}, {"a", "y", 1.0, 6}, {"a", "z", 1.0, 9}};
  const auto ds = build_dataset(raw);

  std::vector<std::uint8_t> expected;
  for (char c : std::string("TRPLDS1")) expected.push_back(static_cast<std::uint8_t>(c));
  expected.push_back(0);
  put_le(expected, 1, 4);  // version
  put_le(expected, 2, 4);  // users
  put_le(expected, 3, 4);  // items
  put_le(expected, 4, 8);  // interactions
  const int rows[4][3] = {{0, 0, 5}, {0, 1, 6}, {0, 2, 9}, {1, 1, 7}};
  for (const auto& r : rows) {
    put_le(expected, r[0], 4);
    put_le(expected, r[1], 4);
    put_le(expected, r[2], 8);
  }
  for (int tag : {0, 1, 2, 0}) expected.push_back(static_cast<std::uint8_t>(tag));
  const std::string ids = R"({"items":["x","y","z"],"users":["a","b"]})";
  put_le(expected, ids.size(), 8);
  expected.insert(expected.end(), ids.begin(), ids.end());
  put_le(expected, bitwise_crc32(expected), 4);

  CHECK(encode_split(ds) == expected);
  CHECK(decode_split(expected) == ds);
}

TEST_CASE("split round trip through a file is exact and repeatable") {
  Rng rng(42);
  const auto ds = build_dataset(testing::random_raw(40, 30, 1, 10, rng));
  const auto p1 = testing::tmp_path("split_a.bin");
  const auto p2 = testing::tmp_path("split_b.bin");
  save_split(ds, p1);
  save_split(load_split(p1), p2);
  CHECK(load_split(p1) == ds);
  std::ifstream a(p1, std::ios::binary), b(p2, std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(a)), {});
  const std::string sb((std::istreambuf_iterator<char>(b)), {});
  CHECK(sa == sb);
}

TEST_CASE("tampered split files are rejected") {
  const std::vector<RawInteraction> raw = {{"a", "x", 1.0, 1}, {"a", "y", 1.0, 2}};
  const auto bytes = encode_split(build_dataset(raw));

  auto flipped = bytes;
  flipped[30] ^= 0x01;
  try {
    decode_split(flipped);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("checksum") != std::string::npos);
  }

  auto truncated = bytes;
  truncated.resize(10);
  CHECK_THROWS_AS(decode_split(truncated), DataError);

  // Right checksum, wrong version.
  auto versioned = bytes;
  versioned.resize(versioned.size() - 4);
  versioned[8] = 9;
  put_le(versioned, bitwise_crc32(versioned), 4);
  try {
    decode_split(versioned);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("version") != std::string::npos);
  }

  const auto path = testing::tmp_path("garbage.bin");
  write_file(path, "not a split file at all");
  CHECK_THROWS_AS(load_split(path), DataError);
}

TEST_CASE("constructor rejects inconsistent layouts") {
  const std::vector<std::string> users{"a"}, items{"x", "y", "z"};
  // Three interactions but no held-out tags.
  std::vector<Interaction> bad = {{0, 0, 1, Split::Train}, {0, 1, 2, Split::Train}, {0, 2, 3, Split::Train}};
  CHECK_THROWS_AS(InteractionDataset(1, 3, bad, users, items), DataError);
  // Out of time order.
  bad = {{0, 0, 5, Split::Train}, {0, 1, 2, Split::Validation}, {0, 2, 3, Split::Test}};
  CHECK_THROWS_AS(InteractionDataset(1, 3, bad, users, items), DataError);
  // Repeated item.
  bad = {{0, 0, 1, Split::Train}, {0, 0, 2, Split::Validation}, {0, 2, 3, Split::Test}};
  CHECK_THROWS_AS(InteractionDataset(1, 3, bad, users, items), DataError);
  // Duplicate tokens.
  const std::vector<std::string> dup{"x", "x", "z"};
  const std::vector<Interaction> ok = {{0, 0, 1, Split::Train}};
  CHECK_THROWS_AS(InteractionDataset(1, 3, ok, users, dup), DataError);
}

TEST_CASE("planted data: every item appears and clusters are respected") {
  PlantedConfig cfg;
  const auto ds = make_planted_dataset(cfg);
  CHECK(ds.n_users() == 50);
  CHECK(ds.n_items() == 40);
  // Without noise every interaction stays inside the user's cluster. Tokens
  // carry the planted indices.
  for (std::size_t u = 0; u < ds.n_users(); ++u) {
    const std::size_t pu = std::stoul(ds.user_tokens()[u].substr(1));
    for (const auto& it : ds.user_interactions(u)) {
      const std::size_t pi = std::stoul(ds.item_tokens()[it.item].substr(1));
      REQUIRE(planted_item_cluster(cfg, pi) == planted_user_cluster(cfg, pu));
    }
    REQUIRE(ds.test_item(u).has_value());
  }
  CHECK(make_planted_interactions(cfg) == make_planted_interactions(cfg));
  cfg.interactions_per_user = 21;
  CHECK_THROWS_AS(make_planted_interactions(cfg), UsageError);
}

}  // TEST_SUITE
