#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace triplh {

struct RawInteraction {
  std::string user_token;
  std::string item_token;
  std::optional<double> rating;
  std::int64_t timestamp = 0;

  bool operator==(const RawInteraction&) const = default;
};

/// Reads "UserID::MovieID::Rating::Timestamp" lines. Any malformed line aborts
/// the load with a DataError naming its line number.
std::vector<RawInteraction> load_movielens(const std::string& path);

/// Reads "user,item,rating,timestamp" rows. A first row whose timestamp field
/// is not an integer is taken as a header and skipped; the rating field may
/// be empty.
std::vector<RawInteraction> load_amazon_csv(const std::string& path);

enum class Split : std::uint8_t { Train = 0, Validation = 1, Test = 2 };

struct Interaction {
  std::uint32_t user = 0;
  std::uint32_t item = 0;
  std::int64_t timestamp = 0;
  Split split = Split::Train;

  bool operator==(const Interaction&) const = default;
};

struct DatasetStats {
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  std::size_t n_actions = 0;
  std::size_t n_train = 0;
  std::size_t n_validation = 0;
  std::size_t n_test = 0;
  double avg_length = 0.0;        // actions per user, before the split
  double avg_train_length = 0.0;  // train interactions per user
};

/// Immutable implicit-feedback dataset with a chronological leave-last-out
/// split. Interactions are grouped by user (ascending) and time-ordered within
/// each user.
class InteractionDataset {
 public:
  /// Validates ordering, index ranges and the per-user split layout, then
  /// derives the lookup structures.
  InteractionDataset(std::size_t n_users, std::size_t n_items,
                     std::vector<Interaction> interactions, std::vector<std::string> user_tokens,
                     std::vector<std::string> item_tokens);

  std::size_t n_users() const noexcept { return n_users_; }
  std::size_t n_items() const noexcept { return n_items_; }
  std::span<const Interaction> interactions() const noexcept { return interactions_; }
  std::span<const Interaction> user_interactions(std::size_t user) const;

  /// Sorted, de-duplicated train items of a user.
  std::span<const std::uint32_t> train_items(std::size_t user) const;
  bool is_train_item(std::size_t user, std::uint32_t item) const;
  /// Sorted items the user touched in any split.
  std::span<const std::uint32_t> all_items(std::size_t user) const;

  std::optional<std::uint32_t> test_item(std::size_t user) const;
  std::optional<std::uint32_t> validation_item(std::size_t user) const;

  /// Per-item interaction counts over the train split only.
  std::span<const std::uint32_t> item_popularity() const noexcept { return popularity_; }

  const std::vector<std::string>& user_tokens() const noexcept { return user_tokens_; }
  const std::vector<std::string>& item_tokens() const noexcept { return item_tokens_; }

  /// Indices into interactions() of every train interaction, in storage order.
  std::span<const std::size_t> train_indices() const noexcept { return train_indices_; }

  DatasetStats stats() const;

  bool operator==(const InteractionDataset& other) const;

 private:
  std::size_t n_users_;
  std::size_t n_items_;
  std::vector<Interaction> interactions_;
  std::vector<std::string> user_tokens_;
  std::vector<std::string> item_tokens_;

  std::vector<std::size_t> user_offsets_;
  std::vector<std::size_t> train_offsets_;
  std::vector<std::uint32_t> train_items_;
  std::vector<std::size_t> all_offsets_;
  std::vector<std::uint32_t> all_items_;
  std::vector<std::uint32_t> popularity_;
  std::vector<std::size_t> train_indices_;
  std::vector<std::int64_t> test_item_;        // -1 if none
  std::vector<std::int64_t> validation_item_;  // -1 if none
};

struct BuildReport {
  std::size_t input_records = 0;
  std::size_t filtered_by_rating = 0;
  std::size_t duplicates_removed = 0;
  /// Users present in the input whose every record was filtered out.
  std::size_t dropped_users = 0;
};

/// Every record is an implicit positive unless `min_rating` is given, in
/// which case records rated below it (or unrated) are dropped. Repeated
/// (user, item) pairs keep their earliest timestamp. Each user's history is
/// sorted by time with ties in input order; with three or more interactions
/// the last becomes test and the one before it validation. IDs are assigned
/// in order of first appearance.
InteractionDataset build_dataset(std::span<const RawInteraction> raw,
                                 std::optional<double> min_rating = std::nullopt,
                                 BuildReport* report = nullptr);

// Split container:
//   "TRPLDS1\0" | u32 version | u32 n_users | u32 n_items | u64 n_interactions
//   | n x (u32 user, u32 item, i64 timestamp) | n x u8 split tag
//   | u64 json length | JSON {"users": [...], "items": [...]} | u32 CRC-32
// All integers little-endian; the CRC covers every preceding byte.
inline constexpr std::uint32_t kSplitFormatVersion = 1;

std::vector<std::uint8_t> encode_split(const InteractionDataset& dataset);
InteractionDataset decode_split(std::span<const std::uint8_t> bytes);
void save_split(const InteractionDataset& dataset, const std::string& path);
InteractionDataset load_split(const std::string& path);

/// Synthetic users in disjoint clusters, each cluster preferring its own
/// slice of the catalog. With `noise` > 0 a fraction of each user's picks is
/// drawn from the whole catalog instead.
struct PlantedConfig {
  std::size_t n_users = 50;
  std::size_t n_items = 40;
  std::size_t n_clusters = 2;
  std::size_t interactions_per_user = 12;
  double noise = 0.0;
  std::uint64_t seed = 7;
};

/// Raw records with tokens "u<k>" / "i<k>" and timestamps in random order;
/// every item appears at least once.
std::vector<RawInteraction> make_planted_interactions(const PlantedConfig& cfg);
InteractionDataset make_planted_dataset(const PlantedConfig& cfg);
/// Cluster of a planted user or item token index.
std::size_t planted_user_cluster(const PlantedConfig& cfg, std::size_t user_index);
std::size_t planted_item_cluster(const PlantedConfig& cfg, std::size_t item_index);

}  // namespace triplh
