#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace triplh {

enum class ModelKind { TriplH, TriplE, BPR, MF, LorentzFM, HyperBPR };

inline constexpr std::array<ModelKind, 6> kAllModelKinds = {
    ModelKind::TriplH, ModelKind::TriplE,    ModelKind::BPR,
    ModelKind::MF,     ModelKind::LorentzFM, ModelKind::HyperBPR};

std::string_view to_string(ModelKind kind);
/// Case-insensitive; throws UsageError listing the valid names otherwise.
ModelKind parse_model_kind(std::string_view name);
std::string valid_model_kinds();

/// Scores through the LorentzFM score of lifted points.
bool uses_lorentz_score(ModelKind kind);
/// Trains the adaptive margin parameters a, b.
bool uses_margin(ModelKind kind);

struct ModelConfig {
  ModelKind kind = ModelKind::TriplH;
  std::size_t dim = 64;
  double beta = 1.0;
  double lambda = 0.0;
  double init_scale = 0.01;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

/// Dense user and item parameters in ambient R^d plus the two shared margin
/// scalars of f(x) = a x + b.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t n_users, std::size_t n_items, std::size_t dim);

  std::size_t n_users() const noexcept { return n_users_; }
  std::size_t n_items() const noexcept { return n_items_; }
  std::size_t dim() const noexcept { return dim_; }

  std::span<double> user(std::size_t u) { return {users_.data() + u * dim_, dim_}; }
  std::span<const double> user(std::size_t u) const { return {users_.data() + u * dim_, dim_}; }
  std::span<double> item(std::size_t i) { return {items_.data() + i * dim_, dim_}; }
  std::span<const double> item(std::size_t i) const { return {items_.data() + i * dim_, dim_}; }

  std::span<double> user_data() noexcept { return users_; }
  std::span<const double> user_data() const noexcept { return users_; }
  std::span<double> item_data() noexcept { return items_; }
  std::span<const double> item_data() const noexcept { return items_; }

  bool all_finite() const;
  bool operator==(const EmbeddingTable&) const = default;

  double margin_a = 1.0;
  double margin_b = 0.0;

 private:
  std::size_t n_users_ = 0;
  std::size_t n_items_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> users_;
  std::vector<double> items_;
};

struct TripletBatch {
  std::vector<std::uint32_t> users;
  std::vector<std::uint32_t> positives;
  std::vector<std::uint32_t> negatives;

  std::size_t size() const noexcept { return users.size(); }
  void clear();
  void push(std::uint32_t user, std::uint32_t positive, std::uint32_t negative);
};

/// Gradient accumulator congruent to an EmbeddingTable. Rows are tracked as
/// they are first written so clearing and the sparse optimizer step only
/// visit touched rows; touched-row lists keep first-touch order.
class GradientBuffer {
 public:
  GradientBuffer(std::size_t n_users, std::size_t n_items, std::size_t dim);

  std::span<double> user_row(std::uint32_t u);
  std::span<double> item_row(std::uint32_t i);
  std::span<const double> user_row(std::uint32_t u) const { return {users_.data() + u * dim_, dim_}; }
  std::span<const double> item_row(std::uint32_t i) const { return {items_.data() + i * dim_, dim_}; }

  const std::vector<std::uint32_t>& touched_users() const noexcept { return touched_users_; }
  const std::vector<std::uint32_t>& touched_items() const noexcept { return touched_items_; }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t n_users() const noexcept { return n_users_; }
  std::size_t n_items() const noexcept { return n_items_; }

  void clear();
  void scale(double factor);
  bool all_finite() const;

  double margin_a = 0.0;
  double margin_b = 0.0;

 private:
  std::size_t n_users_;
  std::size_t n_items_;
  std::size_t dim_;
  std::vector<double> users_;
  std::vector<double> items_;
  std::vector<std::uint8_t> user_mark_;
  std::vector<std::uint8_t> item_mark_;
  std::vector<std::uint32_t> touched_users_;
  std::vector<std::uint32_t> touched_items_;
};

/// i.i.d. N(0, init_scale^2) entries; a = 1, b = 0.
EmbeddingTable init_table(const ModelConfig& cfg, std::size_t n_users, std::size_t n_items,
                          std::uint64_t seed);

/// Relevance of `item` for `user`; larger is more relevant for every kind.
double score(const EmbeddingTable& table, const ModelConfig& cfg, std::size_t user,
             std::size_t item);

// Losses return the batch mean. When `grads` is non-null the gradient of that
// mean is added into it.

/// -log sigmoid(S(u,v+) - S(u,v-) - (a S(v+,v-) + b)) + lambda <v+,v->^2.
/// TriplH uses the Lorentz score and Lorentzian product of lifted items;
/// TriplE uses dot products for both.
double triplet_loss(const EmbeddingTable& table, const ModelConfig& cfg, const TripletBatch& batch,
                    GradientBuffer* grads = nullptr);

/// -log sigmoid(S(u,v+) - S(u,v-)); BPR (dot) or HyperBPR (negative
/// Poincare distance).
double bpr_loss(const EmbeddingTable& table, const ModelConfig& cfg, const TripletBatch& batch,
                GradientBuffer* grads = nullptr);

/// Binary cross-entropy with the positive labelled 1 and the negative 0,
/// averaged over all 2 * batch.size() labelled pairs. MF or LorentzFM.
double pointwise_loss(const EmbeddingTable& table, const ModelConfig& cfg,
                      const TripletBatch& batch, GradientBuffer* grads = nullptr);

/// Dispatches to the loss that trains `cfg.kind`.
double model_loss(const EmbeddingTable& table, const ModelConfig& cfg, const TripletBatch& batch,
                  GradientBuffer* grads = nullptr);

// Checkpoint file: "TRPLH1\0\0", u32 n_users, u32 n_items, u32 dim (all
// little-endian), users then items as row-major f64, margin_a, margin_b, then
// a JSON object with the ModelConfig running to end of file.
struct Checkpoint {
  EmbeddingTable table;
  ModelConfig config;
};

void save_checkpoint(const std::string& path, const EmbeddingTable& table, const ModelConfig& cfg);
std::vector<std::uint8_t> encode_checkpoint(const EmbeddingTable& table, const ModelConfig& cfg);
Checkpoint load_checkpoint(const std::string& path);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

}  // namespace triplh
