#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "triplh/model.hpp"

namespace triplh {

struct AdamWConfig {
  double learning_rate = 1e-3;
  double weight_decay = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
  bool operator==(const AdamWConfig&) const = default;
};

/// One decoupled-weight-decay Adam update of `params` in place:
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2,
///   p <- p - lr (m_hat / (sqrt(v_hat) + eps) + wd p)
/// with bias corrections taken at `step` (1-based).
void adamw_update(std::span<double> params, std::span<const double> grads,
                  std::span<double> first_moment, std::span<double> second_moment,
                  std::uint64_t step, const AdamWConfig& cfg, double weight_decay);

/// Sparse AdamW over an EmbeddingTable: only rows present in the gradient
/// buffer are read or written. The margin scalars always step with zero
/// weight decay.
class AdamW {
 public:
  AdamW(const AdamWConfig& cfg, std::size_t n_users, std::size_t n_items, std::size_t dim);

  /// Throws TrainingError, leaving table and state untouched, if any gradient
  /// entry is non-finite.
  void step(EmbeddingTable& table, const GradientBuffer& grads);

  std::uint64_t step_count() const noexcept { return step_; }
  const AdamWConfig& config() const noexcept { return cfg_; }
  std::span<const double> user_first_moment() const noexcept { return m_users_; }
  std::span<const double> item_first_moment() const noexcept { return m_items_; }
  std::span<const double> user_second_moment() const noexcept { return v_users_; }
  std::span<const double> item_second_moment() const noexcept { return v_items_; }

 private:
  AdamWConfig cfg_;
  std::size_t dim_;
  std::uint64_t step_ = 0;
  std::vector<double> m_users_, v_users_;
  std::vector<double> m_items_, v_items_;
  double m_margin_[2] = {0.0, 0.0};
  double v_margin_[2] = {0.0, 0.0};
};

}  // namespace triplh
