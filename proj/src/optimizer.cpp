#include "triplh/optimizer.hpp"

#include <cmath>
#include <string>

#include "triplh/error.hpp"

namespace triplh {

void AdamWConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw UsageError("learning_rate must be positive");
  }
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
    throw UsageError("weight_decay must be >= 0");
  }
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    throw UsageError("adam betas must lie in (0, 1)");
  }
  if (!(epsilon > 0.0)) throw UsageError("epsilon must be positive");
}

void adamw_update(std::span<double> params, std::span<const double> grads,
                  std::span<double> first_moment, std::span<double> second_moment,
                  std::uint64_t step, const AdamWConfig& cfg, double weight_decay) {
  const double t = static_cast<double>(step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    first_moment[i] = cfg.beta1 * first_moment[i] + (1.0 - cfg.beta1) * g;
    second_moment[i] = cfg.beta2 * second_moment[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = first_moment[i] / bc1;
    const double v_hat = second_moment[i] / bc2;
    params[i] -= cfg.learning_rate * (m_hat / (std::sqrt(v_hat) + cfg.epsilon) +
                                      weight_decay * params[i]);
  }
}

AdamW::AdamW(const AdamWConfig& cfg, std::size_t n_users, std::size_t n_items, std::size_t dim)
    : cfg_(cfg),
      dim_(dim),
      m_users_(n_users * dim, 0.0),
      v_users_(n_users * dim, 0.0),
      m_items_(n_items * dim, 0.0),
      v_items_(n_items * dim, 0.0) {
  cfg_.validate();
}

void AdamW::step(EmbeddingTable& table, const GradientBuffer& grads) {
  if (table.dim() != dim_ || grads.dim() != dim_ || table.n_users() * dim_ != m_users_.size() ||
      table.n_items() * dim_ != m_items_.size() || grads.n_users() != table.n_users() ||
      grads.n_items() != table.n_items()) {
    throw UsageError("AdamW::step: parameter, gradient and moment shapes differ");
  }
  if (!grads.all_finite()) {
    std::string where;
    for (std::uint32_t u : grads.touched_users()) {
      for (double g : grads.user_row(u)) {
        if (!std::isfinite(g)) {
          where = "user row " + std::to_string(u);
          break;
        }
      }
      if (!where.empty()) break;
    }
    if (where.empty()) {
      for (std::uint32_t i : grads.touched_items()) {
        for (double g : grads.item_row(i)) {
          if (!std::isfinite(g)) {
            where = "item row " + std::to_string(i);
            break;
          }
        }
        if (!where.empty()) break;
      }
    }
    if (where.empty()) where = "margin parameters";
    throw TrainingError("non-finite gradient in " + where + " at step " +
                        std::to_string(step_ + 1) + "; step aborted");
  }

  ++step_;
  for (std::uint32_t u : grads.touched_users()) {
    const std::size_t off = std::size_t{u} * dim_;
    adamw_update(table.user(u), grads.user_row(u), std::span(m_users_).subspan(off, dim_),
                 std::span(v_users_).subspan(off, dim_), step_, cfg_, cfg_.weight_decay);
  }
  for (std::uint32_t i : grads.touched_items()) {
    const std::size_t off = std::size_t{i} * dim_;
    adamw_update(table.item(i), grads.item_row(i), std::span(m_items_).subspan(off, dim_),
                 std::span(v_items_).subspan(off, dim_), step_, cfg_, cfg_.weight_decay);
  }
  double margins[2] = {table.margin_a, table.margin_b};
  const double margin_grads[2] = {grads.margin_a, grads.margin_b};
  adamw_update(margins, margin_grads, m_margin_, v_margin_, step_, cfg_, 0.0);
  table.margin_a = margins[0];
  table.margin_b = margins[1];
}

}  // namespace triplh
