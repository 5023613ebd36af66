#include "triplh/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <string>

#include "triplh/error.hpp"
#include "triplh/geometry.hpp"
#include "triplh/rng.hpp"
#include "scoring.hpp"

namespace triplh {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::TriplH: return "TriplH";
    case ModelKind::TriplE: return "TriplE";
    case ModelKind::BPR: return "BPR";
    case ModelKind::MF: return "MF";
    case ModelKind::LorentzFM: return "LorentzFM";
    case ModelKind::HyperBPR: return "HyperBPR";
  }
  return "?";
}

std::string valid_model_kinds() {
  std::string out;
  for (ModelKind k : kAllModelKinds) {
    if (!out.empty()) out += ", ";
    out += to_string(k);
  }
  return out;
}

ModelKind parse_model_kind(std::string_view name) {
  auto lower = [](std::string_view s) {
    std::string r(s);
    std::ranges::transform(r, r.begin(), [](unsigned char c) { return std::tolower(c); });
    return r;
  };
  const std::string wanted = lower(name);
  for (ModelKind k : kAllModelKinds) {
    if (lower(to_string(k)) == wanted) return k;
  }
  throw UsageError("unknown model kind '" + std::string(name) + "'; valid kinds: " +
                   valid_model_kinds());
}

bool uses_lorentz_score(ModelKind kind) {
  return kind == ModelKind::TriplH || kind == ModelKind::LorentzFM;
}

bool uses_margin(ModelKind kind) { return kind == ModelKind::TriplH || kind == ModelKind::TriplE; }

void ModelConfig::validate() const {
  if (dim < 1) throw UsageError("dim must be at least 1");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw UsageError("lambda must be >= 0");
  if (!(init_scale >= 0.0) || !std::isfinite(init_scale)) {
    throw UsageError("init_scale must be >= 0");
  }
  Curvature{beta};
  if (uses_lorentz_score(kind) && beta != 1.0) {
    throw UsageError(std::string(to_string(kind)) +
                     " scores on the beta = 1 hyperboloid; beta must be 1");
  }
}

EmbeddingTable::EmbeddingTable(std::size_t n_users, std::size_t n_items, std::size_t dim)
    : n_users_(n_users),
      n_items_(n_items),
      dim_(dim),
      users_(n_users * dim, 0.0),
      items_(n_items * dim, 0.0) {}

bool EmbeddingTable::all_finite() const {
  auto finite = [](double v) { return std::isfinite(v); };
  return std::ranges::all_of(users_, finite) && std::ranges::all_of(items_, finite) &&
         std::isfinite(margin_a) && std::isfinite(margin_b);
}

void TripletBatch::clear() {
  users.clear();
  positives.clear();
  negatives.clear();
}

void TripletBatch::push(std::uint32_t user, std::uint32_t positive, std::uint32_t negative) {
  users.push_back(user);
  positives.push_back(positive);
  negatives.push_back(negative);
}

GradientBuffer::GradientBuffer(std::size_t n_users, std::size_t n_items, std::size_t dim)
    : n_users_(n_users),
      n_items_(n_items),
      dim_(dim),
      users_(n_users * dim, 0.0),
      items_(n_items * dim, 0.0),
      user_mark_(n_users, 0),
      item_mark_(n_items, 0) {}

std::span<double> GradientBuffer::user_row(std::uint32_t u) {
  if (!user_mark_[u]) {
    user_mark_[u] = 1;
    touched_users_.push_back(u);
  }
  return {users_.data() + std::size_t{u} * dim_, dim_};
}

std::span<double> GradientBuffer::item_row(std::uint32_t i) {
  if (!item_mark_[i]) {
    item_mark_[i] = 1;
    touched_items_.push_back(i);
  }
  return {items_.data() + std::size_t{i} * dim_, dim_};
}

void GradientBuffer::clear() {
  for (std::uint32_t u : touched_users_) {
    std::fill_n(users_.begin() + std::size_t{u} * dim_, dim_, 0.0);
    user_mark_[u] = 0;
  }
  for (std::uint32_t i : touched_items_) {
    std::fill_n(items_.begin() + std::size_t{i} * dim_, dim_, 0.0);
    item_mark_[i] = 0;
  }
  touched_users_.clear();
  touched_items_.clear();
  margin_a = 0.0;
  margin_b = 0.0;
}

void GradientBuffer::scale(double factor) {
  for (std::uint32_t u : touched_users_) {
    for (double& g : user_row(u)) g *= factor;
  }
  for (std::uint32_t i : touched_items_) {
    for (double& g : item_row(i)) g *= factor;
  }
  margin_a *= factor;
  margin_b *= factor;
}

bool GradientBuffer::all_finite() const {
  auto finite = [](double v) { return std::isfinite(v); };
  for (std::uint32_t u : touched_users_) {
    if (!std::ranges::all_of(user_row(u), finite)) return false;
  }
  for (std::uint32_t i : touched_items_) {
    if (!std::ranges::all_of(item_row(i), finite)) return false;
  }
  return std::isfinite(margin_a) && std::isfinite(margin_b);
}

EmbeddingTable init_table(const ModelConfig& cfg, std::size_t n_users, std::size_t n_items,
                          std::uint64_t seed) {
  cfg.validate();
  if (n_users == 0 || n_items == 0) throw UsageError("init_table: counts must be positive");
  EmbeddingTable table(n_users, n_items, cfg.dim);
  if (cfg.init_scale > 0.0) {
    Rng rng(seed);
    // Box-Muller over our own uniform draws so tables match across toolchains.
    auto fill = [&](std::span<double> data) {
      for (std::size_t i = 0; i < data.size(); i += 2) {
        const double u1 = 1.0 - uniform_unit(rng);
        const double u2 = uniform_unit(rng);
        const double r = std::sqrt(-2.0 * std::log(u1)) * cfg.init_scale;
        data[i] = r * std::cos(2.0 * std::numbers::pi * u2);
        if (i + 1 < data.size()) data[i + 1] = r * std::sin(2.0 * std::numbers::pi * u2);
      }
    };
    fill(table.user_data());
    fill(table.item_data());
  }
  table.margin_a = 1.0;
  table.margin_b = 0.0;
  return table;
}

namespace {

// Value of a pair score S(x, y) between ambient vectors together with its
// gradient in factored form:
//   dS/dx = ax * x + bx * y,   dS/dy = ay * y + by * x.
struct PairTerms {
  double value = 0.0;
  double ax = 0.0, bx = 0.0;
  double ay = 0.0, by = 0.0;
};

PairTerms dot_pair(std::span<const double> x, std::span<const double> y) {
  return {kernels::dot(x, y), 0.0, 1.0, 0.0, 1.0};
}

PairTerms lorentz_pair(std::span<const double> x, std::span<const double> y) {
  const double u0 = kernels::lift_x0(kernels::squared_norm(x), 1.0);
  const double v0 = kernels::lift_x0(kernels::squared_norm(y), 1.0);
  const double xy = kernels::dot(x, y);
  // Numerator of the score after substituting the three squared distances.
  const double num = 1.0 + u0 * v0 - xy - u0 - v0;
  const double den = u0 * v0;
  PairTerms t;
  t.value = kernels::lorentz_score(u0, v0, xy);
  t.bx = -1.0 / den;
  t.by = t.bx;
  t.ax = (v0 - 1.0) / (u0 * u0 * v0) - num / (u0 * u0 * u0 * v0);
  t.ay = (u0 - 1.0) / (v0 * v0 * u0) - num / (v0 * v0 * v0 * u0);
  return t;
}

// S = -d_P(clip(x), clip(y)).
PairTerms poincare_pair(std::span<const double> x, std::span<const double> y) {
  const double x_sq = kernels::squared_norm(x);
  const double y_sq = kernels::squared_norm(y);
  const double xy = kernels::dot(x, y);
  const double sx = kernels::poincare_clip_scale(x_sq);
  const double sy = kernels::poincare_clip_scale(y_sq);
  const double cx_sq = sx * sx * x_sq;
  const double cy_sq = sy * sy * y_sq;
  const double diff_sq = std::max(0.0, cx_sq + cy_sq - 2.0 * sx * sy * xy);
  const double alpha = 1.0 - cx_sq;
  const double gamma = 1.0 - cy_sq;
  const double t = 1.0 + 2.0 * diff_sq / (alpha * gamma);

  PairTerms out;
  out.value = detail::poincare_neg_distance(sx, cx_sq, sy, cy_sq, xy);
  const double root = std::sqrt(std::max(0.0, t * t - 1.0));
  if (root < 1e-12) return out;  // coincident points: zero subgradient

  // Gradient w.r.t. the clipped points, in the factored form.
  const double k = -1.0 / root;
  const double a_cx = k * (4.0 / (alpha * gamma) + 4.0 * diff_sq / (alpha * alpha * gamma));
  const double b_cx = k * (-4.0 / (alpha * gamma));
  const double a_cy = k * (4.0 / (alpha * gamma) + 4.0 * diff_sq / (alpha * gamma * gamma));
  const double b_cy = b_cx;

  // Chain through the clip map. Unclipped: identity. Clipped: the radial
  // component is projected out, which cancels the self term.
  if (sx == 1.0) {
    out.ax = a_cx;
    out.bx = b_cx * sy;
  } else {
    out.ax = -sx * b_cx * sy * xy / x_sq;
    out.bx = sx * b_cx * sy;
  }
  if (sy == 1.0) {
    out.ay = a_cy;
    out.by = b_cy * sx;
  } else {
    out.ay = -sy * b_cy * sx * xy / y_sq;
    out.by = sy * b_cy * sx;
  }
  return out;
}

PairTerms pair_terms(ModelKind kind, std::span<const double> x, std::span<const double> y) {
  switch (kind) {
    case ModelKind::TriplH:
    case ModelKind::LorentzFM: return lorentz_pair(x, y);
    case ModelKind::HyperBPR: return poincare_pair(x, y);
    case ModelKind::TriplE:
    case ModelKind::BPR:
    case ModelKind::MF: return dot_pair(x, y);
  }
  return {};
}

// g += c * (a * self + b * other)
void axpby(std::span<double> g, double c, double a, std::span<const double> self, double b,
           std::span<const double> other) {
  const double ca = c * a;
  const double cb = c * b;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += ca * self[i] + cb * other[i];
}

void add_x_grad(std::span<double> g, double c, const PairTerms& t, std::span<const double> x,
                std::span<const double> y) {
  axpby(g, c, t.ax, x, t.bx, y);
}

void add_y_grad(std::span<double> g, double c, const PairTerms& t, std::span<const double> x,
                std::span<const double> y) {
  axpby(g, c, t.ay, y, t.by, x);
}

// softplus(z) = log(1 + e^z), overflow-safe.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_batch(const EmbeddingTable& table, const TripletBatch& batch) {
  if (batch.positives.size() != batch.users.size() || batch.negatives.size() != batch.users.size()) {
    throw UsageError("triplet batch vectors have unequal lengths");
  }
  if (batch.size() == 0) throw UsageError("empty triplet batch");
  for (std::size_t k = 0; k < batch.size(); ++k) {
    if (batch.users[k] >= table.n_users() || batch.positives[k] >= table.n_items() ||
        batch.negatives[k] >= table.n_items()) {
      throw UsageError("triplet " + std::to_string(k) + " has an out-of-range index");
    }
  }
}

void check_kind(const ModelConfig& cfg, std::initializer_list<ModelKind> allowed, const char* loss) {
  if (std::ranges::find(allowed, cfg.kind) == allowed.end()) {
    throw UsageError(std::string(loss) + " does not train " + std::string(to_string(cfg.kind)));
  }
}

}  // namespace

double score(const EmbeddingTable& table, const ModelConfig& cfg, std::size_t user,
             std::size_t item) {
  if (user >= table.n_users() || item >= table.n_items()) {
    throw UsageError("score: index out of range (user " + std::to_string(user) + ", item " +
                     std::to_string(item) + ")");
  }
  return pair_terms(cfg.kind, table.user(user), table.item(item)).value;
}

double triplet_loss(const EmbeddingTable& table, const ModelConfig& cfg, const TripletBatch& batch,
                    GradientBuffer* grads) {
  check_kind(cfg, {ModelKind::TriplH, ModelKind::TriplE}, "triplet_loss");
  check_batch(table, batch);
  const bool hyperbolic = cfg.kind == ModelKind::TriplH;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  const double a = table.margin_a;
  const double b = table.margin_b;

  double total = 0.0;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const auto u = table.user(batch.users[k]);
    const auto p = table.item(batch.positives[k]);
    const auto n = table.item(batch.negatives[k]);

    const PairTerms up = pair_terms(cfg.kind, u, p);
    const PairTerms un = pair_terms(cfg.kind, u, n);
    const PairTerms pn = pair_terms(cfg.kind, p, n);
    const double z = up.value - un.value - (a * pn.value + b);

    // Regularizer on the item pair: <lift(p), lift(n)>_L for TriplH, p.n for
    // TriplE. dR/dp = cp_self * p + cp_other * n (and symmetrically for n).
    const double pn_dot = kernels::dot(p, n);
    double inner, cp_self = 0.0, cn_self = 0.0;
    if (hyperbolic) {
      const double p0 = kernels::lift_x0(kernels::squared_norm(p), cfg.beta);
      const double n0 = kernels::lift_x0(kernels::squared_norm(n), cfg.beta);
      inner = -p0 * n0 + pn_dot;
      cp_self = -n0 / p0;
      cn_self = -p0 / n0;
    } else {
      inner = pn_dot;
    }
    total += softplus(-z) + cfg.lambda * inner * inner;

    if (grads == nullptr) continue;
    const double g = -sigmoid(-z) * inv_n;  // d(mean loss)/dz
    const double r = 2.0 * cfg.lambda * inner * inv_n;

    auto gu = grads->user_row(batch.users[k]);
    add_x_grad(gu, g, up, u, p);
    add_x_grad(gu, -g, un, u, n);

    auto gp = grads->item_row(batch.positives[k]);
    add_y_grad(gp, g, up, u, p);
    add_x_grad(gp, -g * a, pn, p, n);
    axpby(gp, r, cp_self, p, 1.0, n);

    auto gn = grads->item_row(batch.negatives[k]);
    add_y_grad(gn, -g, un, u, n);
    add_y_grad(gn, -g * a, pn, p, n);
    axpby(gn, r, cn_self, n, 1.0, p);

    grads->margin_a += -g * pn.value;
    grads->margin_b += -g;
  }
  return total * inv_n;
}

double bpr_loss(const EmbeddingTable& table, const ModelConfig& cfg, const TripletBatch& batch,
                GradientBuffer* grads) {
  check_kind(cfg, {ModelKind::BPR, ModelKind::HyperBPR}, "bpr_loss");
  check_batch(table, batch);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const auto u = table.user(batch.users[k]);
    const auto p = table.item(batch.positives[k]);
    const auto n = table.item(batch.negatives[k]);
    const PairTerms up = pair_terms(cfg.kind, u, p);
    const PairTerms un = pair_terms(cfg.kind, u, n);
    const double z = up.value - un.value;
    total += softplus(-z);
    if (grads == nullptr) continue;
    const double g = -sigmoid(-z) * inv_n;
    auto gu = grads->user_row(batch.users[k]);
    add_x_grad(gu, g, up, u, p);
    add_x_grad(gu, -g, un, u, n);
    add_y_grad(grads->item_row(batch.positives[k]), g, up, u, p);
    add_y_grad(grads->item_row(batch.negatives[k]), -g, un, u, n);
  }
  return total * inv_n;
}

double pointwise_loss(const EmbeddingTable& table, const ModelConfig& cfg,
                      const TripletBatch& batch, GradientBuffer* grads) {
  check_kind(cfg, {ModelKind::MF, ModelKind::LorentzFM}, "pointwise_loss");
  check_batch(table, batch);
  const double inv_n = 1.0 / (2.0 * static_cast<double>(batch.size()));
  double total = 0.0;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const auto u = table.user(batch.users[k]);
    const auto p = table.item(batch.positives[k]);
    const auto n = table.item(batch.negatives[k]);
    const PairTerms up = pair_terms(cfg.kind, u, p);
    const PairTerms un = pair_terms(cfg.kind, u, n);
    total += softplus(-up.value) + softplus(un.value);
    if (grads == nullptr) continue;
    const double gp = -sigmoid(-up.value) * inv_n;
    const double gn = sigmoid(un.value) * inv_n;
    auto gu = grads->user_row(batch.users[k]);
    add_x_grad(gu, gp, up, u, p);
    add_x_grad(gu, gn, un, u, n);
    add_y_grad(grads->item_row(batch.positives[k]), gp, up, u, p);
    add_y_grad(grads->item_row(batch.negatives[k]), gn, un, u, n);
  }
  return total * inv_n;
}

double model_loss(const EmbeddingTable& table, const ModelConfig& cfg, const TripletBatch& batch,
                  GradientBuffer* grads) {
  switch (cfg.kind) {
    case ModelKind::TriplH:
    case ModelKind::TriplE: return triplet_loss(table, cfg, batch, grads);
    case ModelKind::BPR:
    case ModelKind::HyperBPR: return bpr_loss(table, cfg, batch, grads);
    case ModelKind::MF:
    case ModelKind::LorentzFM: return pointwise_loss(table, cfg, batch, grads);
  }
  throw UsageError("unknown model kind");
}

}  // namespace triplh
