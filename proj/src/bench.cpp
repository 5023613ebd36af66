#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <string>

#include "triplh/error.hpp"
#include "triplh/eval.hpp"
#include "triplh/geometry.hpp"
#include "triplh/rng.hpp"

namespace triplh {

namespace {

using Clock = std::chrono::steady_clock;

// Smallest observable step of the clock, in nanoseconds.
double clock_granularity_ns() {
  double best = 1e18;
  for (int trial = 0; trial < 20; ++trial) {
    const auto t0 = Clock::now();
    auto t1 = Clock::now();
    while (t1 == t0) t1 = Clock::now();
    best = std::min(best, std::chrono::duration<double, std::nano>(t1 - t0).count());
  }
  return best;
}

LatencyStats summarize(std::vector<double> per_pair_ns) {
  LatencyStats s;
  for (double v : per_pair_ns) s.mean_ns += v;
  s.mean_ns /= static_cast<double>(per_pair_ns.size());
  std::ranges::sort(per_pair_ns);
  const auto idx = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(per_pair_ns.size()))) - 1;
  s.p95_ns = per_pair_ns[std::min(idx, per_pair_ns.size() - 1)];
  return s;
}

}  // namespace

BenchResult latency_bench(std::size_t dim, std::size_t n_pairs, std::size_t repetitions,
                          std::uint64_t seed) {
  if (dim == 0) throw UsageError("bench: dim must be at least 1");
  if (n_pairs == 0) throw UsageError("bench: pairs must be at least 1");
  if (repetitions == 0) throw UsageError("bench: repetitions must be at least 1");

  // Score a users x items grid: items stay cache-resident as they would when
  // ranking a catalog for a stream of users.
  const std::size_t n_items = std::min<std::size_t>(n_pairs, 1024);
  const std::size_t n_users = (n_pairs + n_items - 1) / n_items;

  Rng rng(seed);
  const double sigma = 0.5 / std::sqrt(static_cast<double>(dim));
  auto gaussian = [&] {
    const double u1 = 1.0 - uniform_unit(rng);
    const double u2 = uniform_unit(rng);
    return sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  };
  std::vector<double> users(n_users * dim), items(n_items * dim);
  for (double& v : users) v = gaussian();
  for (double& v : items) v = gaussian();

  // Lorentz inputs: lifted points (zeroth components cached).
  // Poincare inputs: the same vectors clipped into the ball, norms cached.
  std::vector<double> user_x0(n_users), item_x0(n_items);
  std::vector<double> p_users = users, p_items = items;
  std::vector<double> user_sq(n_users), item_sq(n_items);
  auto prepare = [dim](std::span<double> flat, std::span<double> x0, std::span<double> pflat,
                       std::span<double> psq) {
    for (std::size_t r = 0; r < x0.size(); ++r) {
      const auto row = flat.subspan(r * dim, dim);
      const double sq = kernels::squared_norm(row);
      x0[r] = kernels::lift_x0(sq, 1.0);
      const double s = kernels::poincare_clip_scale(sq);
      auto prow = pflat.subspan(r * dim, dim);
      for (double& v : prow) v *= s;
      psq[r] = kernels::squared_norm(prow);
    }
  };
  prepare(users, user_x0, p_users, user_sq);
  prepare(items, item_x0, p_items, item_sq);

  auto run_lorentz = [&] {
    double acc = 0.0;
    for (std::size_t u = 0; u < n_users; ++u) {
      const std::span<const double> ur(users.data() + u * dim, dim);
      const double u0 = user_x0[u];
      for (std::size_t i = 0; i < n_items; ++i) {
        acc += kernels::lorentz_score(u0, item_x0[i],
                                      kernels::dot(ur, {items.data() + i * dim, dim}));
      }
    }
    return acc;
  };
  auto run_poincare = [&] {
    double acc = 0.0;
    for (std::size_t u = 0; u < n_users; ++u) {
      const std::span<const double> ur(p_users.data() + u * dim, dim);
      const double usq = user_sq[u];
      for (std::size_t i = 0; i < n_items; ++i) {
        acc += kernels::poincare_distance(
            usq, item_sq[i], kernels::squared_diff_norm(ur, {p_items.data() + i * dim, dim}));
      }
    }
    return acc;
  };

  BenchResult result;
  result.dim = dim;
  result.n_pairs = n_users * n_items;
  result.repetitions = repetitions;

  const double granularity = clock_granularity_ns();
  const double pairs = static_cast<double>(result.n_pairs);
  std::vector<double> lorentz_ns, poincare_ns;
  double checksum = run_lorentz() + run_poincare();  // warm-up
  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    auto t0 = Clock::now();
    checksum += run_lorentz();
    auto t1 = Clock::now();
    const double l = std::chrono::duration<double, std::nano>(t1 - t0).count();
    t0 = Clock::now();
    checksum += run_poincare();
    t1 = Clock::now();
    const double p = std::chrono::duration<double, std::nano>(t1 - t0).count();
    if (std::min(l, p) < 1000.0 * granularity) {
      throw UsageError("bench: " + std::to_string(result.n_pairs) +
                       " pairs run too briefly for the clock (granularity " +
                       std::to_string(granularity) + " ns); use a larger --pairs");
    }
    lorentz_ns.push_back(l / pairs);
    poincare_ns.push_back(p / pairs);
  }
  result.lorentz = summarize(std::move(lorentz_ns));
  result.poincare = summarize(std::move(poincare_ns));
  result.ratio = result.poincare.mean_ns / result.lorentz.mean_ns;
  result.checksum = checksum;
  return result;
}

}  // namespace triplh
