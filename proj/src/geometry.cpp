#include "triplh/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "triplh/error.hpp"

namespace triplh {

namespace {

void require_same_dim(std::size_t a, std::size_t b) {
  if (a != b) {
    throw UsageError("dimension mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

}  // namespace

Curvature::Curvature(double beta) : beta_(beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw UsageError("curvature beta must be positive and finite, got " + std::to_string(beta));
  }
}

namespace kernels {

// Four independent accumulators: keeps the reduction throughput-bound instead
// of latency-bound without relying on -ffast-math reassociation.
double dot(std::span<const double> a, std::span<const double> b) noexcept {
  const std::size_t n = a.size();
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

double squared_norm(std::span<const double> a) noexcept { return dot(a, a); }

double squared_diff_norm(std::span<const double> a, std::span<const double> b) noexcept {
  const std::size_t n = a.size();
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const double d0 = a[i] - b[i];
    const double d1 = a[i + 1] - b[i + 1];
    const double d2 = a[i + 2] - b[i + 2];
    const double d3 = a[i + 3] - b[i + 3];
    s0 += d0 * d0;
    s1 += d1 * d1;
    s2 += d2 * d2;
    s3 += d3 * d3;
  }
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s0 += d * d;
  }
  return (s0 + s1) + (s2 + s3);
}

double poincare_distance(double x_sq, double y_sq, double diff_sq) noexcept {
  const double arg = 1.0 + 2.0 * diff_sq / ((1.0 - x_sq) * (1.0 - y_sq));
  return std::acosh(std::max(1.0, arg));
}

double poincare_clip_scale(double sq_norm) noexcept {
  constexpr double max_sq = kPoincareMaxNorm * kPoincareMaxNorm;
  if (sq_norm <= max_sq) return 1.0;
  return kPoincareMaxNorm / std::sqrt(sq_norm);
}

}  // namespace kernels

PoincarePoint PoincarePoint::clip(std::span<const double> x) {
  std::vector<double> coords(x.begin(), x.end());
  for (double v : coords) {
    if (!std::isfinite(v)) throw UsageError("non-finite coordinate in Poincare point");
  }
  const double sq = kernels::squared_norm(coords);
  const double scale = kernels::poincare_clip_scale(sq);
  if (scale != 1.0) {
    for (double& v : coords) v *= scale;
  }
  return PoincarePoint(std::move(coords), kernels::squared_norm(coords));
}

double lorentz_inner(const HyperPoint& u, const HyperPoint& v) {
  require_same_dim(u.dim(), v.dim());
  return -u.x0() * v.x0() + kernels::dot(u.spatial(), v.spatial());
}

HyperPoint lift(std::span<const double> x, Curvature c) {
  std::vector<double> coords(x.size() + 1);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) {
      throw UsageError("lift: non-finite ambient coordinate at index " + std::to_string(i));
    }
    coords[i + 1] = x[i];
  }
  coords[0] = kernels::lift_x0(kernels::squared_norm(x), c.value());
  return HyperPoint(std::move(coords), c);
}

double geodesic_distance(const HyperPoint& u, const HyperPoint& v) {
  // -<u,v>_L = beta + d2/2 on the hyperboloid; going through d2 makes u == v
  // land exactly on the clamp.
  const double arg = u.curvature().value() + 0.5 * squared_lorentz_distance(u, v);
  return std::acosh(std::max(1.0, arg));
}

double squared_lorentz_distance(const HyperPoint& u, const HyperPoint& v) {
  if (u.curvature() != v.curvature()) {
    throw UsageError("squared_lorentz_distance: points live on different hyperboloids");
  }
  require_same_dim(u.dim(), v.dim());
  // Equal to -2 beta - 2 <u,v>_L on the hyperboloid, but written as the
  // self-product of u - v: exactly zero for coincident points and free of the
  // cancellation between beta and <u,v>_L.
  const double dx0 = u.x0() - v.x0();
  return std::max(0.0, kernels::squared_diff_norm(u.spatial(), v.spatial()) - dx0 * dx0);
}

double lorentz_score(const HyperPoint& u, const HyperPoint& v) {
  if (u.curvature().value() != 1.0 || v.curvature().value() != 1.0) {
    throw UsageError("lorentz_score requires points on the beta = 1 hyperboloid");
  }
  require_same_dim(u.dim(), v.dim());
  return kernels::lorentz_score(u.x0(), v.x0(), kernels::dot(u.spatial(), v.spatial()));
}

double poincare_distance(const PoincarePoint& x, const PoincarePoint& y) {
  require_same_dim(x.dim(), y.dim());
  return kernels::poincare_distance(x.norm_sq(), y.norm_sq(),
                                    kernels::squared_diff_norm(x.coords(), y.coords()));
}

}  // namespace triplh
