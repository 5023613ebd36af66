#pragma once

// Lorentz-model primitives on the hyperboloid
//   H^{d,beta} = { x in R^{d+1} : <x,x>_L = -beta },
// plus the Poincare-ball distance used by the HyperBPR baseline.
//
// Everything here is a pure function of its arguments and runs in double
// precision.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace triplh {

/// Strictly positive curvature parameter of the hyperboloid.
class Curvature {
 public:
  explicit Curvature(double beta = 1.0);
  double value() const noexcept { return beta_; }
  bool operator==(const Curvature&) const = default;

 private:
  double beta_;
};

/// A point on the hyperboloid. Only `lift` creates these, so the zeroth
/// component is always sqrt(beta + |spatial|^2).
class HyperPoint {
 public:
  double x0() const noexcept { return coords_[0]; }
  std::span<const double> spatial() const noexcept {
    return std::span<const double>(coords_).subspan(1);
  }
  /// Full (d+1)-vector, zeroth component first.
  std::span<const double> coords() const noexcept { return coords_; }
  std::size_t dim() const noexcept { return coords_.size() - 1; }
  Curvature curvature() const noexcept { return beta_; }

 private:
  friend HyperPoint lift(std::span<const double> x, Curvature c);
  HyperPoint(std::vector<double> coords, Curvature c) : coords_(std::move(coords)), beta_(c) {}

  std::vector<double> coords_;
  Curvature beta_;
};

/// A point strictly inside the unit ball, norm at most kPoincareMaxNorm.
class PoincarePoint {
 public:
  /// Projects `x` radially onto the ball of radius kPoincareMaxNorm if it lies
  /// outside; otherwise copies it unchanged.
  static PoincarePoint clip(std::span<const double> x);

  std::span<const double> coords() const noexcept { return coords_; }
  double norm_sq() const noexcept { return norm_sq_; }
  std::size_t dim() const noexcept { return coords_.size(); }

 private:
  PoincarePoint(std::vector<double> coords, double norm_sq)
      : coords_(std::move(coords)), norm_sq_(norm_sq) {}
  std::vector<double> coords_;
  double norm_sq_;
};

inline constexpr double kPoincareMaxNorm = 1.0 - 1e-5;

double lorentz_inner(const HyperPoint& u, const HyperPoint& v);
HyperPoint lift(std::span<const double> x, Curvature c = Curvature{1.0});
double geodesic_distance(const HyperPoint& u, const HyperPoint& v);
/// -2 beta - 2 <u,v>_L, i.e. the Lorentzian self-product of u - v.
double squared_lorentz_distance(const HyperPoint& u, const HyperPoint& v);
/// LorentzFM score; both points must live on the beta = 1 hyperboloid.
double lorentz_score(const HyperPoint& u, const HyperPoint& v);
double poincare_distance(const PoincarePoint& x, const PoincarePoint& y);

// Allocation-free kernels over raw coordinates. The HyperPoint API above is
// built on these; the training and scoring loops call them directly.
namespace kernels {

double dot(std::span<const double> a, std::span<const double> b) noexcept;
double squared_norm(std::span<const double> a) noexcept;
double squared_diff_norm(std::span<const double> a, std::span<const double> b) noexcept;

inline double lift_x0(double sq_norm, double beta) noexcept { return std::sqrt(beta + sq_norm); }

/// Lorentz score of two lifted points given their zeroth components and the
/// Euclidean dot product of their spatial parts (beta = 1).
inline double lorentz_score(double u0, double v0, double spatial_dot) noexcept {
  const double inner = -u0 * v0 + spatial_dot;
  const double d_uv = -2.0 - 2.0 * inner;
  const double d_ou = -2.0 + 2.0 * u0;
  const double d_ov = -2.0 + 2.0 * v0;
  return 0.5 * (d_uv - (d_ou + d_ov)) / (u0 * v0);
}

/// Poincare distance from squared norms and squared difference norm.
double poincare_distance(double x_sq, double y_sq, double diff_sq) noexcept;

/// Radial scale that clips a vector of the given squared norm into the ball.
double poincare_clip_scale(double sq_norm) noexcept;

}  // namespace kernels
}  // namespace triplh
