#pragma once

#include <cmath>
#include <cstdint>

#include "arl/core/types.hpp"

namespace arl {

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;
inline constexpr double kNormFloor = 1e-8;   // below this a vector counts as degenerate
inline constexpr double kSoftSeries = 1e-4;  // switch to series expansion of tanh(r)/r

/// Asymmetric squared loss: |tau - 1(x<0)| * x^2. Subgradient 0 at x = 0.
inline double expectile_weight(double x, double tau) { return x < 0.0 ? 1.0 - tau : tau; }

inline double expectile_loss(double x, double tau) { return expectile_weight(x, tau) * x * x; }

inline double expectile_grad(double x, double tau) { return 2.0 * expectile_weight(x, tau) * x; }

/// Exact (erf-based) GELU and its derivative.
inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

inline double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  return cdf + x * pdf;
}

/// tanh(r)/r, continuous through r = 0.
inline double tanh_over_r(double r) {
  if (r < kSoftSeries) return 1.0 - r * r / 3.0;
  return std::tanh(r) / r;
}

/// d/dr [tanh(r)/r] / r, continuous through r = 0 (limit -2/3).
inline double tanh_over_r_grad_over_r(double r) {
  if (r < kSoftSeries) return -2.0 / 3.0 + 4.0 * r * r / 15.0;
  const double t = std::tanh(r);
  const double sech2 = 1.0 - t * t;
  return (sech2 * r - t) / (r * r * r);
}

/// Rescale v onto the radius-sqrt(dim) sphere: v / ||v|| * sqrt(dim).
/// ||v|| < 1e-8 yields the zero vector and bumps *degenerate if given.
template <typename Derived>
Vec length_normalize(const Eigen::MatrixBase<Derived>& v, int64_t* degenerate = nullptr) {
  const double r = v.norm();
  if (r < kNormFloor) {
    if (degenerate) ++*degenerate;
    return Vec::Zero(v.size());
  }
  return v * (std::sqrt(double(v.size())) / r);
}

/// Radial squash into the open ball of radius sqrt(dim):
/// v * tanh(||v||) / ||v|| * sqrt(dim), with the removable singularity at 0
/// handled by series expansion (soft_normalize(0) = 0, smoothly).
template <typename Derived>
Vec soft_normalize(const Eigen::MatrixBase<Derived>& v) {
  const double r = v.norm();
  return v * (std::sqrt(double(v.size())) * tanh_over_r(r));
}

}  // namespace arl
