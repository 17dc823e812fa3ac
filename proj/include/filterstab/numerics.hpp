#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace filterstab {

/// The single random engine used throughout; every consumer receives it explicitly.
using Rng = std::mt19937_64;

inline constexpr double kPi = 3.14159265358979323846;

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * kPi); }

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Total variation (range [0, 2]) between two Gaussians sharing the standard deviation `s`.
inline double same_variance_gaussian_tv(double mean_gap, double s) {
  if (s <= 0.0) return mean_gap == 0.0 ? 0.0 : 2.0;
  // 2(2Phi(x) - 1) loses digits for small x; erf(x / sqrt 2) is the same quantity.
  return 2.0 * std::erf(std::abs(mean_gap) / (2.0 * s) / std::sqrt(2.0));
}

/// Trapezoid weight of node `i` in a uniform grid of `count` nodes.
inline double trapezoid_weight(std::size_t i, std::size_t count) {
  return (i == 0 || i + 1 == count) ? 0.5 : 1.0;
}

/// Neumaier-compensated sum, used where many tiny terms are accumulated.
inline double compensated_sum(std::span<const double> xs) {
  double sum = 0.0;
  double c = 0.0;
  for (double x : xs) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      c += (sum - t) + x;
    } else {
      c += (x - t) + sum;
    }
    sum = t;
  }
  return sum + c;
}

}  // namespace filterstab
