#pragma once

// Seeded generators and independent oracles shared by the test suites.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "filterstab/measures.hpp"

namespace filterstab::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }

  /// `count` distinct values on the lattice step * k, k in [-range, range].
  std::vector<double> lattice_points(int count, double step, int range) {
    std::vector<int> ks;
    while (static_cast<int>(ks.size()) < count) {
      const int k = integer(-range, range);
      if (std::find(ks.begin(), ks.end(), k) == ks.end()) ks.push_back(k);
    }
    std::vector<double> xs;
    for (int k : ks) xs.push_back(step * k);
    return xs;
  }

  std::vector<double> weights(std::size_t count) {
    std::vector<double> w(count);
    for (auto& x : w) x = uniform(0.05, 1.0);
    return w;
  }

  DiscreteMeasure discrete_1d(int max_atoms, double step = 0.0, int range = 300) {
    const int k = integer(1, max_atoms);
    std::vector<double> xs;
    if (step > 0.0) {
      xs = lattice_points(k, step, range);
    } else {
      for (int i = 0; i < k; ++i) xs.push_back(uniform(-3.0, 3.0));
    }
    const auto w = weights(xs.size());
    return DiscreteMeasure::make_1d(xs, w);
  }

  DiscreteMeasure discrete_nd(int dim, int max_atoms) {
    const int k = integer(1, max_atoms);
    std::vector<Point> atoms;
    for (int i = 0; i < k; ++i) {
      Point p(dim);
      for (int d = 0; d < dim; ++d) p[d] = uniform(-2.0, 2.0);
      atoms.push_back(p);
    }
    return DiscreteMeasure::make(atoms, weights(atoms.size()));
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

/// Composite Simpson rule on [lo, hi] with an even number of panels.
inline double simpson(const std::function<double(double)>& f, double lo, double hi, int panels) {
  if (panels % 2 != 0) ++panels;
  const double h = (hi - lo) / panels;
  double s = f(lo) + f(hi);
  for (int i = 1; i < panels; ++i) s += f(lo + h * i) * (i % 2 == 1 ? 4.0 : 2.0);
  return s * h / 3.0;
}

inline double gauss_pdf(double x, double m, double s) {
  const double z = (x - m) / s;
  return std::exp(-0.5 * z * z) / (s * std::sqrt(2.0 * 3.14159265358979323846));
}

/// Exhaustive maximization of sum_i w_i f_i over f with values on the lattice
/// {-1, -1 + 1/res, ..., 1} and |f_i - f_j| <= |x_i - x_j| for every pair, by
/// enumerating all value tuples. Exponential in the number of points.
inline double lattice_sup_exhaustive(const std::vector<double>& xs, const std::vector<double>& w, int res) {
  const std::size_t n = xs.size();
  const int levels = 2 * res + 1;
  std::vector<int> idx(n, 0);
  double best = -1e300;
  while (true) {
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      for (std::size_t j = i + 1; j < n && ok; ++j) {
        ok = std::abs(idx[i] - idx[j]) <= static_cast<int>(std::floor(std::abs(xs[i] - xs[j]) * res + 1e-9));
      }
    }
    if (ok) {
      double v = 0.0;
      for (std::size_t i = 0; i < n; ++i) v += w[i] * (-1.0 + static_cast<double>(idx[i]) / res);
      best = std::max(best, v);
    }
    std::size_t k = 0;
    while (k < n && ++idx[k] == levels) idx[k++] = 0;
    if (k == n) break;
  }
  return best;
}

/// Maximization over lattice-valued f by dynamic programming along the sorted
/// points: on the line, adjacent constraints imply all pairwise ones.
inline double lattice_sup_line(std::vector<double> xs, std::vector<double> w, int res) {
  std::vector<std::size_t> order(xs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  const int levels = 2 * res + 1;
  std::vector<double> value(levels, 0.0);
  for (std::size_t step = 0; step < order.size(); ++step) {
    const std::size_t i = order[step];
    std::vector<double> next(levels, -1e300);
    if (step == 0) {
      std::fill(next.begin(), next.end(), 0.0);
    } else {
      const std::size_t prev = order[step - 1];
      const int reach = static_cast<int>(std::floor((xs[i] - xs[prev]) * res + 1e-9));
      for (int a = 0; a < levels; ++a) {
        for (int b = std::max(0, a - reach); b <= std::min(levels - 1, a + reach); ++b) {
          next[a] = std::max(next[a], value[b]);
        }
      }
    }
    for (int a = 0; a < levels; ++a) next[a] += w[i] * (-1.0 + static_cast<double>(a) / res);
    value = std::move(next);
  }
  return *std::max_element(value.begin(), value.end());
}

}  // namespace filterstab::testing
