#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "filterstab/density.hpp"

namespace filterstab {

using Point = Eigen::VectorXd;

inline Point point1(double x) { return Point::Constant(1, x); }

/// Finitely supported probability measure on R^d.
///
/// Always canonical: atoms pairwise distinct and sorted lexicographically,
/// weights strictly positive and summing to 1.
class DiscreteMeasure {
 public:
  /// Normalizes `weights`, drops zero weights and merges coincident atoms.
  static DiscreteMeasure make(std::vector<Point> atoms, std::vector<double> weights);
  static DiscreteMeasure make_1d(std::span<const double> atoms, std::span<const double> weights);
  static DiscreteMeasure dirac(const Point& x);
  static DiscreteMeasure dirac(double x) { return dirac(point1(x)); }

  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return weights_.size(); }
  const std::vector<Point>& atoms() const noexcept { return atoms_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  /// First coordinate of every atom (the whole atom when d = 1).
  std::vector<double> coordinates() const;
  Point mean() const;

 private:
  DiscreteMeasure() = default;
  int dim_ = 1;
  std::vector<Point> atoms_;
  std::vector<double> weights_;
};

/// Density on a uniform 1-d grid: node i sits at origin + i * spacing and
/// carries the density value values[i] (probability per unit length).
class GridDensity {
 public:
  /// Validates and normalizes so that spacing * sum(values) = 1.
  static GridDensity make(double origin, double spacing, std::vector<double> values);

  double origin() const noexcept { return origin_; }
  double spacing() const noexcept { return spacing_; }
  std::size_t size() const noexcept { return values_.size(); }
  const std::vector<double>& values() const noexcept { return values_; }
  double node(std::size_t i) const noexcept { return origin_ + spacing_ * static_cast<double>(i); }
  double last_node() const noexcept { return node(values_.size() - 1); }

  double mass() const;
  double mean() const;
  double variance() const;

 private:
  GridDensity() = default;
  double origin_ = 0.0;
  double spacing_ = 1.0;
  std::vector<double> values_;
};

/// Gaussian with diagonal covariance.
struct GaussianMeasure {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;

  static GaussianMeasure make(Eigen::VectorXd mean, Eigen::VectorXd variance);
  static GaussianMeasure make_1d(double mean, double variance);

  int dim() const noexcept { return static_cast<int>(mean.size()); }
};

using Measure = std::variant<DiscreteMeasure, GridDensity, GaussianMeasure>;

int measure_dim(const Measure& m);
/// Mean of the first coordinate.
double measure_mean(const Measure& m);
/// Draws one point; grid cells are sampled uniformly within the chosen cell.
Point sample_measure(const Measure& m, Rng& rng);

struct TvOptions {
  /// Interpolate the second grid onto the first when the grids are not aligned.
  bool resample = false;
};

/// Total variation distance in the sup-over-|f| <= 1 convention, i.e. the L1
/// distance of densities, with range [0, 2].
///
/// Exact for discrete pairs and for 1-d Gaussian pairs (via the crossing points
/// of the two densities); Riemann sum for aligned grids. A discrete measure and
/// an absolutely continuous one are mutually singular, giving 2.
double tv_distance(const Measure& a, const Measure& b, const TvOptions& options = {});

enum class BlMethod {
  automatic,  ///< line fast path for d = 1, dense LP otherwise
  line,       ///< sorted atoms, adjacent Lipschitz constraints only (d = 1)
  dense_lp,   ///< simplex over all pairwise constraints
};

/// Dual bounded-Lipschitz distance, computed exactly as a linear program over
/// test-function values on the union of atoms (Euclidean metric).
double bl_distance(const DiscreteMeasure& a, const DiscreteMeasure& b,
                   BlMethod method = BlMethod::automatic);

/// sup over f with |f| <= 1 and Lipschitz constant <= 1 of sum_i w_i f(x_i).
/// The weights need not sum to zero. Points must be pairwise distinct.
double lipschitz_ball_sup(std::span<const Point> points, std::span<const double> weights,
                          BlMethod method = BlMethod::automatic);

/// 1-d specialisation; `xs` strictly increasing.
double lipschitz_ball_sup_line(std::span<const double> xs, std::span<const double> weights);

/// Dense simplex route, any dimension. Practical up to a few hundred points.
double lipschitz_ball_sup_dense(std::span<const Point> points, std::span<const double> weights);

/// Projects a 1-d measure onto the grid origin + i * spacing, i < count.
///
/// Gaussians are evaluated at the nodes and renormalized; atoms go to the
/// nearest node; grids are linearly interpolated. Throws NumericalError when
/// the grid captures less than 1 - 1e-4 of the mass.
GridDensity discretize(const Measure& m, double origin, double spacing, std::size_t count);

/// Node masses (value * spacing) as a discrete measure; zero nodes are dropped.
DiscreteMeasure to_discrete(const GridDensity& g);

/// Convolution with a 1-d density, truncated at `radius` (default: the
/// density's declared support radius). The output grid extends the input by
/// that radius on both sides. Throws NumericalError when truncation loses more
/// than 1e-6 of the kernel's mass.
GridDensity convolve_density(const GridDensity& g, const DensityFn& q,
                             std::optional<double> radius = std::nullopt);

}  // namespace filterstab
