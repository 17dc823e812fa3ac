#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>

#include "filterstab/numerics.hpp"

namespace filterstab {

/// A probability density on R^d with a declared effective support radius.
///
/// The radius bounds every coordinate: numerical integrals run over the box
/// [-r, r]^d. Construction verifies that the density integrates to 1 over that
/// box within 1e-6. An optional sampler draws from the same law; densities
/// used as noise (observation or signal) need one.
class DensityFn {
 public:
  using Eval = std::function<double(std::span<const double>)>;
  using Sampler = std::function<void(Rng&, std::span<double>)>;

  DensityFn(std::string name, int dim, Eval eval, double support_radius, Sampler sampler = {});

  double operator()(std::span<const double> y) const { return eval_(y); }
  double operator()(double y) const { return eval_(std::span<const double>(&y, 1)); }

  const std::string& name() const noexcept { return name_; }
  int dim() const noexcept { return dim_; }
  double support_radius() const noexcept { return radius_; }

  bool can_sample() const noexcept { return static_cast<bool>(sampler_); }
  void sample(Rng& rng, std::span<double> out) const;
  double sample(Rng& rng) const;

  /// Standard deviation per coordinate when this is a centred isotropic Gaussian.
  std::optional<double> gaussian_std() const noexcept { return gaussian_std_; }
  DensityFn& set_gaussian_std(double s) {
    gaussian_std_ = s;
    return *this;
  }

  /// Trapezoid integral over [-radius, radius]^d.
  double mass(double radius, int nodes_per_axis) const;
  double mass() const { return mass(radius_, default_nodes(dim_)); }

  /// Nodes per axis used for mass checks and quadrature in dimension `dim`.
  static int default_nodes(int dim);

 private:
  std::string name_;
  int dim_;
  Eval eval_;
  double radius_;
  Sampler sampler_;
  std::optional<double> gaussian_std_;
};

/// Radius capturing all but `tail` of the mass of a centred normal with std `s`.
double gaussian_radius(double s, double tail = 1e-10);

/// Isotropic centred Gaussian N(0, s^2 I_dim).
DensityFn gaussian_density(double s, int dim = 1);
/// Uniform on [-half_width, half_width]; its Fourier transform has zeros at k*pi/half_width.
DensityFn uniform_density(double half_width);
/// Triangular on [-half_width, half_width]; Fourier transform is a squared sinc.
DensityFn triangular_density(double half_width);
/// Standard Laplace with scale `b` (Fourier transform 1 / (1 + b^2 t^2), never zero).
DensityFn laplace_density(double b);

}  // namespace filterstab
