#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "filterstab/density.hpp"
#include "filterstab/measures.hpp"

namespace filterstab {

class ARKernel;

/// Signal transition law P(x, dx').
///
/// Always samplable; carries a conditional density p(x, x') when one exists.
/// The identity kernel (static signal) is flagged so filters can pass any
/// representation through unchanged.
class TransitionKernel {
 public:
  using Sampler = std::function<Point(const Point&, Rng&)>;
  using Density = std::function<double(const Point&, const Point&)>;

  TransitionKernel(std::string name, int dim, Sampler sampler, Density density = {});

  static TransitionKernel identity(int dim = 1);

  const std::string& name() const noexcept { return name_; }
  int dim() const noexcept { return dim_; }
  bool is_identity() const noexcept { return identity_; }
  bool has_density() const noexcept { return static_cast<bool>(density_); }

  Point sample(const Point& x, Rng& rng) const { return sampler_(x, rng); }
  double density(const Point& x, const Point& x_next) const;

  /// Set when this kernel was built from an AR recursion.
  const ARKernel* ar() const noexcept { return ar_.get(); }

 private:
  friend class ARKernel;
  std::string name_;
  int dim_;
  Sampler sampler_;
  Density density_;
  bool identity_ = false;
  std::shared_ptr<const ARKernel> ar_;
};

/// X_{k+1} = b(X_k) + sigma(X_k) eta_k with eta_k i.i.d. with density q_eta.
///
/// Construction spot-checks ||sigma(x) v|| >= alpha ||v|| on sampled pairs and,
/// for m <= 2, that the implied density p(x, .) integrates to 1.
class ARKernel {
 public:
  using Drift = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
  using Dispersion = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

  ARKernel(std::string name, int dim, Drift drift, Dispersion dispersion, DensityFn noise,
           double dispersion_lower_bound);

  /// b(x) = coef * x + offset, sigma(x) = sigma, all scalar.
  static ARKernel linear_1d(double coef, double offset, double sigma, DensityFn noise);

  const std::string& name() const noexcept { return name_; }
  int dim() const noexcept { return dim_; }
  Eigen::VectorXd drift(const Eigen::VectorXd& x) const { return drift_(x); }
  Eigen::MatrixXd dispersion(const Eigen::VectorXd& x) const { return dispersion_(x); }
  const DensityFn& noise() const noexcept { return noise_; }
  double dispersion_lower_bound() const noexcept { return alpha_; }

  /// p(x, z) = q_eta(sigma(x)^{-1}(z - b(x))) / |det sigma(x)|.
  double density(const Eigen::VectorXd& x, const Eigen::VectorXd& z) const;
  Eigen::VectorXd sample(const Eigen::VectorXd& x, Rng& rng) const;

  TransitionKernel as_kernel() const;

 private:
  std::string name_;
  int dim_;
  Drift drift_;
  Dispersion dispersion_;
  DensityFn noise_;
  double alpha_;
};

/// Additive observation channel Y = h(X) + xi.
///
/// `h_inverse` is a left inverse of h; it is not enforced at construction so
/// that non-injective counterexamples can be modelled and diagnosed.
class ObservationChannel {
 public:
  using Map = std::function<Point(const Point&)>;

  ObservationChannel(std::string name, int state_dim, int obs_dim, Map h, Map h_inverse, DensityFn noise);

  static ObservationChannel identity(DensityFn noise);
  static ObservationChannel linear_1d(double gain, DensityFn noise);
  /// h = 0: observations carry no information about the state.
  static ObservationChannel blind(DensityFn noise);

  const std::string& name() const noexcept { return name_; }
  int state_dim() const noexcept { return state_dim_; }
  int obs_dim() const noexcept { return obs_dim_; }
  Point h(const Point& x) const { return h_(x); }
  Point h_inverse(const Point& y) const { return h_inverse_(y); }
  const DensityFn& noise() const noexcept { return noise_; }

  /// Scalar gain when h(x) = gain * x in one dimension.
  std::optional<double> linear_gain() const noexcept { return gain_; }

  /// q_xi(y - h(x)).
  double likelihood(const Point& y, const Point& x) const;

 private:
  std::string name_;
  int state_dim_;
  int obs_dim_;
  Map h_;
  Map h_inverse_;
  DensityFn noise_;
  std::optional<double> gain_;
};

/// Hidden Markov model: signal kernel, observation channel and prior.
struct HMMSpec {
  TransitionKernel kernel;
  ObservationChannel channel;
  Measure prior;

  HMMSpec(TransitionKernel kernel, ObservationChannel channel, Measure prior);

  int state_dim() const noexcept { return kernel.dim(); }
  int obs_dim() const noexcept { return channel.obs_dim(); }
};

/// Static signal X_k = X_0 observed in unit Gaussian noise, with priors
/// N(alpha, sigma2) and N(beta, sigma2).
struct StaticGaussianModel {
  double alpha = 0.0;
  double beta = 1.0;
  double sigma2 = 1.0;

  void validate() const;
  HMMSpec spec() const;
};

struct Path {
  std::vector<Point> states;
  std::vector<Point> observations;

  std::vector<double> states_1d() const;
  std::vector<double> observations_1d() const;
};

/// X_0 ~ prior, X_{k+1} ~ P(X_k, .), Y_k = h(X_k) + xi_k; deterministic in `seed`.
Path simulate_path(const HMMSpec& spec, std::size_t horizon, std::uint64_t seed);

/// As above but with X_0 drawn from `initial` instead of the spec's prior.
Path simulate_path(const HMMSpec& spec, const Measure& initial, std::size_t horizon, std::uint64_t seed);

}  // namespace filterstab
