#include "filterstab/models.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "filterstab/errors.hpp"

namespace filterstab {

// ---------------------------------------------------------------------------
// TransitionKernel

TransitionKernel::TransitionKernel(std::string name, int dim, Sampler sampler, Density density)
    : name_(std::move(name)), dim_(dim), sampler_(std::move(sampler)), density_(std::move(density)) {
  if (dim_ < 1) throw DimensionError("TransitionKernel: dimension must be positive");
  if (!sampler_) throw std::invalid_argument("TransitionKernel: sampler required");
}

TransitionKernel TransitionKernel::identity(int dim) {
  TransitionKernel k("identity", dim, [](const Point& x, Rng&) { return x; });
  k.identity_ = true;
  return k;
}

double TransitionKernel::density(const Point& x, const Point& x_next) const {
  if (!density_) throw std::logic_error("TransitionKernel '" + name_ + "' has no density");
  return density_(x, x_next);
}

// ---------------------------------------------------------------------------
// ARKernel

ARKernel::ARKernel(std::string name, int dim, Drift drift, Dispersion dispersion, DensityFn noise,
                   double dispersion_lower_bound)
    : name_(std::move(name)),
      dim_(dim),
      drift_(std::move(drift)),
      dispersion_(std::move(dispersion)),
      noise_(std::move(noise)),
      alpha_(dispersion_lower_bound) {
  if (dim_ < 1) throw DimensionError("ARKernel: dimension must be positive");
  if (noise_.dim() != dim_) throw DimensionError("ARKernel: noise dimension differs from state dimension");
  if (!(alpha_ > 0.0)) throw std::invalid_argument("ARKernel: dispersion lower bound must be positive");
  if (!drift_ || !dispersion_) throw std::invalid_argument("ARKernel: drift and dispersion required");

  Rng rng(0x5eed5eedULL);
  std::uniform_real_distribution<double> box(-10.0, 10.0);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (int probe = 0; probe < 64; ++probe) {
    Eigen::VectorXd x(dim_);
    Eigen::VectorXd v(dim_);
    for (int d = 0; d < dim_; ++d) x[d] = box(rng);
    for (int d = 0; d < dim_; ++d) v[d] = n01(rng);
    const Eigen::MatrixXd s = dispersion_(x);
    if (s.rows() != dim_ || s.cols() != dim_) throw DimensionError("ARKernel: dispersion has wrong shape");
    if ((s * v).norm() < alpha_ * v.norm() * (1.0 - 1e-12)) {
      std::ostringstream msg;
      msg << "ARKernel '" << name_ << "': ||sigma(x) v|| < alpha ||v|| at x = " << x.transpose();
      throw std::invalid_argument(msg.str());
    }
  }

  // Midpoint quadrature of p(x, .) in the coordinates z = b(x) + sigma(x) u.
  if (dim_ <= 2) {
    const int cells = dim_ == 1 ? 20000 : 200;
    const double r = noise_.support_radius();
    const double du = 2.0 * r / cells;
    for (int probe = 0; probe < 4; ++probe) {
      Eigen::VectorXd x(dim_);
      for (int d = 0; d < dim_; ++d) x[d] = box(rng);
      const Eigen::VectorXd b = drift_(x);
      const Eigen::MatrixXd s = dispersion_(x);
      const double jac = std::abs(s.determinant());
      double total = 0.0;
      Eigen::VectorXd u(dim_);
      const long long count = dim_ == 1 ? cells : static_cast<long long>(cells) * cells;
      for (long long flat = 0; flat < count; ++flat) {
        long long rest = flat;
        for (int d = 0; d < dim_; ++d) {
          u[d] = -r + du * (static_cast<double>(rest % cells) + 0.5);
          rest /= cells;
        }
        total += density(x, b + s * u);
      }
      total *= jac * std::pow(du, dim_);
      if (std::abs(total - 1.0) > 1e-6) {
        std::ostringstream msg;
        msg << "ARKernel '" << name_ << "': p(x, .) integrates to " << total << " at x = " << x.transpose();
        throw NumericalError(msg.str());
      }
    }
  }
}

ARKernel ARKernel::linear_1d(double coef, double offset, double sigma, DensityFn noise) {
  if (sigma == 0.0) throw std::invalid_argument("ARKernel::linear_1d: sigma must be nonzero");
  std::ostringstream name;
  name << "ar(b(x)=" << coef << "x+" << offset << ", sigma=" << sigma << ", eta=" << noise.name() << ")";
  return ARKernel(
      name.str(), 1,
      [coef, offset](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, coef * x[0] + offset); },
      [sigma](const Eigen::VectorXd&) { return Eigen::MatrixXd::Constant(1, 1, sigma); }, std::move(noise),
      std::abs(sigma));
}

double ARKernel::density(const Eigen::VectorXd& x, const Eigen::VectorXd& z) const {
  const Eigen::MatrixXd s = dispersion_(x);
  const Eigen::VectorXd centred = z - drift_(x);
  if (dim_ == 1) {
    const double u = centred[0] / s(0, 0);
    return noise_(u) / std::abs(s(0, 0));
  }
  const Eigen::VectorXd u = s.partialPivLu().solve(centred);
  return noise_(std::span<const double>(u.data(), static_cast<std::size_t>(dim_))) / std::abs(s.determinant());
}

Eigen::VectorXd ARKernel::sample(const Eigen::VectorXd& x, Rng& rng) const {
  Eigen::VectorXd eta(dim_);
  noise_.sample(rng, std::span<double>(eta.data(), static_cast<std::size_t>(dim_)));
  return drift_(x) + dispersion_(x) * eta;
}

TransitionKernel ARKernel::as_kernel() const {
  auto self = std::make_shared<const ARKernel>(*this);
  TransitionKernel k(
      name_, dim_, [self](const Point& x, Rng& rng) { return self->sample(x, rng); },
      [self](const Point& x, const Point& z) { return self->density(x, z); });
  k.ar_ = self;
  return k;
}

// ---------------------------------------------------------------------------
// ObservationChannel

ObservationChannel::ObservationChannel(std::string name, int state_dim, int obs_dim, Map h, Map h_inverse,
                                       DensityFn noise)
    : name_(std::move(name)),
      state_dim_(state_dim),
      obs_dim_(obs_dim),
      h_(std::move(h)),
      h_inverse_(std::move(h_inverse)),
      noise_(std::move(noise)) {
  if (state_dim_ < 1 || obs_dim_ < 1) throw DimensionError("ObservationChannel: dimensions must be positive");
  if (noise_.dim() != obs_dim_) throw DimensionError("ObservationChannel: noise dimension differs from observation dimension");
  if (!noise_.can_sample()) throw std::invalid_argument("ObservationChannel: noise needs a sampler");
  if (!h_ || !h_inverse_) throw std::invalid_argument("ObservationChannel: h and h_inverse required");
}

ObservationChannel ObservationChannel::identity(DensityFn noise) {
  const int d = noise.dim();
  ObservationChannel c("identity/" + noise.name(), d, d, [](const Point& x) { return x; },
                       [](const Point& y) { return y; }, std::move(noise));
  if (d == 1) c.gain_ = 1.0;
  return c;
}

ObservationChannel ObservationChannel::linear_1d(double gain, DensityFn noise) {
  if (gain == 0.0) throw std::invalid_argument("ObservationChannel::linear_1d: use blind() for zero gain");
  std::ostringstream name;
  name << "linear(" << gain << ")/" << noise.name();
  ObservationChannel c(
      name.str(), 1, 1, [gain](const Point& x) { return Point(gain * x); },
      [gain](const Point& y) { return Point(y / gain); }, std::move(noise));
  c.gain_ = gain;
  return c;
}

ObservationChannel ObservationChannel::blind(DensityFn noise) {
  const int d = noise.dim();
  ObservationChannel c("blind/" + noise.name(), d, d, [d](const Point&) { return Point(Point::Zero(d)); },
                       [d](const Point&) { return Point(Point::Zero(d)); }, std::move(noise));
  if (d == 1) c.gain_ = 0.0;
  return c;
}

double ObservationChannel::likelihood(const Point& y, const Point& x) const {
  const Point r = y - h_(x);
  return noise_(std::span<const double>(r.data(), static_cast<std::size_t>(r.size())));
}

// ---------------------------------------------------------------------------
// HMMSpec and the static Gaussian model

HMMSpec::HMMSpec(TransitionKernel k, ObservationChannel c, Measure p)
    : kernel(std::move(k)), channel(std::move(c)), prior(std::move(p)) {
  if (channel.state_dim() != kernel.dim()) throw DimensionError("HMMSpec: channel and kernel disagree on state dimension");
  if (measure_dim(prior) != kernel.dim()) throw DimensionError("HMMSpec: prior dimension differs from state dimension");
}

void StaticGaussianModel::validate() const {
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) throw std::invalid_argument("StaticGaussianModel: sigma2 must be >= 0");
  if (!std::isfinite(alpha) || !std::isfinite(beta)) throw std::invalid_argument("StaticGaussianModel: non-finite mean");
}

HMMSpec StaticGaussianModel::spec() const {
  validate();
  return HMMSpec(TransitionKernel::identity(1), ObservationChannel::identity(gaussian_density(1.0)),
                 GaussianMeasure::make_1d(alpha, sigma2));
}

// ---------------------------------------------------------------------------
// Simulation

std::vector<double> Path::states_1d() const {
  std::vector<double> xs(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) xs[i] = states[i][0];
  return xs;
}

std::vector<double> Path::observations_1d() const {
  std::vector<double> ys(observations.size());
  for (std::size_t i = 0; i < observations.size(); ++i) ys[i] = observations[i][0];
  return ys;
}

Path simulate_path(const HMMSpec& spec, std::size_t horizon, std::uint64_t seed) {
  return simulate_path(spec, spec.prior, horizon, seed);
}

Path simulate_path(const HMMSpec& spec, const Measure& initial, std::size_t horizon, std::uint64_t seed) {
  if (horizon < 1) throw std::invalid_argument("simulate_path: horizon must be >= 1");
  if (measure_dim(initial) != spec.state_dim()) throw DimensionError("simulate_path: initial law dimension");
  Rng rng(seed);
  Path path;
  path.states.reserve(horizon);
  path.observations.reserve(horizon);
  Point x = sample_measure(initial, rng);
  for (std::size_t k = 0; k < horizon; ++k) {
    if (!x.allFinite()) {
      throw NumericalError("simulate_path: sampler produced a non-finite state at step " + std::to_string(k));
    }
    Point y = spec.channel.h(x);
    Point xi(spec.obs_dim());
    spec.channel.noise().sample(rng, std::span<double>(xi.data(), static_cast<std::size_t>(xi.size())));
    y += xi;
    path.states.push_back(x);
    path.observations.push_back(std::move(y));
    if (k + 1 < horizon) x = spec.kernel.sample(x, rng);
  }
  return path;
}

}  // namespace filterstab
