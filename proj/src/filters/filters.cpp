#include "filterstab/filters.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "filterstab/errors.hpp"

namespace filterstab {

namespace {

constexpr double kDegenerateMass = 1e-300;
constexpr double kPruneRatio = 1e-20;

std::string describe(const Point& y) {
  std::ostringstream out;
  out << "y = " << y.transpose();
  return out.str();
}

std::vector<double> predict_grid_ar(const GridDensity& g, const ARKernel& ar) {
  const double h = g.spacing();
  const std::size_t n = g.size();
  const double r = ar.noise().support_radius();
  const double peak = *std::max_element(g.values().begin(), g.values().end());
  std::vector<double> out(n, 0.0);
  Point x(1);
  for (std::size_t i = 0; i < n; ++i) {
    const double vi = g.values()[i];
    if (vi <= peak * kPruneRatio) continue;
    x[0] = g.node(i);
    const double b = ar.drift(x)[0];
    const double s = ar.dispersion(x)(0, 0);
    const double reach = std::abs(s) * r;
    const double lo = std::ceil((b - reach - g.origin()) / h);
    const double hi = std::floor((b + reach - g.origin()) / h);
    if (hi < 0.0 || lo > static_cast<double>(n - 1)) continue;
    const auto j0 = static_cast<std::size_t>(std::max(lo, 0.0));
    const auto j1 = static_cast<std::size_t>(std::min(hi, static_cast<double>(n - 1)));
    const double scale = h * vi / std::abs(s);
    for (std::size_t j = j0; j <= j1; ++j) out[j] += scale * ar.noise()((g.node(j) - b) / s);
  }
  return out;
}

std::vector<double> predict_grid_dense(const GridDensity& g, const TransitionKernel& kernel) {
  const double h = g.spacing();
  const std::size_t n = g.size();
  const double peak = *std::max_element(g.values().begin(), g.values().end());
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double vi = g.values()[i];
    if (vi <= peak * kPruneRatio) continue;
    const Point xi = point1(g.node(i));
    for (std::size_t j = 0; j < n; ++j) out[j] += h * vi * kernel.density(xi, point1(g.node(j)));
  }
  return out;
}

GridDensity predict_grid(const GridDensity& g, const TransitionKernel& kernel) {
  if (kernel.dim() != 1) throw DimensionError("predict: grid filters are one-dimensional");
  if (!kernel.has_density()) throw std::invalid_argument("predict: kernel '" + kernel.name() + "' has no density");
  const ARKernel* ar = kernel.ar();
  std::vector<double> out = ar != nullptr ? predict_grid_ar(g, *ar) : predict_grid_dense(g, kernel);
  const double retained = compensated_sum(out) * g.spacing();
  if (retained < 1.0 - 1e-3) {
    throw NumericalError("predict: only " + std::to_string(retained) + " of the mass stays on the grid");
  }
  return GridDensity::make(g.origin(), g.spacing(), std::move(out));
}

}  // namespace

double FilterState::mean() const { return measure_mean(measure); }

double FilterState::variance() const {
  return std::visit(
      [](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, GridDensity>) {
          return m.variance();
        } else if constexpr (std::is_same_v<T, DiscreteMeasure>) {
          const double mu = m.mean()[0];
          double s = 0.0;
          for (std::size_t i = 0; i < m.size(); ++i) {
            const double d = m.atoms()[i][0] - mu;
            s += m.weights()[i] * d * d;
          }
          return s;
        } else {
          return m.variance[0];
        }
      },
      measure);
}

FilterState initial_predictor(Measure prior) { return FilterState{std::move(prior), 0, StateKind::predictor}; }

FilterState predict(const FilterState& state, const TransitionKernel& kernel, Rng* rng) {
  if (state.kind != StateKind::filter) throw std::logic_error("predict: state is not a filter");
  if (measure_dim(state.measure) != kernel.dim()) throw DimensionError("predict: kernel dimension mismatch");
  FilterState out{state.measure, state.time + 1, StateKind::predictor};
  if (kernel.is_identity()) return out;

  if (const auto* g = std::get_if<GridDensity>(&state.measure)) {
    out.measure = predict_grid(*g, kernel);
  } else if (const auto* d = std::get_if<DiscreteMeasure>(&state.measure)) {
    if (rng == nullptr) throw std::invalid_argument("predict: particle propagation needs a random source");
    std::vector<Point> atoms;
    atoms.reserve(d->size());
    for (const auto& x : d->atoms()) atoms.push_back(kernel.sample(x, *rng));
    out.measure = DiscreteMeasure::make(std::move(atoms), d->weights());
  } else {
    throw std::invalid_argument("predict: Gaussian states support the identity kernel only");
  }
  return out;
}

FilterState reweight(const FilterState& state, const std::function<double(const Point&)>& likelihood) {
  FilterState out{state.measure, state.time, StateKind::filter};
  if (const auto* g = std::get_if<GridDensity>(&state.measure)) {
    std::vector<double> values(g->size());
    for (std::size_t i = 0; i < g->size(); ++i) {
      const double v = g->values()[i];
      values[i] = v == 0.0 ? 0.0 : v * likelihood(point1(g->node(i)));
    }
    const double total = compensated_sum(values) * g->spacing();
    if (!(total >= kDegenerateMass) || !std::isfinite(total)) {
      throw DegenerateUpdate("update: total likelihood mass " + std::to_string(total) + " below 1e-300", 0.0);
    }
    out.measure = GridDensity::make(g->origin(), g->spacing(), std::move(values));
  } else if (const auto* d = std::get_if<DiscreteMeasure>(&state.measure)) {
    std::vector<double> w(d->size());
    for (std::size_t i = 0; i < d->size(); ++i) w[i] = d->weights()[i] * likelihood(d->atoms()[i]);
    const double total = compensated_sum(w);
    if (!(total >= kDegenerateMass) || !std::isfinite(total)) {
      throw DegenerateUpdate("update: total likelihood mass " + std::to_string(total) + " below 1e-300", 0.0);
    }
    out.measure = DiscreteMeasure::make(d->atoms(), std::move(w));
  } else {
    throw std::invalid_argument("reweight: Gaussian states need the conjugate update");
  }
  return out;
}

FilterState update(const FilterState& state, const Point& y, const ObservationChannel& channel) {
  if (state.kind != StateKind::predictor) throw std::logic_error("update: state is not a predictor");
  if (measure_dim(state.measure) != channel.state_dim()) throw DimensionError("update: channel state dimension");
  if (y.size() != channel.obs_dim()) throw DimensionError("update: observation dimension");

  if (const auto* g = std::get_if<GaussianMeasure>(&state.measure)) {
    const auto gain = channel.linear_gain();
    const auto noise_std = channel.noise().gaussian_std();
    if (!gain || !noise_std) throw std::invalid_argument("update: Gaussian states need a linear Gaussian channel");
    const double m = g->mean[0];
    const double v = g->variance[0];
    const double r = *noise_std * *noise_std;
    const double denom = (*gain) * (*gain) * v + r;
    const double k = (*gain) * v / denom;
    FilterState out{GaussianMeasure::make_1d(m + k * (y[0] - (*gain) * m), v - k * (*gain) * v), state.time,
                    StateKind::filter};
    return out;
  }
  try {
    return reweight(state, [&](const Point& x) { return channel.likelihood(y, x); });
  } catch (const DegenerateUpdate& e) {
    throw DegenerateUpdate(std::string(e.what()) + " for " + describe(y), y[0],
                           static_cast<std::ptrdiff_t>(state.time));
  }
}

GridDensity observation_predictive(const FilterState& state, const ObservationChannel& channel,
                                   std::optional<double> spacing) {
  if (state.kind != StateKind::predictor) throw std::logic_error("observation_predictive: state is not a predictor");
  if (channel.obs_dim() != 1 || channel.state_dim() != 1) {
    throw DimensionError("observation_predictive: one-dimensional channels only");
  }
  const auto gain = channel.linear_gain();
  double step = 0.01;
  DiscreteMeasure support = DiscreteMeasure::dirac(0.0);
  if (const auto* g = std::get_if<GridDensity>(&state.measure)) {
    support = to_discrete(*g);
    if (gain && *gain != 0.0) step = g->spacing() * std::abs(*gain);
  } else if (const auto* d = std::get_if<DiscreteMeasure>(&state.measure)) {
    support = *d;
  } else {
    const auto& n = std::get<GaussianMeasure>(state.measure);
    const double s = std::sqrt(n.variance[0]);
    if (s == 0.0) {
      support = DiscreteMeasure::dirac(n.mean[0]);
    } else {
      const double h = s / 100.0;
      const double r = gaussian_radius(s);
      const auto count = static_cast<std::size_t>(std::ceil(2.0 * r / h)) + 1;
      support = to_discrete(discretize(state.measure, n.mean[0] - r, h, count));
      if (gain && *gain != 0.0) step = h * std::abs(*gain);
    }
  }
  if (spacing) step = *spacing;
  if (!(step > 0.0)) throw std::invalid_argument("observation_predictive: spacing must be positive");

  std::vector<Point> pushed;
  pushed.reserve(support.size());
  for (const auto& x : support.atoms()) pushed.push_back(channel.h(x));
  const DiscreteMeasure image = DiscreteMeasure::make(std::move(pushed), support.weights());
  const double lo = image.atoms().front()[0];
  const double hi = image.atoms().back()[0];
  const auto count = static_cast<std::size_t>(std::ceil((hi - lo) / step - 1e-9)) + 1;
  const GridDensity grid = discretize(image, lo, step, count);
  return convolve_density(grid, channel.noise());
}

GridConfig GridConfig::covering(double lo, double hi, double spacing) {
  if (!(spacing > 0.0) || !(hi > lo)) throw std::invalid_argument("GridConfig: need lo < hi and spacing > 0");
  GridConfig g;
  g.origin = lo;
  g.spacing = spacing;
  g.count = static_cast<std::size_t>(std::llround((hi - lo) / spacing)) + 1;
  return g;
}

std::vector<FilterStep> run_grid_filter(const HMMSpec& spec, const std::vector<Point>& observations,
                                        const Measure& prior, const GridConfig& grid) {
  std::vector<FilterStep> trace;
  if (observations.empty()) return trace;
  if (spec.state_dim() != 1) throw DimensionError("run_grid_filter: grid filters are one-dimensional");
  trace.reserve(observations.size());
  FilterState predictor = initial_predictor(discretize(prior, grid.origin, grid.spacing, grid.count));
  for (std::size_t n = 0; n < observations.size(); ++n) {
    if (n > 0) predictor = predict(trace.back().filter, spec.kernel);
    FilterState filter = update(predictor, observations[n], spec.channel);
    trace.push_back(FilterStep{std::move(predictor), std::move(filter)});
  }
  return trace;
}

std::vector<FilterStep> run_particle_filter(const HMMSpec& spec, const std::vector<Point>& observations,
                                            const Measure& prior, std::size_t n_particles, std::uint64_t seed) {
  if (n_particles < 2) throw std::invalid_argument("run_particle_filter: need at least 2 particles");
  std::vector<FilterStep> trace;
  if (observations.empty()) return trace;
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const std::vector<double> equal(n_particles, 1.0 / static_cast<double>(n_particles));

  std::vector<Point> particles;
  particles.reserve(n_particles);
  for (std::size_t i = 0; i < n_particles; ++i) particles.push_back(sample_measure(prior, rng));

  std::vector<double> w(n_particles);
  for (std::size_t n = 0; n < observations.size(); ++n) {
    if (n > 0) {
      for (auto& x : particles) x = spec.kernel.sample(x, rng);
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n_particles; ++i) {
      w[i] = spec.channel.likelihood(observations[n], particles[i]);
      total += w[i];
    }
    if (!(total >= kDegenerateMass) || !std::isfinite(total)) {
      throw DegenerateUpdate("run_particle_filter: total likelihood mass below 1e-300 for " + describe(observations[n]),
                             observations[n][0], static_cast<std::ptrdiff_t>(n));
    }
    double sq = 0.0;
    for (double& wi : w) {
      wi /= total;
      sq += wi * wi;
    }
    if (1.0 / sq < 2.0) {
      throw ParticleDegeneracy("run_particle_filter: effective sample size " + std::to_string(1.0 / sq) + " below 2",
                               static_cast<std::ptrdiff_t>(n));
    }
    FilterState predictor{DiscreteMeasure::make(particles, equal), n, StateKind::predictor};
    FilterState filter{DiscreteMeasure::make(particles, w), n, StateKind::filter};
    trace.push_back(FilterStep{std::move(predictor), std::move(filter)});

    // Systematic resampling with a single uniform offset.
    const double u0 = unif(rng) / static_cast<double>(n_particles);
    std::vector<Point> next;
    next.reserve(n_particles);
    double acc = w[0];
    std::size_t i = 0;
    for (std::size_t k = 0; k < n_particles; ++k) {
      const double u = u0 + static_cast<double>(k) / static_cast<double>(n_particles);
      while (u > acc && i + 1 < n_particles) acc += w[++i];
      next.push_back(particles[i]);
    }
    particles = std::move(next);
  }
  return trace;
}

std::vector<KalmanStaticState> kalman_static(const StaticGaussianModel& model, double prior_mean,
                                             const std::vector<double>& observations) {
  model.validate();
  if (!std::isfinite(prior_mean)) throw std::invalid_argument("kalman_static: non-finite prior mean");
  std::vector<KalmanStaticState> trace;
  trace.reserve(observations.size());
  const double s2 = model.sigma2;
  double sum = 0.0;
  for (std::size_t k = 0; k < observations.size(); ++k) {
    if (!std::isfinite(observations[k])) throw std::invalid_argument("kalman_static: non-finite observation");
    sum += observations[k];
    const double n = static_cast<double>(k + 1);
    const double denom = 1.0 + s2 * n;
    trace.push_back(KalmanStaticState{prior_mean / denom + (s2 * n / denom) * (sum / n), s2 / denom, k});
  }
  return trace;
}

}  // namespace filterstab
