#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "filterstab/models.hpp"

namespace filterstab {

enum class StateKind { filter, predictor };

/// pi_n (kind = filter) or pi_{n-} (kind = predictor) at time `time`.
struct FilterState {
  Measure measure;
  std::size_t time = 0;
  StateKind kind = StateKind::predictor;

  /// Mean and variance of the first coordinate.
  double mean() const;
  double variance() const;
};

/// The prior viewed as the time-0 predictor, ready for the first update.
FilterState initial_predictor(Measure prior);

/// pi_{n-1} -> pi_{n-}. Grids need a kernel density (or the identity kernel);
/// particle clouds are propagated through the sampler and need `rng`;
/// Gaussian states support the identity kernel only.
///
/// Grid output stays on the input grid and is renormalized; throws
/// NumericalError when more than 1e-3 of the mass leaves the grid.
FilterState predict(const FilterState& state, const TransitionKernel& kernel, Rng* rng = nullptr);

/// Multiplies by `likelihood(x)` and renormalizes. Throws DegenerateUpdate
/// when the total likelihood mass is below 1e-300.
FilterState reweight(const FilterState& state, const std::function<double(const Point&)>& likelihood);

/// pi_{n-} -> pi_n via the Bayes formula with likelihood q_xi(y - h(x)).
/// Gaussian states use the conjugate update and need a linear channel with
/// Gaussian noise.
FilterState update(const FilterState& state, const Point& y, const ObservationChannel& channel);

/// Law of Y_n given Y_0..Y_{n-1}: the predictor pushed through h, convolved
/// with q_xi. One-dimensional observations only. `spacing` defaults to the
/// state grid spacing times |gain| for linear channels and 0.01 otherwise.
GridDensity observation_predictive(const FilterState& state, const ObservationChannel& channel,
                                   std::optional<double> spacing = std::nullopt);

struct GridConfig {
  double origin = -10.0;
  double spacing = 0.01;
  std::size_t count = 2001;

  static GridConfig covering(double lo, double hi, double spacing);
  double last_node() const { return origin + spacing * static_cast<double>(count - 1); }
};

struct FilterStep {
  FilterState predictor;
  FilterState filter;
};

/// Alternates update and predict on a 1-d grid, starting with an update of
/// the discretized prior by Y_0. DegenerateUpdate carries the failing step.
std::vector<FilterStep> run_grid_filter(const HMMSpec& spec, const std::vector<Point>& observations,
                                        const Measure& prior, const GridConfig& grid);

/// Bootstrap filter with systematic resampling after every update. Records
/// the weighted cloud before resampling. Deterministic in `seed`; two runs
/// with the same seed share every random draw whatever their priors.
/// Throws ParticleDegeneracy when the effective sample size drops below 2.
std::vector<FilterStep> run_particle_filter(const HMMSpec& spec, const std::vector<Point>& observations,
                                            const Measure& prior, std::size_t n_particles, std::uint64_t seed);

/// Closed-form filter of the static Gaussian model: pi_k = N(Z_k, V_k).
struct KalmanStaticState {
  double z = 0.0;
  double v = 0.0;
  std::size_t k = 0;
};

/// Z_k = m / (1 + s2 (k+1)) + s2 (k+1) / (1 + s2 (k+1)) * mean(Y_0..Y_k),
/// V_k = s2 / (1 + s2 (k+1)), with prior N(prior_mean, s2) and unit noise.
std::vector<KalmanStaticState> kalman_static(const StaticGaussianModel& model, double prior_mean,
                                             const std::vector<double>& observations);

}  // namespace filterstab
