#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "filterstab/filters.hpp"

namespace filterstab {

enum class Method { grid, particle, kalman_static };

std::string to_string(Method m);
/// Accepts "grid", "particle", "kalman-static"; throws std::invalid_argument otherwise.
Method parse_method(const std::string& name);

struct TwinRunConfig {
  HMMSpec spec;
  Measure prior_mu;
  Measure prior_nu;
  std::size_t horizon = 100;
  std::uint64_t seed = 0;
  Method method = Method::grid;
  bool record_bl = true;
  bool record_tv = true;
  bool record_predictor = false;
  GridConfig grid;
  std::size_t n_particles = 1000;
  /// Law of X_0 for the simulated path; defaults to prior_mu.
  std::optional<Measure> observation_prior;

  TwinRunConfig(HMMSpec spec, Measure prior_mu, Measure prior_nu);
};

struct TraceRow {
  std::size_t step = 0;
  std::optional<double> bl;
  std::optional<double> tv;
  std::optional<double> predictor_bl;
  std::optional<double> predictor_tv;
  std::optional<double> cos_lower;
  double wall_seconds = 0.0;  ///< elapsed since the start of the run
};

struct StabilityTrace {
  std::vector<TraceRow> rows;
  Path path;

  std::size_t size() const noexcept { return rows.size(); }
  double x0() const { return path.states.at(0)[0]; }
  /// Column by CSV name ("bl", "tv", "predictor_bl", "predictor_tv", "cos_lower");
  /// absent entries are NaN.
  std::vector<double> column(const std::string& name) const;
};

/// Simulates one path from the observation prior and runs two filters, from
/// prior_mu and prior_nu, on its observations. Particle twins share every
/// random draw. DegenerateUpdate is rethrown with the step and prior tag.
StabilityTrace twin_run(const TwinRunConfig& config);

/// BL distance between N(z_mu, v) and N(z_nu, v) on a shared grid of spacing
/// sqrt(v) / 50; exact bl_distance of point masses when v = 0.
double gaussian_pair_bl(double z_mu, double z_nu, double v);

/// e^{-v/2} |cos z_mu - cos z_nu|: the integral of the test function cos
/// against the two Gaussians, hence a lower bound for their BL distance.
double cos_bl_lower_bound(double z_mu, double v, double z_nu);

enum class RateClass { polynomial, exponential, non_decaying };
std::string to_string(RateClass c);

struct RateFit {
  double slope = 0.0;        ///< of log d_n against log n
  double intercept = 0.0;
  double r2 = 0.0;
  double linear_slope = 0.0;  ///< of log d_n against n
  double linear_r2 = 0.0;
  RateClass classification = RateClass::non_decaying;
  std::size_t n_min = 0;
  std::size_t n_max = 0;
  std::size_t points = 0;
  std::size_t excluded = 0;  ///< zero or non-finite entries skipped
};

/// Least-squares rate fit of values[n] over n in [n_min, n_max] (n >= 1).
///
/// Exponential when the log-linear fit has r2 >= 0.98, beats the log-log r2 by
/// at least 0.02 and decays; otherwise non-decaying when |slope| < 0.1;
/// otherwise polynomial. Throws std::invalid_argument with fewer than 5 usable points.
RateFit estimate_rate(const std::vector<double>& values, std::size_t n_min, std::size_t n_max);

/// Default window [max(1, N/10), N - 1].
RateFit estimate_rate(const std::vector<double>& values);

struct LiminfEstimate {
  double estimate = 0.0;  ///< min over the tail window of n * cos_lower_n
  double target = 0.0;    ///< |beta - alpha| / sigma2 * |sin x0|
  std::size_t n_min = 0;
  std::size_t n_max = 0;
};

/// Tail window is the last ceil(tail_fraction * N) steps.
LiminfEstimate liminf_constant(const StabilityTrace& trace, const StaticGaussianModel& model, double x0,
                               double tail_fraction = 0.5);

struct BoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
};

/// Coupling inequality for measures rho, rho' on the observation line, with
/// coupling(i, j) the joint weight of (rho atom i, rho' atom j) in canonical
/// atom order. The y-integrals of both sides use the trapezoid rule on
/// `y_grid`; test functions live on the atoms mapped through h_inverse.
/// Throws std::invalid_argument when the marginals differ by more than 1e-9.
BoundCheck check_coupling_bound(const DiscreteMeasure& rho, const DiscreteMeasure& rho_prime,
                                const Eigen::MatrixXd& coupling, const ObservationChannel& channel,
                                const GridConfig& y_grid);

struct PredictorTvCheck {
  double lhs = 0.0;  ///< mean TV of the two filters over fresh draws of Y_n
  double standard_error = 0.0;
  double rhs = 0.0;  ///< 2 * TV of the two predictors
  bool pass = false;
  std::size_t draws = 0;
  std::size_t excluded = 0;  ///< draws whose update degenerated
};

/// Freezes Y_0..Y_{n-1} from a path under prior_mu, then averages the filter
/// TV at step n over `draws` observations drawn from the prior_mu predictive.
/// Grid method; pass = lhs <= rhs + 3 standard errors.
PredictorTvCheck filter_predictor_tv_check(const HMMSpec& spec, const Measure& prior_mu, const Measure& prior_nu,
                                           std::size_t n, std::size_t draws, std::uint64_t seed,
                                           const GridConfig& grid);

}  // namespace filterstab
