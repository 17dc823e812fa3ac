#include "filterstab/stability.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "filterstab/errors.hpp"

namespace filterstab {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kFilterStream = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kDrawStream = 0xd1b54a32d192ed03ULL;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

[[noreturn]] void rethrow_tagged(const char* tag, std::size_t step, const std::exception& e) {
  std::ostringstream msg;
  msg << "prior " << tag << ", step " << step << ": " << e.what();
  if (const auto* d = dynamic_cast<const DegenerateUpdate*>(&e)) {
    throw DegenerateUpdate(msg.str(), d->observation(), static_cast<std::ptrdiff_t>(step));
  }
  if (dynamic_cast<const ParticleDegeneracy*>(&e) != nullptr) {
    throw ParticleDegeneracy(msg.str(), static_cast<std::ptrdiff_t>(step));
  }
  throw;
}

FilterState tagged_update(const FilterState& predictor, const Point& y, const ObservationChannel& channel,
                          const char* tag, std::size_t step) {
  try {
    return update(predictor, y, channel);
  } catch (const DegenerateUpdate& e) {
    rethrow_tagged(tag, step, e);
  }
}

void grid_distances(const GridDensity& a, const GridDensity& b, bool want_bl, bool want_tv,
                    std::optional<double>& bl, std::optional<double>& tv) {
  if (want_tv) tv = tv_distance(a, b);
  if (want_bl) bl = bl_distance(to_discrete(a), to_discrete(b));
}

void cloud_distances(const DiscreteMeasure& a, const DiscreteMeasure& b, const GridConfig& grid, bool want_bl,
                     bool want_tv, std::optional<double>& bl, std::optional<double>& tv) {
  if (want_bl) bl = bl_distance(a, b);
  if (want_tv) {
    tv = tv_distance(discretize(a, grid.origin, grid.spacing, grid.count),
                     discretize(b, grid.origin, grid.spacing, grid.count));
  }
}

void twin_grid(const TwinRunConfig& c, StabilityTrace& out, Clock::time_point start) {
  const auto& g = c.grid;
  FilterState pm = initial_predictor(discretize(c.prior_mu, g.origin, g.spacing, g.count));
  FilterState pn = initial_predictor(discretize(c.prior_nu, g.origin, g.spacing, g.count));
  FilterState fm = pm;
  FilterState fn = pn;
  for (std::size_t n = 0; n < c.horizon; ++n) {
    if (n > 0) {
      pm = predict(fm, c.spec.kernel);
      pn = predict(fn, c.spec.kernel);
    }
    const Point& y = out.path.observations[n];
    fm = tagged_update(pm, y, c.spec.channel, "mu", n);
    fn = tagged_update(pn, y, c.spec.channel, "nu", n);
    TraceRow row;
    row.step = n;
    grid_distances(std::get<GridDensity>(fm.measure), std::get<GridDensity>(fn.measure), c.record_bl, c.record_tv,
                   row.bl, row.tv);
    if (c.record_predictor) {
      grid_distances(std::get<GridDensity>(pm.measure), std::get<GridDensity>(pn.measure), c.record_bl,
                     c.record_tv, row.predictor_bl, row.predictor_tv);
    }
    row.wall_seconds = seconds_since(start);
    out.rows.push_back(row);
  }
}

void twin_particle(const TwinRunConfig& c, StabilityTrace& out, Clock::time_point start) {
  const std::uint64_t filter_seed = c.seed ^ kFilterStream;
  std::vector<FilterStep> mu;
  std::vector<FilterStep> nu;
  try {
    mu = run_particle_filter(c.spec, out.path.observations, c.prior_mu, c.n_particles, filter_seed);
  } catch (const DegenerateUpdate& e) {
    rethrow_tagged("mu", static_cast<std::size_t>(std::max<std::ptrdiff_t>(e.step(), 0)), e);
  } catch (const ParticleDegeneracy& e) {
    rethrow_tagged("mu", static_cast<std::size_t>(std::max<std::ptrdiff_t>(e.step(), 0)), e);
  }
  try {
    nu = run_particle_filter(c.spec, out.path.observations, c.prior_nu, c.n_particles, filter_seed);
  } catch (const DegenerateUpdate& e) {
    rethrow_tagged("nu", static_cast<std::size_t>(std::max<std::ptrdiff_t>(e.step(), 0)), e);
  } catch (const ParticleDegeneracy& e) {
    rethrow_tagged("nu", static_cast<std::size_t>(std::max<std::ptrdiff_t>(e.step(), 0)), e);
  }
  for (std::size_t n = 0; n < c.horizon; ++n) {
    TraceRow row;
    row.step = n;
    cloud_distances(std::get<DiscreteMeasure>(mu[n].filter.measure), std::get<DiscreteMeasure>(nu[n].filter.measure),
                    c.grid, c.record_bl, c.record_tv, row.bl, row.tv);
    if (c.record_predictor) {
      cloud_distances(std::get<DiscreteMeasure>(mu[n].predictor.measure),
                      std::get<DiscreteMeasure>(nu[n].predictor.measure), c.grid, c.record_bl, c.record_tv,
                      row.predictor_bl, row.predictor_tv);
    }
    row.wall_seconds = seconds_since(start);
    out.rows.push_back(row);
  }
}

const GaussianMeasure& scalar_gaussian(const Measure& m, const char* tag) {
  const auto* g = std::get_if<GaussianMeasure>(&m);
  if (g == nullptr || g->dim() != 1) {
    throw std::invalid_argument(std::string("kalman-static: prior ") + tag + " must be a 1-d Gaussian");
  }
  return *g;
}

void twin_kalman(const TwinRunConfig& c, StabilityTrace& out, Clock::time_point start) {
  if (!c.spec.kernel.is_identity()) throw std::invalid_argument("kalman-static: signal must be static");
  const auto gain = c.spec.channel.linear_gain();
  const auto noise = c.spec.channel.noise().gaussian_std();
  if (!gain || *gain != 1.0 || !noise || *noise != 1.0) {
    throw std::invalid_argument("kalman-static: channel must be y = x + N(0, 1)");
  }
  const GaussianMeasure& a = scalar_gaussian(c.prior_mu, "mu");
  const GaussianMeasure& b = scalar_gaussian(c.prior_nu, "nu");
  if (a.variance[0] != b.variance[0]) throw std::invalid_argument("kalman-static: priors must share their variance");
  const StaticGaussianModel model{a.mean[0], b.mean[0], a.variance[0]};
  const std::vector<double> ys = out.path.observations_1d();
  const auto km = kalman_static(model, model.alpha, ys);
  const auto kn = kalman_static(model, model.beta, ys);
  for (std::size_t n = 0; n < c.horizon; ++n) {
    TraceRow row;
    row.step = n;
    const double v = km[n].v;
    if (c.record_tv) row.tv = same_variance_gaussian_tv(km[n].z - kn[n].z, std::sqrt(v));
    if (c.record_bl) row.bl = gaussian_pair_bl(km[n].z, kn[n].z, v);
    row.cos_lower = cos_bl_lower_bound(km[n].z, v, kn[n].z);
    if (c.record_predictor) {
      const double zm = n == 0 ? model.alpha : km[n - 1].z;
      const double zn = n == 0 ? model.beta : kn[n - 1].z;
      const double pv = n == 0 ? model.sigma2 : km[n - 1].v;
      if (c.record_tv) row.predictor_tv = same_variance_gaussian_tv(zm - zn, std::sqrt(pv));
      if (c.record_bl) row.predictor_bl = gaussian_pair_bl(zm, zn, pv);
    }
    row.wall_seconds = seconds_since(start);
    out.rows.push_back(row);
  }
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit fit;
  fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  // A constant response is fitted perfectly.
  fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::grid:
      return "grid";
    case Method::particle:
      return "particle";
    case Method::kalman_static:
      return "kalman-static";
  }
  return "grid";
}

Method parse_method(const std::string& name) {
  if (name == "grid") return Method::grid;
  if (name == "particle") return Method::particle;
  if (name == "kalman-static") return Method::kalman_static;
  throw std::invalid_argument("unknown method '" + name + "' (expected grid, particle or kalman-static)");
}

TwinRunConfig::TwinRunConfig(HMMSpec s, Measure mu, Measure nu)
    : spec(std::move(s)), prior_mu(std::move(mu)), prior_nu(std::move(nu)) {}

std::vector<double> StabilityTrace::column(const std::string& name) const {
  std::optional<double> TraceRow::*field = nullptr;
  if (name == "bl") field = &TraceRow::bl;
  if (name == "tv") field = &TraceRow::tv;
  if (name == "predictor_bl") field = &TraceRow::predictor_bl;
  if (name == "predictor_tv") field = &TraceRow::predictor_tv;
  if (name == "cos_lower") field = &TraceRow::cos_lower;
  if (field == nullptr) throw std::invalid_argument("unknown trace column '" + name + "'");
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back((row.*field).value_or(std::numeric_limits<double>::quiet_NaN()));
  return out;
}

StabilityTrace twin_run(const TwinRunConfig& c) {
  if (c.horizon < 1) throw std::invalid_argument("twin_run: horizon must be >= 1");
  if (measure_dim(c.prior_mu) != c.spec.state_dim() || measure_dim(c.prior_nu) != c.spec.state_dim()) {
    throw DimensionError("twin_run: prior dimension differs from state dimension");
  }
  const auto start = Clock::now();
  StabilityTrace out;
  out.path = simulate_path(c.spec, c.observation_prior.value_or(c.prior_mu), c.horizon, c.seed);
  out.rows.reserve(c.horizon);
  switch (c.method) {
    case Method::grid:
      twin_grid(c, out, start);
      break;
    case Method::particle:
      twin_particle(c, out, start);
      break;
    case Method::kalman_static:
      twin_kalman(c, out, start);
      break;
  }
  return out;
}

double gaussian_pair_bl(double z_mu, double z_nu, double v) {
  if (!(v >= 0.0)) throw std::invalid_argument("gaussian_pair_bl: variance must be >= 0");
  if (v == 0.0) return bl_distance(DiscreteMeasure::dirac(z_mu), DiscreteMeasure::dirac(z_nu));
  // Both laws share one node pattern relative to their means, so their
  // discretizations are exact translates of each other.
  const double s = std::sqrt(v);
  const double h = s / 50.0;
  const auto half = static_cast<long>(std::ceil(gaussian_radius(s) / h));
  std::vector<double> offsets;
  std::vector<double> weights;
  for (long k = -half; k <= half; ++k) {
    const double u = static_cast<double>(k) * h;
    offsets.push_back(u);
    weights.push_back(normal_pdf(u / s));
  }
  std::vector<double> xa(offsets.size());
  std::vector<double> xb(offsets.size());
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    xa[i] = z_mu + offsets[i];
    xb[i] = z_nu + offsets[i];
  }
  return bl_distance(DiscreteMeasure::make_1d(xa, weights), DiscreteMeasure::make_1d(xb, weights));
}

double cos_bl_lower_bound(double z_mu, double v, double z_nu) {
  if (!(v >= 0.0)) throw std::invalid_argument("cos_bl_lower_bound: variance must be >= 0");
  return std::exp(-0.5 * v) * std::abs(std::cos(z_mu) - std::cos(z_nu));
}

std::string to_string(RateClass c) {
  switch (c) {
    case RateClass::polynomial:
      return "polynomial";
    case RateClass::exponential:
      return "exponential";
    case RateClass::non_decaying:
      return "non-decaying";
  }
  return "non-decaying";
}

RateFit estimate_rate(const std::vector<double>& values, std::size_t n_min, std::size_t n_max) {
  if (values.empty()) throw std::invalid_argument("estimate_rate: empty trace");
  RateFit fit;
  fit.n_min = std::max<std::size_t>(n_min, 1);
  fit.n_max = std::min(n_max, values.size() - 1);
  if (fit.n_min > fit.n_max) throw std::invalid_argument("estimate_rate: empty window");
  std::vector<double> log_n;
  std::vector<double> n_lin;
  std::vector<double> log_d;
  for (std::size_t n = fit.n_min; n <= fit.n_max; ++n) {
    const double d = values[n];
    if (!(d > 0.0) || !std::isfinite(d)) {
      ++fit.excluded;
      continue;
    }
    log_n.push_back(std::log(static_cast<double>(n)));
    n_lin.push_back(static_cast<double>(n));
    log_d.push_back(std::log(d));
  }
  fit.points = log_d.size();
  if (fit.points < 5) {
    throw std::invalid_argument("estimate_rate: fewer than 5 usable points (" + std::to_string(fit.points) + ")");
  }
  const LineFit loglog = least_squares(log_n, log_d);
  const LineFit loglin = least_squares(n_lin, log_d);
  fit.slope = loglog.slope;
  fit.intercept = loglog.intercept;
  fit.r2 = loglog.r2;
  fit.linear_slope = loglin.slope;
  fit.linear_r2 = loglin.r2;
  if (loglin.r2 >= 0.98 && loglin.r2 >= loglog.r2 + 0.02 && loglin.slope < 0.0) {
    fit.classification = RateClass::exponential;
  } else if (std::abs(loglog.slope) < 0.1) {
    fit.classification = RateClass::non_decaying;
  } else {
    fit.classification = RateClass::polynomial;
  }
  return fit;
}

RateFit estimate_rate(const std::vector<double>& values) {
  const std::size_t n = values.size();
  return estimate_rate(values, std::max<std::size_t>(1, n / 10), n == 0 ? 0 : n - 1);
}

LiminfEstimate liminf_constant(const StabilityTrace& trace, const StaticGaussianModel& model, double x0,
                               double tail_fraction) {
  model.validate();
  if (!(model.sigma2 > 0.0)) throw std::invalid_argument("liminf_constant: sigma2 must be positive");
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) throw std::invalid_argument("liminf_constant: tail fraction");
  const std::size_t size = trace.size();
  if (size < 2) throw std::invalid_argument("liminf_constant: trace too short");
  const auto tail = static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(size)));
  LiminfEstimate est;
  est.n_min = std::max<std::size_t>(1, size - std::min(tail, size));
  est.n_max = size - 1;
  est.target = std::abs(model.beta - model.alpha) / model.sigma2 * std::abs(std::sin(x0));
  est.estimate = std::numeric_limits<double>::infinity();
  for (std::size_t n = est.n_min; n <= est.n_max; ++n) {
    const auto& c = trace.rows[n].cos_lower;
    if (!c) throw std::invalid_argument("liminf_constant: trace has no cos_lower column");
    est.estimate = std::min(est.estimate, static_cast<double>(n) * *c);
  }
  return est;
}

BoundCheck check_coupling_bound(const DiscreteMeasure& rho, const DiscreteMeasure& rho_prime,
                                const Eigen::MatrixXd& coupling, const ObservationChannel& channel,
                                const GridConfig& y_grid) {
  if (channel.obs_dim() != 1 || channel.state_dim() != 1 || rho.dim() != 1 || rho_prime.dim() != 1) {
    throw DimensionError("check_coupling_bound: one-dimensional channels only");
  }
  const std::size_t na = rho.size();
  const std::size_t nb = rho_prime.size();
  if (static_cast<std::size_t>(coupling.rows()) != na || static_cast<std::size_t>(coupling.cols()) != nb) {
    throw std::invalid_argument("check_coupling_bound: coupling shape does not match the measures");
  }
  if ((coupling.array() < 0.0).any()) throw std::invalid_argument("check_coupling_bound: negative coupling weight");
  for (std::size_t i = 0; i < na; ++i) {
    if (std::abs(coupling.row(static_cast<Eigen::Index>(i)).sum() - rho.weights()[i]) > 1e-9) {
      throw std::invalid_argument("check_coupling_bound: first marginal differs from rho");
    }
  }
  for (std::size_t j = 0; j < nb; ++j) {
    if (std::abs(coupling.col(static_cast<Eigen::Index>(j)).sum() - rho_prime.weights()[j]) > 1e-9) {
      throw std::invalid_argument("check_coupling_bound: second marginal differs from rho_prime");
    }
  }

  const DensityFn& q = channel.noise();
  std::vector<double> xa(na);
  std::vector<double> xb(nb);
  std::vector<double> ua(na);
  std::vector<double> ub(nb);
  for (std::size_t i = 0; i < na; ++i) {
    xa[i] = rho.atoms()[i][0];
    ua[i] = channel.h_inverse(rho.atoms()[i])[0];
  }
  for (std::size_t j = 0; j < nb; ++j) {
    xb[j] = rho_prime.atoms()[j][0];
    ub[j] = channel.h_inverse(rho_prime.atoms()[j])[0];
  }

  BoundCheck out;
  std::vector<double> qa(na);
  std::vector<double> qb(nb);
  std::vector<std::pair<double, double>> atoms;
  std::vector<double> xs;
  std::vector<double> ws;
  Eigen::VectorXd mass_a = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(na));
  Eigen::MatrixXd gap = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(na), static_cast<Eigen::Index>(nb));
  for (std::size_t k = 0; k < y_grid.count; ++k) {
    const double y = y_grid.origin + y_grid.spacing * static_cast<double>(k);
    const double wdy = trapezoid_weight(k, y_grid.count) * y_grid.spacing;
    double qr = 0.0;
    double qr_prime = 0.0;
    for (std::size_t i = 0; i < na; ++i) {
      qa[i] = q(y - xa[i]);
      qr += qa[i] * rho.weights()[i];
      mass_a[static_cast<Eigen::Index>(i)] += wdy * qa[i];
    }
    for (std::size_t j = 0; j < nb; ++j) {
      qb[j] = q(y - xb[j]);
      qr_prime += qb[j] * rho_prime.weights()[j];
    }
    for (std::size_t i = 0; i < na; ++i) {
      for (std::size_t j = 0; j < nb; ++j) {
        gap(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += wdy * std::abs(qa[i] - qb[j]);
      }
    }

    // Signed weights of the linear functional f -> sum w f(u); with the 0/0 = 1
    // convention the rho' term collapses to the constant -Q_rho(y).
    atoms.clear();
    double constant = 0.0;
    for (std::size_t i = 0; i < na; ++i) atoms.emplace_back(ua[i], qa[i] * rho.weights()[i]);
    if (qr_prime > 0.0) {
      for (std::size_t j = 0; j < nb; ++j) atoms.emplace_back(ub[j], -qr * (qb[j] * rho_prime.weights()[j] / qr_prime));
    } else {
      constant = -qr;
    }
    std::sort(atoms.begin(), atoms.end());
    xs.clear();
    ws.clear();
    for (const auto& [u, w] : atoms) {
      if (!xs.empty() && xs.back() == u) {
        ws.back() += w;
      } else {
        xs.push_back(u);
        ws.push_back(w);
      }
    }
    // The Lipschitz ball is symmetric, so sup |L f + c| = sup L f + |c|.
    out.lhs += wdy * (lipschitz_ball_sup_line(xs, ws) + std::abs(constant));
  }

  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t j = 0; j < nb; ++j) {
      const double p = coupling(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (p == 0.0) continue;
      const double d = std::min(std::abs(ua[i] - ub[j]), 2.0);
      out.rhs += p * (d * mass_a[static_cast<Eigen::Index>(i)] +
                      2.0 * gap(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
  }
  out.pass = out.lhs <= out.rhs + 1e-6;
  return out;
}

PredictorTvCheck filter_predictor_tv_check(const HMMSpec& spec, const Measure& prior_mu, const Measure& prior_nu,
                                           std::size_t n, std::size_t draws, std::uint64_t seed,
                                           const GridConfig& grid) {
  if (draws < 2) throw std::invalid_argument("filter_predictor_tv_check: need at least 2 draws");
  FilterState pm = initial_predictor(discretize(prior_mu, grid.origin, grid.spacing, grid.count));
  FilterState pn = initial_predictor(discretize(prior_nu, grid.origin, grid.spacing, grid.count));
  if (n > 0) {
    const Path path = simulate_path(spec, prior_mu, n, seed);
    const auto mu = run_grid_filter(spec, path.observations, prior_mu, grid);
    const auto nu = run_grid_filter(spec, path.observations, prior_nu, grid);
    pm = predict(mu.back().filter, spec.kernel);
    pn = predict(nu.back().filter, spec.kernel);
  }

  PredictorTvCheck out;
  out.rhs = 2.0 * tv_distance(pm.measure, pn.measure);
  Rng rng(seed ^ kDrawStream);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t k = 0; k < draws; ++k) {
    const Point x = sample_measure(pm.measure, rng);
    Point y = spec.channel.h(x);
    Point xi(spec.obs_dim());
    spec.channel.noise().sample(rng, std::span<double>(xi.data(), static_cast<std::size_t>(xi.size())));
    y += xi;
    try {
      const double tv = tv_distance(update(pm, y, spec.channel).measure, update(pn, y, spec.channel).measure);
      sum += tv;
      sum_sq += tv * tv;
      ++out.draws;
    } catch (const DegenerateUpdate&) {
      ++out.excluded;
    }
  }
  if (out.draws < 2) throw NumericalError("filter_predictor_tv_check: too many degenerate draws");
  const double m = static_cast<double>(out.draws);
  out.lhs = sum / m;
  const double var = std::max(0.0, (sum_sq - m * out.lhs * out.lhs) / (m - 1.0));
  out.standard_error = std::sqrt(var / m);
  out.pass = out.lhs <= out.rhs + 3.0 * out.standard_error;
  return out;
}

}  // namespace filterstab
