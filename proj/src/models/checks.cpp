#include "filterstab/checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "filterstab/errors.hpp"

namespace filterstab {

std::optional<double> CheckReport::find(const std::string& key) const {
  for (const auto& [k, v] : evidence) {
    if (k == key) return v;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// ar_kernel_tv

namespace {

struct TvQuadrature {
  double tv = 0.0;
  double mass_shifted = 0.0;
  double mass_base = 0.0;
};

// Integrates |q(A z + c)|det A| - q(z)| over the box [lo, hi] with a
// tensor-product trapezoid rule of `nodes` points per axis.
TvQuadrature integrate_tv(const DensityFn& q, const Eigen::MatrixXd& a, const Eigen::VectorXd& c,
                          const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, int nodes) {
  const int m = static_cast<int>(c.size());
  const double jac = std::abs(a.determinant());
  Eigen::VectorXd h(m);
  for (int d = 0; d < m; ++d) h[d] = (hi[d] - lo[d]) / (nodes - 1);
  long long count = 1;
  for (int d = 0; d < m; ++d) count *= nodes;

  TvQuadrature out;
  double tv_c = 0.0;
  Eigen::VectorXd z(m);
  Eigen::VectorXd u(m);
  for (long long flat = 0; flat < count; ++flat) {
    long long rest = flat;
    double w = 1.0;
    for (int d = 0; d < m; ++d) {
      const auto i = static_cast<std::size_t>(rest % nodes);
      rest /= nodes;
      z[d] = lo[d] + h[d] * static_cast<double>(i);
      w *= trapezoid_weight(i, static_cast<std::size_t>(nodes));
    }
    u.noalias() = a * z + c;
    const double p1 = q(std::span<const double>(u.data(), static_cast<std::size_t>(m))) * jac;
    const double p0 = q(std::span<const double>(z.data(), static_cast<std::size_t>(m)));
    // Neumaier-style compensation only on the TV accumulator; masses are checks.
    const double term = w * std::abs(p1 - p0);
    const double t = out.tv + term;
    tv_c += std::abs(out.tv) >= term ? (out.tv - t) + term : (term - t) + out.tv;
    out.tv = t;
    out.mass_shifted += w * p1;
    out.mass_base += w * p0;
  }
  double cell = 1.0;
  for (int d = 0; d < m; ++d) cell *= h[d];
  out.tv = (out.tv + tv_c) * cell;
  out.mass_shifted *= cell;
  out.mass_base *= cell;
  return out;
}

}  // namespace

double ar_kernel_tv(const ARKernel& kernel, const Point& x, const Point& x_prime) {
  const int m = kernel.dim();
  if (x.size() != m || x_prime.size() != m) throw DimensionError("ar_kernel_tv: state dimension mismatch");
  if (x == x_prime) return 0.0;

  const Eigen::MatrixXd s = kernel.dispersion(x);
  const Eigen::MatrixXd s_prime = kernel.dispersion(x_prime);
  const auto lu = s.partialPivLu();
  const Eigen::MatrixXd a = lu.solve(s_prime);
  const Eigen::VectorXd c = lu.solve(kernel.drift(x_prime) - kernel.drift(x));
  const double r = kernel.noise().support_radius();

  // Bounding box of {z : A z + c in [-r, r]^m}, from the images of the corners.
  const Eigen::MatrixXd a_inv = a.inverse();
  Eigen::VectorXd lo1 = Eigen::VectorXd::Constant(m, std::numeric_limits<double>::infinity());
  Eigen::VectorXd hi1 = -lo1;
  for (int corner = 0; corner < (1 << m); ++corner) {
    Eigen::VectorXd u(m);
    for (int d = 0; d < m; ++d) u[d] = (corner >> d) & 1 ? r : -r;
    const Eigen::VectorXd z = a_inv * (u - c);
    lo1 = lo1.cwiseMin(z);
    hi1 = hi1.cwiseMax(z);
  }
  for (int d = 0; d < m; ++d) {
    if (lo1[d] >= r || hi1[d] <= -r) return 2.0;
  }
  const Eigen::VectorXd lo = lo1.cwiseMin(Eigen::VectorXd::Constant(m, -r));
  const Eigen::VectorXd hi = hi1.cwiseMax(Eigen::VectorXd::Constant(m, r));

  int nodes = m == 1 ? 20001 : DensityFn::default_nodes(m);
  const int max_nodes = m == 1 ? 160001 : nodes;
  while (true) {
    const TvQuadrature result = integrate_tv(kernel.noise(), a, c, lo, hi, nodes);
    const double err = std::max(std::abs(result.mass_shifted - 1.0), std::abs(result.mass_base - 1.0));
    if (err <= 1e-4) return std::clamp(result.tv, 0.0, 2.0);
    if (nodes >= max_nodes) {
      std::ostringstream msg;
      msg << "ar_kernel_tv: quadrature mass check failed (error " << err << " with " << nodes << " nodes per axis)";
      throw NumericalError(msg.str());
    }
    nodes = 2 * nodes - 1;
  }
}

ModulusCurve kernel_tv_modulus(const ARKernel& kernel, const std::vector<double>& deltas, int probes,
                               std::uint64_t seed, double box_half_width) {
  if (probes < 1) throw std::invalid_argument("kernel_tv_modulus: probes must be >= 1");
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] >= 0.0)) throw std::invalid_argument("kernel_tv_modulus: deltas must be nonnegative");
    if (i > 0 && deltas[i] < deltas[i - 1]) throw std::invalid_argument("kernel_tv_modulus: deltas must be sorted");
  }
  const int m = kernel.dim();
  Rng rng(seed);
  std::uniform_real_distribution<double> box(-box_half_width, box_half_width);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<Point> xs;
  std::vector<Point> dirs;
  for (int p = 0; p < probes; ++p) {
    Point x(m);
    for (int d = 0; d < m; ++d) x[d] = box(rng);
    Point u(m);
    do {
      for (int d = 0; d < m; ++d) u[d] = n01(rng);
    } while (u.norm() == 0.0);
    xs.push_back(std::move(x));
    dirs.push_back(u / u.norm());
  }

  ModulusCurve curve;
  curve.deltas = deltas;
  curve.box_half_width = box_half_width;
  for (double delta : deltas) {
    double worst = 0.0;
    if (delta > 0.0) {
      for (int p = 0; p < probes; ++p) {
        worst = std::max(worst, ar_kernel_tv(kernel, xs[p], xs[p] + delta * dirs[p]));
      }
    }
    curve.values.push_back(worst);
  }
  return curve;
}

// ---------------------------------------------------------------------------
// char_fn_min

namespace {

// A 1-d density sampled on a uniform grid with trapezoid weights folded in.
struct Marginal {
  std::vector<double> z;
  std::vector<double> wq;  // trapezoid weight * spacing * density
};

Marginal marginal(const DensityFn& q, int axis, int nodes) {
  const int m = q.dim();
  const double r = q.support_radius();
  const double h = 2.0 * r / (nodes - 1);
  Marginal out;
  out.z.resize(static_cast<std::size_t>(nodes));
  out.wq.assign(static_cast<std::size_t>(nodes), 0.0);
  for (int i = 0; i < nodes; ++i) out.z[static_cast<std::size_t>(i)] = -r + h * i;
  long long count = 1;
  for (int d = 0; d < m; ++d) count *= nodes;
  std::vector<double> y(static_cast<std::size_t>(m));
  for (long long flat = 0; flat < count; ++flat) {
    long long rest = flat;
    double w = 1.0;
    std::size_t axis_index = 0;
    for (int d = 0; d < m; ++d) {
      const auto i = static_cast<std::size_t>(rest % nodes);
      rest /= nodes;
      y[static_cast<std::size_t>(d)] = -r + h * static_cast<double>(i);
      w *= trapezoid_weight(i, static_cast<std::size_t>(nodes)) * h;
      if (d == axis) axis_index = i;
    }
    out.wq[axis_index] += w * q(y);
  }
  return out;
}

double abs_phi(const Marginal& g, double t) {
  double re = 0.0;
  double im = 0.0;
  for (std::size_t j = 0; j < g.z.size(); ++j) {
    if (g.wq[j] == 0.0) continue;
    re += g.wq[j] * std::cos(t * g.z[j]);
    im += g.wq[j] * std::sin(t * g.z[j]);
  }
  return std::hypot(re, im);
}

struct AxisResult {
  double min_value = 1.0;
  double argmin = 0.0;
  double quad_error = 0.0;
  std::optional<double> zero_at;
  std::vector<std::pair<double, double>> curve;
};

AxisResult scan_axis(const DensityFn& q, int axis, double freq_max, int freq_count, double tol) {
  const int fine_nodes = q.dim() == 1 ? 20001 : DensityFn::default_nodes(q.dim());
  const int coarse_nodes = (fine_nodes + 1) / 2;
  const Marginal fine = marginal(q, axis, fine_nodes);
  const Marginal coarse = marginal(q, axis, coarse_nodes);

  AxisResult out;
  std::vector<double> ts(static_cast<std::size_t>(freq_count));
  std::vector<double> vs(static_cast<std::size_t>(freq_count));
  for (int i = 0; i < freq_count; ++i) {
    const double t = -freq_max + 2.0 * freq_max * i / (freq_count - 1);
    const double v = abs_phi(fine, t);
    out.quad_error = std::max(out.quad_error, std::abs(v - abs_phi(coarse, t)));
    ts[static_cast<std::size_t>(i)] = t;
    vs[static_cast<std::size_t>(i)] = v;
    out.curve.emplace_back(t, v);
    if (v < out.min_value) {
      out.min_value = v;
      out.argmin = t;
    }
  }
  if (out.quad_error > 1e-3) {
    std::ostringstream msg;
    msg << "char_fn_min: quadrature did not converge (resolution change moves |phi| by " << out.quad_error << ")";
    throw NumericalError(msg.str());
  }

  const double recovery = std::max(tol, 100.0 * out.quad_error);
  const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
  for (std::size_t i = 1; i + 1 < ts.size(); ++i) {
    if (!(vs[i] < vs[i - 1] && vs[i] <= vs[i + 1])) continue;
    double a = ts[i - 1];
    double b = ts[i + 1];
    double c = b - golden * (b - a);
    double d = a + golden * (b - a);
    double fc = abs_phi(fine, c);
    double fd = abs_phi(fine, d);
    for (int iter = 0; iter < 80 && b - a > 1e-12; ++iter) {
      if (fc < fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - golden * (b - a);
        fc = abs_phi(fine, c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + golden * (b - a);
        fd = abs_phi(fine, d);
      }
    }
    const double t_star = fc < fd ? c : d;
    const double v_star = std::min(fc, fd);
    if (v_star < out.min_value) {
      out.min_value = v_star;
      out.argmin = t_star;
    }
    if (v_star > tol) continue;
    double further = 0.0;
    if (ts[i] > 0.0) {
      for (std::size_t j = i + 1; j < ts.size(); ++j) further = std::max(further, vs[j]);
    } else {
      for (std::size_t j = 0; j < i; ++j) further = std::max(further, vs[j]);
    }
    if (further > recovery && (!out.zero_at || std::abs(t_star) < std::abs(*out.zero_at))) out.zero_at = t_star;
  }
  return out;
}

}  // namespace

CheckReport char_fn_min(const DensityFn& q, double freq_max, int freq_count, double tol) {
  if (!(freq_max > 0.0)) throw std::invalid_argument("char_fn_min: freq_max must be positive");
  if (freq_count < 3) throw std::invalid_argument("char_fn_min: freq_count must be >= 3");

  CheckReport report;
  report.name = "noise_fourier_nonvanishing";
  double min_value = 1.0;
  double argmin = 0.0;
  double quad_error = 0.0;
  std::optional<double> zero_at;
  for (int axis = 0; axis < q.dim(); ++axis) {
    AxisResult r = scan_axis(q, axis, freq_max, freq_count, tol);
    if (r.min_value < min_value) {
      min_value = r.min_value;
      argmin = r.argmin;
    }
    quad_error = std::max(quad_error, r.quad_error);
    if (r.zero_at && (!zero_at || std::abs(*r.zero_at) < std::abs(*zero_at))) zero_at = r.zero_at;
    if (axis == 0) report.curve = std::move(r.curve);
  }
  report.pass = !zero_at.has_value();
  report.evidence = {{"min_abs_phi", min_value}, {"argmin_t", argmin},       {"freq_max", freq_max},
                     {"freq_count", freq_count}, {"tolerance", tol}, {"quadrature_error", quad_error}};
  if (zero_at) report.evidence.emplace_back("zero_at", *zero_at);
  std::ostringstream notes;
  notes << "window [" << -freq_max << ", " << freq_max << "]; finite-window heuristic, not a proof";
  if (q.dim() > 1) notes << "; checked along coordinate axes via marginals";
  if (zero_at) notes << "; |phi| vanishes near t = " << *zero_at;
  report.notes = notes.str();
  return report;
}

// ---------------------------------------------------------------------------
// assumption_report

namespace {

Point uniform_point(int dim, double half_width, Rng& rng) {
  std::uniform_real_distribution<double> u(-half_width, half_width);
  Point x(dim);
  for (int d = 0; d < dim; ++d) x[d] = u(rng);
  return x;
}

CheckReport inverse_roundtrip(const ObservationChannel& channel, const AssumptionOptions& opt) {
  Rng rng(opt.seed);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const Point x = uniform_point(channel.state_dim(), opt.box_half_width, rng);
    worst = std::max(worst, (channel.h_inverse(channel.h(x)) - x).norm());
  }
  CheckReport r;
  r.name = "h_inverse_roundtrip";
  r.pass = worst <= 1e-9;
  r.evidence = {{"max_error", worst}, {"samples", 200.0}, {"box_half_width", opt.box_half_width}};
  r.notes = r.pass ? "h_inverse(h(x)) = x on sampled states" : "h_inverse(h(x)) differs from x: h is not inverted";
  return r;
}

CheckReport inverse_continuity(const ObservationChannel& channel, const AssumptionOptions& opt) {
  Rng rng(opt.seed + 1);
  std::normal_distribution<double> n01(0.0, 1.0);
  const std::vector<double> gaps{1.0, 0.1, 0.01, 0.001};
  CheckReport r;
  r.name = "h_inverse_continuity";
  for (double gap : gaps) {
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
      const Point y = uniform_point(channel.obs_dim(), opt.box_half_width, rng);
      Point u(channel.obs_dim());
      for (int d = 0; d < u.size(); ++d) u[d] = n01(rng);
      if (u.norm() == 0.0) continue;
      const Point y2 = y + gap * u / u.norm();
      worst = std::max(worst, (channel.h_inverse(y) - channel.h_inverse(y2)).norm());
    }
    r.curve.emplace_back(gap, worst);
  }
  const double first = r.curve.front().second;
  const double last = r.curve.back().second;
  r.pass = std::isfinite(last) && last <= 0.01 * std::max(1.0, first);
  r.evidence = {{"modulus_at_1", first}, {"modulus_at_0.001", last}};
  r.notes = "max |h_inverse(y) - h_inverse(y')| over sampled pairs at |y - y'| in {1, 0.1, 0.01, 0.001}";
  return r;
}

CheckReport noise_normalization(const DensityFn& q) {
  CheckReport r;
  r.name = "noise_normalization";
  const double mass = q.mass();
  r.pass = std::abs(mass - 1.0) <= 1e-6;
  r.evidence = {{"mass", mass}, {"support_radius", q.support_radius()}};
  r.notes = "trapezoid integral of q_xi over its declared support";
  return r;
}

CheckReport kernel_modulus_report(const TransitionKernel& kernel, const AssumptionOptions& opt) {
  CheckReport r;
  r.name = "kernel_tv_modulus";
  if (kernel.is_identity()) {
    r.pass = false;
    r.evidence = {{"modulus_at_0.001", 2.0}};
    r.notes = "identity kernel: P(x, .) is a point mass, so the TV modulus is 2 for every delta > 0";
    return r;
  }
  const ARKernel* ar = kernel.ar();
  std::vector<double> deltas;
  for (int k = 0; k <= 10; ++k) deltas.push_back(0.001 * std::ldexp(1.0, k));
  const ModulusCurve curve = kernel_tv_modulus(*ar, deltas, opt.modulus_probes, opt.seed + 2, opt.box_half_width);
  bool monotone = true;
  for (std::size_t i = 1; i < curve.values.size(); ++i) {
    monotone = monotone && curve.values[i - 1] <= curve.values[i] + 1e-3;
    r.curve.emplace_back(curve.deltas[i - 1], curve.values[i - 1]);
  }
  r.curve.emplace_back(curve.deltas.back(), curve.values.back());
  const double at_min = curve.values.front();
  r.pass = at_min < 0.01 && monotone;
  r.evidence = {{"modulus_at_0.001", at_min},
                {"modulus_at_1.024", curve.values.back()},
                {"halving_monotone", monotone ? 1.0 : 0.0},
                {"probes", opt.modulus_probes},
                {"box_half_width", opt.box_half_width}};
  r.notes = "empirical lower estimate of sup TV(P(x,.), P(x',.)) over |x - x'| = delta along a halving sequence";
  return r;
}

}  // namespace

std::vector<CheckReport> assumption_report(const HMMSpec& spec, const AssumptionOptions& options) {
  std::vector<CheckReport> reports;
  reports.push_back(inverse_roundtrip(spec.channel, options));
  reports.push_back(inverse_continuity(spec.channel, options));
  reports.push_back(noise_normalization(spec.channel.noise()));
  try {
    reports.push_back(char_fn_min(spec.channel.noise(), options.freq_max, options.freq_count));
  } catch (const std::exception& e) {
    CheckReport r;
    r.name = "noise_fourier_nonvanishing";
    r.pass = false;
    r.evidence = {{"freq_max", options.freq_max}};
    r.notes = e.what();
    reports.push_back(std::move(r));
  }
  if (spec.kernel.is_identity() || spec.kernel.ar() != nullptr) {
    try {
      reports.push_back(kernel_modulus_report(spec.kernel, options));
    } catch (const std::exception& e) {
      CheckReport r;
      r.name = "kernel_tv_modulus";
      r.pass = false;
      r.evidence = {{"probes", options.modulus_probes}};
      r.notes = e.what();
      reports.push_back(std::move(r));
    }
  }
  return reports;
}

}  // namespace filterstab
