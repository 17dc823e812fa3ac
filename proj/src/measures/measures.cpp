#include "filterstab/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "filterstab/errors.hpp"

namespace filterstab {

namespace {

bool lex_less(const Point& x, const Point& y) {
  return std::lexicographical_compare(x.data(), x.data() + x.size(), y.data(), y.data() + y.size());
}

bool is_point_mass(const GaussianMeasure& g) { return (g.variance.array() == 0.0).all(); }

}  // namespace

// ---------------------------------------------------------------------------
// DiscreteMeasure

DiscreteMeasure DiscreteMeasure::make(std::vector<Point> atoms, std::vector<double> weights) {
  if (atoms.size() != weights.size()) throw std::invalid_argument("DiscreteMeasure: atoms/weights size mismatch");
  if (atoms.empty()) throw std::invalid_argument("DiscreteMeasure: empty measure");
  const auto dim = atoms.front().size();
  if (dim < 1) throw DimensionError("DiscreteMeasure: zero-dimensional atom");
  double total = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (atoms[i].size() != dim) throw DimensionError("DiscreteMeasure: mixed atom dimensions");
    if (!atoms[i].allFinite()) throw std::invalid_argument("DiscreteMeasure: non-finite atom");
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
      throw std::invalid_argument("DiscreteMeasure: weights must be finite and nonnegative");
    }
    total += weights[i];
  }
  if (!(total > 0.0)) throw std::invalid_argument("DiscreteMeasure: total weight is zero");

  std::vector<std::size_t> order(atoms.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return lex_less(atoms[a], atoms[b]); });

  DiscreteMeasure m;
  m.dim_ = static_cast<int>(dim);
  for (std::size_t k : order) {
    if (weights[k] == 0.0) continue;
    if (!m.atoms_.empty() && m.atoms_.back() == atoms[k]) {
      m.weights_.back() += weights[k];
    } else {
      m.atoms_.push_back(std::move(atoms[k]));
      m.weights_.push_back(weights[k]);
    }
  }
  const double sum = compensated_sum(m.weights_);
  for (double& w : m.weights_) w /= sum;
  return m;
}

DiscreteMeasure DiscreteMeasure::make_1d(std::span<const double> atoms, std::span<const double> weights) {
  std::vector<Point> pts;
  pts.reserve(atoms.size());
  for (double x : atoms) pts.push_back(point1(x));
  return make(std::move(pts), std::vector<double>(weights.begin(), weights.end()));
}

DiscreteMeasure DiscreteMeasure::dirac(const Point& x) { return make({x}, {1.0}); }

std::vector<double> DiscreteMeasure::coordinates() const {
  std::vector<double> xs(atoms_.size());
  for (std::size_t i = 0; i < atoms_.size(); ++i) xs[i] = atoms_[i][0];
  return xs;
}

Point DiscreteMeasure::mean() const {
  Point m = Point::Zero(dim_);
  for (std::size_t i = 0; i < atoms_.size(); ++i) m += weights_[i] * atoms_[i];
  return m;
}

// ---------------------------------------------------------------------------
// GridDensity

GridDensity GridDensity::make(double origin, double spacing, std::vector<double> values) {
  if (!(spacing > 0.0) || !std::isfinite(spacing)) throw std::invalid_argument("GridDensity: spacing must be positive");
  if (!std::isfinite(origin)) throw std::invalid_argument("GridDensity: origin must be finite");
  if (values.empty()) throw std::invalid_argument("GridDensity: no nodes");
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("GridDensity: values must be finite and nonnegative");
  }
  const double total = compensated_sum(values) * spacing;
  if (!(total > 0.0)) throw NumericalError("GridDensity: zero total mass");
  for (double& v : values) v /= total;
  GridDensity g;
  g.origin_ = origin;
  g.spacing_ = spacing;
  g.values_ = std::move(values);
  return g;
}

double GridDensity::mass() const { return compensated_sum(values_) * spacing_; }

double GridDensity::mean() const {
  double s = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) s += node(i) * values_[i];
  return s * spacing_;
}

double GridDensity::variance() const {
  const double mu = mean();
  double s = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const double d = node(i) - mu;
    s += d * d * values_[i];
  }
  return s * spacing_;
}

// ---------------------------------------------------------------------------
// GaussianMeasure

GaussianMeasure GaussianMeasure::make(Eigen::VectorXd mean, Eigen::VectorXd variance) {
  if (mean.size() < 1 || mean.size() != variance.size()) throw DimensionError("GaussianMeasure: mean/variance size");
  if (!mean.allFinite() || !variance.allFinite() || (variance.array() < 0.0).any()) {
    throw std::invalid_argument("GaussianMeasure: variance entries must be finite and >= 0");
  }
  return GaussianMeasure{std::move(mean), std::move(variance)};
}

GaussianMeasure GaussianMeasure::make_1d(double mean, double variance) {
  return make(Eigen::VectorXd::Constant(1, mean), Eigen::VectorXd::Constant(1, variance));
}

// ---------------------------------------------------------------------------
// Helpers over the variant

int measure_dim(const Measure& m) {
  return std::visit(
      [](const auto& x) -> int {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, GridDensity>) {
          return 1;
        } else {
          return x.dim();
        }
      },
      m);
}

double measure_mean(const Measure& m) {
  return std::visit(
      [](const auto& x) -> double {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, GridDensity>) {
          return x.mean();
        } else if constexpr (std::is_same_v<T, DiscreteMeasure>) {
          return x.mean()[0];
        } else {
          return x.mean[0];
        }
      },
      m);
}

Point sample_measure(const Measure& m, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (const auto* g = std::get_if<GaussianMeasure>(&m)) {
    std::normal_distribution<double> n01(0.0, 1.0);
    Point x(g->dim());
    for (int d = 0; d < g->dim(); ++d) x[d] = g->mean[d] + std::sqrt(g->variance[d]) * n01(rng);
    return x;
  }
  if (const auto* d = std::get_if<DiscreteMeasure>(&m)) {
    const double u = unif(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < d->size(); ++i) {
      acc += d->weights()[i];
      if (u < acc) return d->atoms()[i];
    }
    return d->atoms().back();
  }
  const auto& grid = std::get<GridDensity>(m);
  const double u = unif(rng);
  const double jitter = unif(rng) - 0.5;
  double acc = 0.0;
  std::size_t pick = grid.size() - 1;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    acc += grid.values()[i] * grid.spacing();
    if (u < acc) {
      pick = i;
      break;
    }
  }
  return point1(grid.node(pick) + jitter * grid.spacing());
}

// ---------------------------------------------------------------------------
// Total variation

namespace {

double tv_discrete(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  if (a.dim() != b.dim()) throw DimensionError("tv_distance: dimension mismatch");
  double s = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && lex_less(a.atoms()[i], b.atoms()[j]))) {
      s += a.weights()[i++];
    } else if (i == a.size() || lex_less(b.atoms()[j], a.atoms()[i])) {
      s += b.weights()[j++];
    } else {
      s += std::abs(a.weights()[i++] - b.weights()[j++]);
    }
  }
  return std::min(s, 2.0);
}

// Exact L1 distance of two 1-d normal densities with positive variances.
double tv_gaussian_1d(double m1, double v1, double m2, double v2) {
  if (v1 == v2) return same_variance_gaussian_tv(m1 - m2, std::sqrt(v1));
  if (v1 > v2) {
    std::swap(m1, m2);
    std::swap(v1, v2);
  }
  // p = N(m1, v1) is the narrower density; p > q exactly between the two
  // roots of log p - log q = 0.
  const double a = 0.5 / v2 - 0.5 / v1;
  const double b = m1 / v1 - m2 / v2;
  const double c = 0.5 * m2 * m2 / v2 - 0.5 * m1 * m1 / v1 + 0.5 * std::log(v2 / v1);
  const double disc = b * b - 4.0 * a * c;
  const double sq = std::sqrt(std::max(disc, 0.0));
  // Numerically stable quadratic roots.
  const double qq = -0.5 * (b + std::copysign(sq, b));
  double r1 = qq / a;
  double r2 = qq != 0.0 ? c / qq : r1;
  if (r1 > r2) std::swap(r1, r2);
  const double s1 = std::sqrt(v1);
  const double s2 = std::sqrt(v2);
  const double p_mass = normal_cdf((r2 - m1) / s1) - normal_cdf((r1 - m1) / s1);
  const double q_mass = normal_cdf((r2 - m2) / s2) - normal_cdf((r1 - m2) / s2);
  return std::clamp(2.0 * (p_mass - q_mass), 0.0, 2.0);
}

double tv_gaussian(const GaussianMeasure& a, const GaussianMeasure& b) {
  if (a.dim() != b.dim()) throw DimensionError("tv_distance: dimension mismatch");
  if (a.dim() == 1) return tv_gaussian_1d(a.mean[0], a.variance[0], b.mean[0], b.variance[0]);
  if ((a.variance - b.variance).cwiseAbs().maxCoeff() != 0.0) {
    throw DimensionError("tv_distance: multivariate Gaussians need equal covariances");
  }
  // Same covariance: depends only on the Mahalanobis distance.
  double maha2 = 0.0;
  for (int d = 0; d < a.dim(); ++d) {
    const double diff = a.mean[d] - b.mean[d];
    if (a.variance[d] == 0.0) {
      if (diff != 0.0) return 2.0;
      continue;
    }
    maha2 += diff * diff / a.variance[d];
  }
  return same_variance_gaussian_tv(std::sqrt(maha2), 1.0);
}

bool aligned(const GridDensity& a, const GridDensity& b) {
  if (std::abs(a.spacing() - b.spacing()) > 1e-12 * a.spacing()) return false;
  const double shift = (b.origin() - a.origin()) / a.spacing();
  return std::abs(shift - std::round(shift)) <= 1e-9;
}

// Linear interpolation of a grid's density at x (zero outside its range).
double interpolate(const GridDensity& g, double x) {
  const double u = (x - g.origin()) / g.spacing();
  if (u < 0.0 || u > static_cast<double>(g.size() - 1)) return 0.0;
  const auto i = static_cast<std::size_t>(std::floor(u));
  if (i + 1 >= g.size()) return g.values().back();
  const double t = u - static_cast<double>(i);
  return (1.0 - t) * g.values()[i] + t * g.values()[i + 1];
}

double tv_grid(const GridDensity& a, const GridDensity& b, const TvOptions& options) {
  if (!aligned(a, b)) {
    if (!options.resample) throw GridMismatch("tv_distance: grids differ in spacing or alignment");
    const double lo = std::min(a.origin(), b.origin());
    const double hi = std::max(a.last_node(), b.last_node());
    const double h = a.spacing();
    const double origin = a.origin() - std::ceil((a.origin() - lo) / h) * h;
    const auto count = static_cast<std::size_t>(std::ceil((hi - origin) / h)) + 1;
    std::vector<double> va(count);
    std::vector<double> vb(count);
    for (std::size_t i = 0; i < count; ++i) {
      const double x = origin + h * static_cast<double>(i);
      va[i] = interpolate(a, x);
      vb[i] = interpolate(b, x);
    }
    return tv_grid(GridDensity::make(origin, h, std::move(va)), GridDensity::make(origin, h, std::move(vb)), {});
  }
  const double h = a.spacing();
  const auto shift = static_cast<long long>(std::llround((b.origin() - a.origin()) / h));
  const long long lo = std::min(0LL, shift);
  const long long hi = std::max(static_cast<long long>(a.size()), shift + static_cast<long long>(b.size()));
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(hi - lo));
  for (long long k = lo; k < hi; ++k) {
    const double va = (k >= 0 && k < static_cast<long long>(a.size())) ? a.values()[static_cast<std::size_t>(k)] : 0.0;
    const long long kb = k - shift;
    const double vb = (kb >= 0 && kb < static_cast<long long>(b.size())) ? b.values()[static_cast<std::size_t>(kb)] : 0.0;
    terms.push_back(std::abs(va - vb));
  }
  return std::min(compensated_sum(terms) * h, 2.0);
}

// Lattice of `g` extended to cover [lo, hi].
GridDensity extend_to_cover(const GridDensity& g, double lo, double hi) {
  const double h = g.spacing();
  const double before = std::max(0.0, std::ceil((g.origin() - lo) / h));
  const double after = std::max(0.0, std::ceil((hi - g.last_node()) / h));
  std::vector<double> values(static_cast<std::size_t>(before), 0.0);
  values.insert(values.end(), g.values().begin(), g.values().end());
  values.resize(values.size() + static_cast<std::size_t>(after), 0.0);
  return GridDensity::make(g.origin() - before * h, h, std::move(values));
}

double tv_grid_gaussian(const GridDensity& g, const GaussianMeasure& n) {
  if (n.dim() != 1) throw DimensionError("tv_distance: grid against multivariate Gaussian");
  const double s = std::sqrt(n.variance[0]);
  const double r = gaussian_radius(s, 1e-12);
  const GridDensity wide = extend_to_cover(g, n.mean[0] - r, n.mean[0] + r);
  const GridDensity other = discretize(n, wide.origin(), wide.spacing(), wide.size());
  return tv_grid(wide, other, {});
}

}  // namespace

double tv_distance(const Measure& a_in, const Measure& b_in, const TvOptions& options) {
  if (measure_dim(a_in) != measure_dim(b_in)) throw DimensionError("tv_distance: dimension mismatch");
  // Degenerate Gaussians are point masses.
  auto normalize = [](const Measure& m) -> Measure {
    if (const auto* g = std::get_if<GaussianMeasure>(&m); g != nullptr && is_point_mass(*g)) {
      return DiscreteMeasure::dirac(g->mean);
    }
    return m;
  };
  const Measure a = normalize(a_in);
  const Measure b = normalize(b_in);

  const auto* da = std::get_if<DiscreteMeasure>(&a);
  const auto* db = std::get_if<DiscreteMeasure>(&b);
  if (da && db) return tv_discrete(*da, *db);
  if (da || db) return 2.0;  // atomic against absolutely continuous

  const auto* ga = std::get_if<GaussianMeasure>(&a);
  const auto* gb = std::get_if<GaussianMeasure>(&b);
  if (ga && gb) {
    // A Gaussian degenerate in some but not all coordinates is singular to a full one.
    const bool sa = (ga->variance.array() == 0.0).any();
    const bool sb = (gb->variance.array() == 0.0).any();
    if (sa != sb) return 2.0;
    return tv_gaussian(*ga, *gb);
  }
  const auto* ra = std::get_if<GridDensity>(&a);
  const auto* rb = std::get_if<GridDensity>(&b);
  if (ra && rb) return tv_grid(*ra, *rb, options);
  if (ra) return tv_grid_gaussian(*ra, *gb);
  return tv_grid_gaussian(*rb, *ga);
}

// ---------------------------------------------------------------------------
// Discretization and convolution

GridDensity discretize(const Measure& m, double origin, double spacing, std::size_t count) {
  if (!(spacing > 0.0)) throw std::invalid_argument("discretize: spacing must be positive");
  if (count == 0) throw std::invalid_argument("discretize: empty grid");
  if (measure_dim(m) != 1) throw DimensionError("discretize: grids are one-dimensional");
  const double last = origin + spacing * static_cast<double>(count - 1);
  std::vector<double> values(count, 0.0);
  double captured = 0.0;

  if (const auto* g = std::get_if<GaussianMeasure>(&m); g != nullptr && !is_point_mass(*g)) {
    const double mu = g->mean[0];
    const double s = std::sqrt(g->variance[0]);
    captured = normal_cdf((last + 0.5 * spacing - mu) / s) - normal_cdf((origin - 0.5 * spacing - mu) / s);
    if (captured < 1.0 - 1e-4) {
      throw NumericalError("discretize: grid captures only " + std::to_string(captured) + " of the Gaussian mass");
    }
    for (std::size_t i = 0; i < count; ++i) {
      const double x = origin + spacing * static_cast<double>(i);
      values[i] = normal_pdf((x - mu) / s) / s;
    }
    return GridDensity::make(origin, spacing, std::move(values));
  }

  DiscreteMeasure atoms = DiscreteMeasure::dirac(0.0);
  if (const auto* g = std::get_if<GaussianMeasure>(&m)) {
    atoms = DiscreteMeasure::dirac(g->mean);
  } else if (const auto* d = std::get_if<DiscreteMeasure>(&m)) {
    atoms = *d;
  } else {
    const auto& src = std::get<GridDensity>(m);
    for (std::size_t i = 0; i < src.size(); ++i) {
      const double x = src.node(i);
      if (x >= origin - 0.5 * spacing && x <= last + 0.5 * spacing) captured += src.values()[i] * src.spacing();
    }
    if (captured < 1.0 - 1e-4) {
      throw NumericalError("discretize: grid captures only " + std::to_string(captured) + " of the mass");
    }
    for (std::size_t i = 0; i < count; ++i) values[i] = interpolate(src, origin + spacing * static_cast<double>(i));
    return GridDensity::make(origin, spacing, std::move(values));
  }

  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const double u = std::round((atoms.atoms()[i][0] - origin) / spacing);
    if (u < 0.0 || u > static_cast<double>(count - 1)) continue;
    values[static_cast<std::size_t>(u)] += atoms.weights()[i] / spacing;
    captured += atoms.weights()[i];
  }
  if (captured < 1.0 - 1e-4) {
    throw NumericalError("discretize: grid captures only " + std::to_string(captured) + " of the atomic mass");
  }
  return GridDensity::make(origin, spacing, std::move(values));
}

DiscreteMeasure to_discrete(const GridDensity& g) {
  std::vector<double> xs;
  std::vector<double> ws;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.values()[i] > 0.0) {
      xs.push_back(g.node(i));
      ws.push_back(g.values()[i] * g.spacing());
    }
  }
  return DiscreteMeasure::make_1d(xs, ws);
}

GridDensity convolve_density(const GridDensity& g, const DensityFn& q, std::optional<double> radius) {
  if (q.dim() != 1) throw DimensionError("convolve_density: density must be one-dimensional");
  const double r = radius.value_or(q.support_radius());
  if (!(r >= 0.0)) throw std::invalid_argument("convolve_density: negative radius");
  const double h = g.spacing();
  const auto half = static_cast<std::size_t>(std::ceil(r / h - 1e-9));
  const double covered = static_cast<double>(half) * h;
  // Mass of q outside the truncation window, measured on the declared support.
  const double outer = std::max(q.support_radius(), covered);
  const double total = q.mass(outer, DensityFn::default_nodes(1));
  const double inside = covered > 0.0 ? q.mass(covered, DensityFn::default_nodes(1)) : 0.0;
  if (total - inside > 1e-6) {
    std::ostringstream msg;
    msg << "convolve_density: truncation at radius " << covered << " loses " << (total - inside) << " of the mass";
    throw NumericalError(msg.str());
  }

  const std::size_t width = 2 * half + 1;
  std::vector<double> kernel(width);
  for (std::size_t k = 0; k < width; ++k) {
    kernel[k] = q((static_cast<double>(k) - static_cast<double>(half)) * h);
  }
  const std::size_t n = g.size();
  std::vector<double> out(n + 2 * half, 0.0);
  // out[t] sits at g.node(t - half); out[t] = h * sum_s g[s] q((t - half - s) h).
  for (std::size_t s = 0; s < n; ++s) {
    const double gs = g.values()[s] * h;
    if (gs == 0.0) continue;
    double* dst = out.data() + s;
    for (std::size_t k = 0; k < width; ++k) dst[k] += gs * kernel[k];
  }
  return GridDensity::make(g.origin() - covered, h, std::move(out));
}

}  // namespace filterstab
