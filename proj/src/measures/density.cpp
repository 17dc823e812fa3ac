#include "filterstab/density.hpp"

#include <array>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "filterstab/errors.hpp"

namespace filterstab {

DensityFn::DensityFn(std::string name, int dim, Eval eval, double support_radius, Sampler sampler)
    : name_(std::move(name)),
      dim_(dim),
      eval_(std::move(eval)),
      radius_(support_radius),
      sampler_(std::move(sampler)) {
  if (dim_ < 1 || dim_ > 3) throw DimensionError("DensityFn: dimension must be 1, 2 or 3");
  if (!eval_) throw std::invalid_argument("DensityFn: empty evaluation rule");
  if (!(radius_ > 0.0) || !std::isfinite(radius_)) {
    throw std::invalid_argument("DensityFn: support radius must be positive and finite");
  }
  const double m = mass();
  if (std::abs(m - 1.0) > 1e-6) {
    std::ostringstream msg;
    msg << "DensityFn '" << name_ << "' integrates to " << m << " over its declared support";
    throw NumericalError(msg.str());
  }
}

void DensityFn::sample(Rng& rng, std::span<double> out) const {
  if (!sampler_) throw std::logic_error("DensityFn '" + name_ + "' has no sampler");
  if (static_cast<int>(out.size()) != dim_) throw DimensionError("DensityFn::sample: output size");
  sampler_(rng, out);
}

double DensityFn::sample(Rng& rng) const {
  double y = 0.0;
  sample(rng, std::span<double>(&y, 1));
  return y;
}

int DensityFn::default_nodes(int dim) {
  switch (dim) {
    case 1:
      return 200001;
    case 2:
      return 801;
    default:
      return 121;
  }
}

double DensityFn::mass(double radius, int nodes) const {
  const double h = 2.0 * radius / (nodes - 1);
  const auto n = static_cast<std::size_t>(nodes);
  // End nodes sit exactly on +-radius so densities with a jump there are summed exactly.
  auto node = [&](std::size_t i) { return i + 1 == n ? radius : -radius + h * static_cast<double>(i); };
  std::array<double, 3> y{};
  std::span<const double> point(y.data(), static_cast<std::size_t>(dim_));
  double total = 0.0;
  if (dim_ == 1) {
    std::vector<double> terms(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[0] = node(i);
      terms[i] = trapezoid_weight(i, n) * eval_(point);
    }
    total = compensated_sum(terms);
    return total * h;
  }
  std::size_t cells = 1;
  for (int d = 0; d < dim_; ++d) cells *= n;
  for (std::size_t flat = 0; flat < cells; ++flat) {
    std::size_t rest = flat;
    double w = 1.0;
    for (int d = 0; d < dim_; ++d) {
      const std::size_t i = rest % n;
      rest /= n;
      y[static_cast<std::size_t>(d)] = node(i);
      w *= trapezoid_weight(i, n);
    }
    total += w * eval_(point);
  }
  return total * std::pow(h, dim_);
}

double gaussian_radius(double s, double tail) {
  // Bisection on the two-sided tail 2(1 - Phi(r)) = tail.
  double lo = 0.0;
  double hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (std::erfc(mid / std::sqrt(2.0)) > tail) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi * s;
}

DensityFn gaussian_density(double s, int dim) {
  if (!(s > 0.0)) throw std::invalid_argument("gaussian_density: std must be positive");
  const double norm = std::pow(2.0 * kPi * s * s, -0.5 * dim);
  auto eval = [s, norm](std::span<const double> y) {
    double r2 = 0.0;
    for (double v : y) r2 += v * v;
    return norm * std::exp(-0.5 * r2 / (s * s));
  };
  auto sampler = [s](Rng& rng, std::span<double> out) {
    std::normal_distribution<double> n01(0.0, 1.0);
    for (double& v : out) v = s * n01(rng);
  };
  std::ostringstream name;
  name << "gaussian(std=" << s << ")";
  DensityFn q(name.str(), dim, eval, gaussian_radius(s), sampler);
  q.set_gaussian_std(s);
  return q;
}

DensityFn uniform_density(double half_width) {
  if (!(half_width > 0.0)) throw std::invalid_argument("uniform_density: half width must be positive");
  const double level = 0.5 / half_width;
  auto eval = [half_width, level](std::span<const double> y) {
    // Closed interval: quadrature over exactly [-half_width, half_width] is then exact.
    return std::abs(y[0]) <= half_width ? level : 0.0;
  };
  auto sampler = [half_width](Rng& rng, std::span<double> out) {
    std::uniform_real_distribution<double> u(-half_width, half_width);
    out[0] = u(rng);
  };
  std::ostringstream name;
  name << "uniform(half_width=" << half_width << ")";
  return DensityFn(name.str(), 1, eval, half_width, sampler);
}

DensityFn triangular_density(double half_width) {
  if (!(half_width > 0.0)) throw std::invalid_argument("triangular_density: half width must be positive");
  auto eval = [half_width](std::span<const double> y) {
    const double a = std::abs(y[0]);
    return a >= half_width ? 0.0 : (half_width - a) / (half_width * half_width);
  };
  auto sampler = [half_width](Rng& rng, std::span<double> out) {
    std::uniform_real_distribution<double> u(-0.5 * half_width, 0.5 * half_width);
    const double first = u(rng);
    out[0] = first + u(rng);
  };
  std::ostringstream name;
  name << "triangular(half_width=" << half_width << ")";
  return DensityFn(name.str(), 1, eval, half_width, sampler);
}

DensityFn laplace_density(double b) {
  if (!(b > 0.0)) throw std::invalid_argument("laplace_density: scale must be positive");
  auto eval = [b](std::span<const double> y) { return std::exp(-std::abs(y[0]) / b) / (2.0 * b); };
  auto sampler = [b](Rng& rng, std::span<double> out) {
    std::exponential_distribution<double> e(1.0 / b);
    std::bernoulli_distribution sign(0.5);
    const double m = e(rng);
    out[0] = sign(rng) ? m : -m;
  };
  std::ostringstream name;
  name << "laplace(scale=" << b << ")";
  return DensityFn(name.str(), 1, eval, b * std::log(1e10), sampler);
}

}  // namespace filterstab
