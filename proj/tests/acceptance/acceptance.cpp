// Acceptance runner: prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "filterstab/checks.hpp"
#include "filterstab/errors.hpp"
#include "filterstab/experiment.hpp"
#include "filterstab/stability.hpp"
#include "generators.hpp"

namespace fs = filterstab;
using fs::testing::Gen;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

fs::TwinRunConfig from_preset(const std::string& name, std::size_t horizon, std::uint64_t seed) {
  const auto p = fs::make_preset(name);
  fs::TwinRunConfig c(p.spec, p.prior_mu, p.prior_nu);
  c.horizon = horizon;
  c.seed = seed;
  c.method = p.method;
  c.grid = p.grid;
  return c;
}

double two_density_tv(const std::function<double(double)>& p, const std::function<double(double)>& q, double lo,
                      double hi) {
  return fs::testing::simpson([&](double z) { return std::abs(p(z) - q(z)); }, lo, hi, 400000);
}

// 1. Rate example: liminf constant and polynomial (not exponential) decay.
Verdict rate_example() {
  const auto start = std::chrono::steady_clock::now();
  auto c = from_preset("static-gaussian", 2000, 42);
  const auto trace = fs::twin_run(c);
  const double x0 = trace.x0();
  const auto est = fs::liminf_constant(trace, fs::StaticGaussianModel{0.0, 1.0, 1.0}, x0);
  const auto fit = fs::estimate_rate(trace.column("bl"));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double target = std::abs(std::sin(x0));
  const bool a = std::abs(est.estimate - target) <= 0.25 * target;
  const bool b = fit.classification == fs::RateClass::polynomial && fit.slope >= -1.5 && fit.slope <= -0.5;
  Verdict v;
  v.pass = a && b && secs < 5.0;
  v.detail = fmt("x0=%.6f min n*cos_lower=%.4f target=%.4f", x0, est.estimate, target) +
             fmt(" slope=%.4f r2=%.6f", fit.slope, fit.r2) + " class=" + fs::to_string(fit.classification) +
             fmt(" runtime=%.2fs (<5s)", secs);
  return v;
}

// 2. Grid filter against the closed-form static Gaussian filter.
Verdict grid_vs_closed_form() {
  const auto start = std::chrono::steady_clock::now();
  const fs::StaticGaussianModel model{0.0, 1.0, 1.0};
  const auto spec = model.spec();
  const auto path = fs::simulate_path(spec, 100, 42);
  const auto grid = fs::run_grid_filter(spec, path.observations, fs::GaussianMeasure::make_1d(0.0, 1.0),
                                        fs::GridConfig::covering(-10.0, 10.0, 0.005));
  const auto closed = fs::kalman_static(model, 0.0, path.observations_1d());
  double mean_err = 0.0, var_err = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    mean_err = std::max(mean_err, std::abs(grid[k].filter.mean() - closed[k].z));
    var_err = std::max(var_err, std::abs(grid[k].filter.variance() - closed[k].v));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {mean_err < 1e-3 && var_err < 1e-3 && secs < 10.0,
          fmt("max|mean err|=%.3g max|var err|=%.3g runtime=%.2fs (<10s)", mean_err, var_err, secs)};
}

// 3. BL distance against clipped distances and a lattice brute force.
Verdict bl_oracle() {
  double dirac_err = 0.0;
  for (double t : {0.1, 0.5, 1.0, 2.0, 3.0, 5.0}) {
    dirac_err = std::max(dirac_err, std::abs(fs::bl_distance(fs::DiscreteMeasure::dirac(0.0),
                                                             fs::DiscreteMeasure::dirac(t)) -
                                             std::min(2.0, t)));
  }
  Gen gen(2024);
  double lattice_err = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = gen.discrete_1d(4, 0.01, 250);
    const auto b = gen.discrete_1d(4, 0.01, 250);
    std::vector<double> xs, w;
    auto add = [&](const fs::DiscreteMeasure& m, double sign) {
      for (std::size_t i = 0; i < m.size(); ++i) {
        const double x = m.atoms()[i][0];
        std::size_t k = 0;
        while (k < xs.size() && std::abs(xs[k] - x) > 1e-12) ++k;
        if (k == xs.size()) {
          xs.push_back(x);
          w.push_back(0.0);
        }
        w[k] += sign * m.weights()[i];
      }
    };
    add(a, 1.0);
    add(b, -1.0);
    const double oracle = xs.size() <= 3 ? fs::testing::lattice_sup_exhaustive(xs, w, 100)
                                         : fs::testing::lattice_sup_line(xs, w, 100);
    lattice_err = std::max(lattice_err, std::abs(fs::bl_distance(a, b) - oracle));
  }
  return {dirac_err <= 1e-9 && lattice_err <= 1e-3,
          fmt("dirac max err=%.3g (<=1e-9) lattice max err=%.3g over 50 pairs (<=1e-3)", dirac_err, lattice_err)};
}

// 4. TV closed form and the change-of-variables kernel TV.
Verdict tv_oracle() {
  Gen gen(4040);
  double gauss_err = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double m0 = gen.uniform(-3, 3), m1 = gen.uniform(-3, 3), s = gen.uniform(0.2, 3);
    const double closed = 2.0 * (2.0 * (0.5 * std::erfc(-(std::abs(m0 - m1) / (2 * s)) / std::sqrt(2.0))) - 1.0);
    const double got =
        fs::tv_distance(fs::GaussianMeasure::make_1d(m0, s * s), fs::GaussianMeasure::make_1d(m1, s * s));
    gauss_err = std::max(gauss_err, std::abs(got - closed));
  }
  double kernel_err = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double a = gen.uniform(-1.2, 1.2), c = gen.uniform(-1, 1), amp = gen.uniform(0, 1.5);
    const double s0 = gen.uniform(0.5, 1.5), s1 = gen.uniform(0, 1);
    const bool laplace = i % 3 == 2;
    fs::ARKernel ar(
        "random", 1,
        [a, c, amp](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, a * x[0] + amp * std::sin(x[0]) + c); },
        [s0, s1](const Eigen::VectorXd& x) {
          const double t = std::tanh(x[0]);
          return Eigen::MatrixXd::Constant(1, 1, s0 + s1 * t * t);
        },
        laplace ? fs::laplace_density(0.7) : fs::gaussian_density(1.0), s0);
    const double x = gen.uniform(-3, 3), xp = x + gen.uniform(-2, 2);
    const fs::Point px = fs::point1(x), pxp = fs::point1(xp);
    const double direct = two_density_tv([&](double z) { return ar.density(px, fs::point1(z)); },
                                         [&](double z) { return ar.density(pxp, fs::point1(z)); }, -60, 60);
    kernel_err = std::max(kernel_err, std::abs(fs::ar_kernel_tv(ar, px, pxp) - direct));
  }
  return {gauss_err <= 1e-6 && kernel_err <= 1e-4,
          fmt("gaussian max err=%.3g over 20 pairs (<=1e-6) kernel max err=%.3g over 50 AR instances (<=1e-4)",
              gauss_err, kernel_err)};
}

// 5. Forgetting at low signal-to-noise ratio.
Verdict low_snr_forgetting() {
  const auto start = std::chrono::steady_clock::now();
  const auto p = fs::make_preset("ar-random-walk");
  const double initial = fs::tv_distance(p.prior_mu, p.prior_nu);
  double mean_tv = 0.0;
  const int seeds = 20;
  for (int s = 1; s <= seeds; ++s) {
    const auto trace = fs::twin_run(from_preset("ar-random-walk", 200, static_cast<std::uint64_t>(s)));
    mean_tv += *trace.rows.back().tv / seeds;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {mean_tv < 0.1 * initial && secs < 120.0,
          fmt("mean tv_200=%.3g tv(mu,nu)=%.4f bound=%.4f runtime=%.1fs (<120s)", mean_tv, initial, 0.1 * initial,
              secs)};
}

// 6. No forgetting through a blind channel.
Verdict blind_channel() {
  const auto c = from_preset("counterexample-blind", 100, 1);
  const auto trace = fs::twin_run(c);
  const double discrete = fs::tv_distance(fs::discretize(c.prior_mu, c.grid.origin, c.grid.spacing, c.grid.count),
                                          fs::discretize(c.prior_nu, c.grid.origin, c.grid.spacing, c.grid.count));
  double dev = 0.0;
  for (const auto& r : trace.rows) dev = std::max(dev, std::abs(*r.tv - discrete));
  const double exact = fs::tv_distance(c.prior_mu, c.prior_nu);
  return {dev <= 1e-9, fmt("max|tv_n - tv(mu,nu)|=%.3g (<=1e-9) on the grid; grid vs exact tv(mu,nu)=%.3g", dev,
                           std::abs(discrete - exact))};
}

// 7. Coupling, filter/predictor and kernel-modulus inequalities.
Verdict inequality_suites() {
  Gen gen(7070);
  int coupling_pass = 0;
  const auto grid = fs::GridConfig::covering(-14, 14, 0.05);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = gen.discrete_1d(3);
    const auto b = gen.discrete_1d(3);
    const auto na = static_cast<Eigen::Index>(a.size()), nb = static_cast<Eigen::Index>(b.size());
    // Random coupling: independent plus a mass-preserving perturbation on a 2x2 block.
    Eigen::MatrixXd p(na, nb);
    for (Eigen::Index i = 0; i < na; ++i)
      for (Eigen::Index j = 0; j < nb; ++j) p(i, j) = a.weights()[static_cast<std::size_t>(i)] * b.weights()[static_cast<std::size_t>(j)];
    if (na > 1 && nb > 1) {
      const double eps = gen.uniform(0, 1) * std::min(p(0, 1), p(1, 0));
      p(0, 0) += eps;
      p(1, 1) += eps;
      p(0, 1) -= eps;
      p(1, 0) -= eps;
    }
    const auto noise = trial % 2 == 0 ? fs::gaussian_density(gen.uniform(0.5, 2)) : fs::laplace_density(gen.uniform(0.3, 1));
    const auto channel = fs::ObservationChannel::linear_1d(gen.uniform(0.5, 2), noise);
    if (fs::check_coupling_bound(a, b, p, channel, grid).pass) ++coupling_pass;
  }

  int predictor_pass = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto ar = fs::ARKernel::linear_1d(gen.uniform(-0.9, 0.9), gen.uniform(-1, 1), gen.uniform(0.5, 1.5),
                                            fs::gaussian_density(1.0));
    const fs::HMMSpec spec(ar.as_kernel(),
                           fs::ObservationChannel::linear_1d(gen.uniform(0.5, 2), fs::gaussian_density(gen.uniform(0.5, 2))),
                           fs::GaussianMeasure::make_1d(0, 1));
    const auto mu = fs::GaussianMeasure::make_1d(gen.uniform(-3, 3), gen.uniform(0.3, 2));
    const auto nu = fs::GaussianMeasure::make_1d(gen.uniform(-3, 3), gen.uniform(0.3, 2));
    const auto n = static_cast<std::size_t>(gen.integer(0, 4));
    const auto r = fs::filter_predictor_tv_check(spec, mu, nu, n, 1000, static_cast<std::uint64_t>(trial + 1),
                                                 fs::GridConfig::covering(-25, 25, 0.05));
    if (r.pass) ++predictor_pass;
  }

  const auto p = fs::make_preset("ar-random-walk");
  std::vector<double> deltas;
  for (int k = 0; k <= 10; ++k) deltas.push_back(0.001 * std::ldexp(1.0, k));
  const auto curve = fs::kernel_tv_modulus(*p.spec.kernel.ar(), deltas, 64, 20240601);
  bool halving = true;
  for (std::size_t i = 1; i < curve.values.size(); ++i) halving = halving && curve.values[i - 1] <= curve.values[i];
  const bool modulus = curve.values.front() < 0.01 && halving;

  return {coupling_pass == 200 && predictor_pass == 20 && modulus,
          fmt("coupling %g/200 filter-predictor %g/20 modulus(0.001)=%.3g halving-monotone=%g", coupling_pass,
              predictor_pass, curve.values.front(), halving ? 1.0 : 0.0)};
}

// 8. Assumption checkers flag the known violations.
Verdict assumption_checkers() {
  const bool gaussian = fs::char_fn_min(fs::gaussian_density(1.0), 10.0, 2001).pass;
  const bool uniform = fs::char_fn_min(fs::uniform_density(1.0), 10.0, 2001).pass;
  const bool triangular = fs::char_fn_min(fs::triangular_density(1.0), 10.0, 2001).pass;
  const auto blind = fs::make_preset("counterexample-blind");
  bool inverse = true;
  for (const auto& r : fs::assumption_report(blind.spec)) {
    if (r.name == "h_inverse_roundtrip") inverse = r.pass;
  }
  std::ostringstream d;
  d << "gaussian=" << (gaussian ? "pass" : "fail") << " uniform=" << (uniform ? "pass" : "fail")
    << " triangular=" << (triangular ? "pass" : "fail") << " blind inverse=" << (inverse ? "pass" : "fail");
  return {gaussian && !uniform && !triangular && !inverse, d.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, Verdict (*)()>> criteria{
      {"rate example: liminf within 25% and polynomial decay", rate_example},
      {"grid filter matches the closed-form filter", grid_vs_closed_form},
      {"bounded-Lipschitz distance matches oracles", bl_oracle},
      {"total variation matches closed forms", tv_oracle},
      {"forgetting at low signal-to-noise ratio", low_snr_forgetting},
      {"blind channel never forgets", blind_channel},
      {"coupling, filter/predictor and modulus inequalities", inequality_suites},
      {"assumption checkers flag violations", assumption_checkers},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %zu %s: %s [%.2fs]\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail.c_str(), secs);
    std::fflush(stdout);
    if (!v.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
