#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "filterstab/models.hpp"

namespace filterstab {

/// Outcome of one diagnostic. Evidence is populated whether or not it passed.
struct CheckReport {
  std::string name;
  bool pass = false;
  std::vector<std::pair<std::string, double>> evidence;
  /// Optional curve, e.g. (delta, modulus) or (t, |phi(t)|).
  std::vector<std::pair<double, double>> curve;
  std::string notes;

  std::optional<double> find(const std::string& key) const;
};

/// TV distance between P(x, .) and P(x', .) through the change of variables
/// z -> sigma(x)^{-1}(sigma(x') z - b(x) + b(x')), integrated against q_eta.
///
/// Returns exactly 2 when the two transformed supports are disjoint. Throws
/// NumericalError if either term fails to integrate to 1 within 1e-4.
double ar_kernel_tv(const ARKernel& kernel, const Point& x, const Point& x_prime);

struct ModulusCurve {
  std::vector<double> deltas;
  std::vector<double> values;
  double box_half_width = 10.0;
};

/// Empirical modulus max over `probes` pairs (x, x + delta u), with x uniform in
/// [-box, box]^m and u a random unit vector. The same probes serve every delta,
/// so the curve is monotone whenever the true modulus is.
ModulusCurve kernel_tv_modulus(const ARKernel& kernel, const std::vector<double>& deltas, int probes,
                               std::uint64_t seed, double box_half_width = 10.0);

/// Finite-window heuristic for "the Fourier transform of q vanishes nowhere".
///
/// Evaluates |phi(t)| on a symmetric grid of `freq_count` frequencies in
/// [-freq_max, freq_max] (per coordinate axis when dim > 1, via marginals).
/// A zero is flagged when a local dip refines to |phi| <= tol and |phi|
/// recovers above max(tol, 100 * quadrature error) further out; a tail that
/// only decays (as for a Gaussian) is not a zero. Throws NumericalError when
/// two quadrature resolutions disagree by more than 1e-3.
CheckReport char_fn_min(const DensityFn& q, double freq_max, int freq_count, double tol = 1e-6);

struct AssumptionOptions {
  double freq_max = 10.0;
  int freq_count = 2001;
  int modulus_probes = 64;
  double box_half_width = 10.0;
  std::uint64_t seed = 20240601;
};

/// Runs the invertibility, continuity, noise and kernel diagnostics. Failures
/// are reported, never thrown.
std::vector<CheckReport> assumption_report(const HMMSpec& spec, const AssumptionOptions& options = {});

}  // namespace filterstab
