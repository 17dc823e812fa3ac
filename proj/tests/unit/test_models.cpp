#include <gtest/gtest.h>

#include <cmath>

#include "filterstab/checks.hpp"
#include "filterstab/errors.hpp"
#include "filterstab/models.hpp"
#include "generators.hpp"

namespace fs = filterstab;
using fs::testing::Gen;

namespace {

fs::HMMSpec random_walk_spec(double obs_std = 1.0) {
  const auto ar = fs::ARKernel::linear_1d(1.0, 0.0, 1.0, fs::gaussian_density(1.0));
  return fs::HMMSpec(ar.as_kernel(), fs::ObservationChannel::identity(fs::gaussian_density(obs_std)),
                     fs::GaussianMeasure::make_1d(0.0, 1.0));
}

double tv_by_quadrature(double m0, double s0, double m1, double s1) {
  const double lo = std::min(m0 - 12 * s0, m1 - 12 * s1);
  const double hi = std::max(m0 + 12 * s0, m1 + 12 * s1);
  return fs::testing::simpson(
      [&](double z) { return std::abs(fs::testing::gauss_pdf(z, m0, s0) - fs::testing::gauss_pdf(z, m1, s1)); }, lo,
      hi, 200000);
}

const fs::CheckReport& find_report(const std::vector<fs::CheckReport>& reports, const std::string& name) {
  for (const auto& r : reports) {
    if (r.name == name) return r;
  }
  throw std::runtime_error("missing report " + name);
}

}  // namespace

TEST(SimulatePath, StaticSignalKeepsTheInitialState) {
  const fs::StaticGaussianModel model{0.0, 1.0, 1.0};
  const auto path = fs::simulate_path(model.spec(), 50, 3);
  ASSERT_EQ(path.states.size(), 50u);
  ASSERT_EQ(path.observations.size(), 50u);
  for (const auto& x : path.states) EXPECT_EQ(x[0], path.states[0][0]);
}

TEST(SimulatePath, SameSeedGivesIdenticalPaths) {
  const auto spec = random_walk_spec();
  const auto a = fs::simulate_path(spec, 40, 17);
  const auto b = fs::simulate_path(spec, 40, 17);
  EXPECT_EQ(a.states_1d(), b.states_1d());
  EXPECT_EQ(a.observations_1d(), b.observations_1d());
  const auto c = fs::simulate_path(spec, 40, 18);
  EXPECT_NE(a.states_1d(), c.states_1d());
}

TEST(SimulatePath, RandomWalkVarianceGrowsLinearly) {
  const auto ar = fs::ARKernel::linear_1d(1.0, 0.0, 1.0, fs::gaussian_density(1.0));
  const fs::HMMSpec spec(ar.as_kernel(), fs::ObservationChannel::identity(fs::gaussian_density(1.0)),
                         fs::DiscreteMeasure::dirac(0.0));
  const std::size_t k = 50;
  double sum = 0.0, sum2 = 0.0;
  const int seeds = 500;
  for (int s = 0; s < seeds; ++s) {
    const double x = fs::simulate_path(spec, k + 1, static_cast<std::uint64_t>(s)).states[k][0];
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / seeds;
  const double var = sum2 / seeds - mean * mean;
  EXPECT_NEAR(var / static_cast<double>(k), 1.0, 0.15);
}

TEST(SimulatePath, ObservationsFollowTheChannel) {
  const auto spec = random_walk_spec(0.5);
  const auto path = fs::simulate_path(spec, 2000, 5);
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t k = 0; k < path.states.size(); ++k) {
    const double e = path.observations[k][0] - path.states[k][0];
    sum += e;
    sum2 += e * e;
  }
  const double n = static_cast<double>(path.states.size());
  EXPECT_NEAR(sum / n, 0.0, 0.05);
  EXPECT_NEAR(std::sqrt(sum2 / n), 0.5, 0.03);
}

TEST(ARKernel, DensityIntegratesToOneAndMatchesSampler) {
  const auto ar = fs::ARKernel::linear_1d(0.5, 1.0, 2.0, fs::gaussian_density(1.0));
  const fs::Point x = fs::point1(2.0);
  // Mean 0.5 * 2 + 1 = 2, standard deviation 2.
  const double mass = fs::testing::simpson([&](double z) { return ar.density(x, fs::point1(z)); }, -30, 30, 20000);
  EXPECT_NEAR(mass, 1.0, 1e-9);
  EXPECT_NEAR(ar.density(x, fs::point1(2.0)), fs::testing::gauss_pdf(2.0, 2.0, 2.0), 1e-14);
  fs::Rng rng(1);
  std::vector<double> zs(4000);
  for (auto& z : zs) z = ar.sample(x, rng)[0];
  std::sort(zs.begin(), zs.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < zs.size(); ++i) {
    const double cdf = fs::normal_cdf((zs[i] - 2.0) / 2.0);
    ks = std::max({ks, std::abs(cdf - static_cast<double>(i) / zs.size()), std::abs(cdf - static_cast<double>(i + 1) / zs.size())});
  }
  EXPECT_LT(ks, 0.05);
}

TEST(ARKernel, RejectsDispersionBelowTheLowerBound) {
  EXPECT_THROW(fs::ARKernel("weak", 1, [](const Eigen::VectorXd& x) { return x; },
                            [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Constant(1, 1, 0.5); },
                            fs::gaussian_density(1.0), 1.0),
               std::invalid_argument);
  EXPECT_THROW(fs::ARKernel::linear_1d(1.0, 0.0, 0.0, fs::gaussian_density(1.0)), std::invalid_argument);
}

TEST(ARKernel, TwoDimensionalKernelIsNormalized) {
  fs::ARKernel ar(
      "rotation", 2,
      [](const Eigen::VectorXd& x) {
        Eigen::VectorXd b(2);
        b << 0.8 * x[1], -0.8 * x[0];
        return b;
      },
      [](const Eigen::VectorXd& x) {
        Eigen::MatrixXd s(2, 2);
        s << 1.0 + 0.1 * std::tanh(x[0]), 0.2, 0.0, 1.0;
        return s;
      },
      fs::gaussian_density(1.0, 2), 0.5);
  fs::Rng rng(3);
  const auto z = ar.sample(Eigen::Vector2d(1.0, -1.0), rng);
  EXPECT_EQ(z.size(), 2);
  EXPECT_GT(ar.density(Eigen::Vector2d(1.0, -1.0), z), 0.0);
}

TEST(ObservationChannel, LikelihoodAndInverse) {
  const auto ch = fs::ObservationChannel::linear_1d(2.0, fs::gaussian_density(1.0));
  EXPECT_NEAR(ch.likelihood(fs::point1(3.0), fs::point1(1.0)), fs::normal_pdf(1.0), 1e-15);
  EXPECT_DOUBLE_EQ(ch.h_inverse(ch.h(fs::point1(0.7)))[0], 0.7);
  EXPECT_THROW(fs::ObservationChannel::linear_1d(0.0, fs::gaussian_density(1.0)), std::invalid_argument);
  const auto blind = fs::ObservationChannel::blind(fs::gaussian_density(1.0));
  EXPECT_EQ(blind.h(fs::point1(5.0))[0], 0.0);
}

TEST(HMMSpec, RejectsMismatchedDimensions) {
  EXPECT_THROW(fs::HMMSpec(fs::TransitionKernel::identity(2), fs::ObservationChannel::identity(fs::gaussian_density(1.0)),
                           fs::GaussianMeasure::make_1d(0, 1)),
               fs::DimensionError);
}

TEST(StaticGaussianModel, ValidatesVariance) {
  EXPECT_THROW((fs::StaticGaussianModel{0.0, 1.0, -1.0}.validate()), std::invalid_argument);
  EXPECT_NO_THROW((fs::StaticGaussianModel{0.0, 1.0, 0.0}.validate()));
}

TEST(ArKernelTv, IdenticalArgumentsGiveZero) {
  const auto ar = fs::ARKernel::linear_1d(1.0, 0.0, 1.0, fs::gaussian_density(1.0));
  EXPECT_NEAR(fs::ar_kernel_tv(ar, fs::point1(0.4), fs::point1(0.4)), 0.0, 1e-12);
}

TEST(ArKernelTv, UnitShiftMatchesGaussianPair) {
  const auto ar = fs::ARKernel::linear_1d(1.0, 0.0, 1.0, fs::gaussian_density(1.0));
  EXPECT_NEAR(fs::ar_kernel_tv(ar, fs::point1(0.0), fs::point1(1.0)), tv_by_quadrature(0, 1, 1, 1), 1e-4);
}

TEST(ArKernelTv, ScaleChangeMatchesGaussianPair) {
  fs::ARKernel ar("switching-scale", 1, [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Zero(x.size()); },
                  [](const Eigen::VectorXd& x) { return Eigen::MatrixXd::Constant(1, 1, x[0] > 0.5 ? 2.0 : 1.0); },
                  fs::gaussian_density(1.0), 1.0);
  EXPECT_NEAR(fs::ar_kernel_tv(ar, fs::point1(0.0), fs::point1(1.0)), tv_by_quadrature(0, 1, 0, 2), 1e-4);
}

TEST(ArKernelTv, DisjointSupportsGiveTwo) {
  const auto ar = fs::ARKernel::linear_1d(1.0, 0.0, 1.0, fs::uniform_density(1.0));
  EXPECT_DOUBLE_EQ(fs::ar_kernel_tv(ar, fs::point1(0.0), fs::point1(5.0)), 2.0);
  EXPECT_NEAR(fs::ar_kernel_tv(ar, fs::point1(0.0), fs::point1(1.0)), 1.0, 1e-4);
}

TEST(ArKernelTv, RandomAffineKernelsMatchTwoDensityQuadrature) {
  Gen gen(21);
  for (int trial = 0; trial < 15; ++trial) {
    const double a = gen.uniform(-1.5, 1.5), c = gen.uniform(-1, 1);
    const double s0 = gen.uniform(0.5, 2), s1 = gen.uniform(0.5, 2);
    const double x0 = gen.uniform(-2, 2), x1 = gen.uniform(-2, 2);
    fs::ARKernel ar("affine", 1, [a, c](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, a * x[0] + c); },
                    [s0, s1, x0](const Eigen::VectorXd& x) { return Eigen::MatrixXd::Constant(1, 1, x[0] == x0 ? s0 : s1); },
                    fs::gaussian_density(1.0), 0.5);
    const double expect = tv_by_quadrature(a * x0 + c, s0, a * x1 + c, x1 == x0 ? s0 : s1);
    EXPECT_NEAR(fs::ar_kernel_tv(ar, fs::point1(x0), fs::point1(x1)), expect, 1e-4) << "trial " << trial;
  }
}

TEST(KernelTvModulus, ZeroDeltaAndShiftOracle) {
  const auto ar = fs::ARKernel::linear_1d(1.0, 0.0, 1.0, fs::gaussian_density(1.0));
  const std::vector<double> deltas{0.0, 0.001, 0.01, 0.1, 0.5, 1.0};
  const auto curve = fs::kernel_tv_modulus(ar, deltas, 16, 4);
  ASSERT_EQ(curve.values.size(), deltas.size());
  EXPECT_NEAR(curve.values[0], 0.0, 1e-12);
  for (std::size_t i = 1; i < deltas.size(); ++i) {
    // For pure shifts every probe realizes the same TV, so the modulus is exact.
    EXPECT_NEAR(curve.values[i], fs::same_variance_gaussian_tv(deltas[i], 1.0), 1e-4);
    EXPECT_GE(curve.values[i], curve.values[i - 1]);
  }
  EXPECT_LT(curve.values[1], 0.01);
  EXPECT_NEAR(curve.values[1], 2.0 * (2.0 * fs::normal_cdf(0.0005) - 1.0), 1e-6);
}

TEST(KernelTvModulus, RejectsUnsortedDeltas) {
  const auto ar = fs::ARKernel::linear_1d(1.0, 0.0, 1.0, fs::gaussian_density(1.0));
  EXPECT_THROW(fs::kernel_tv_modulus(ar, {0.1, 0.01}, 4, 1), std::invalid_argument);
}

TEST(CharFnMin, GaussianNeverVanishes) {
  const auto r = fs::char_fn_min(fs::gaussian_density(1.0), 10.0, 2001);
  EXPECT_TRUE(r.pass) << r.notes;
  EXPECT_TRUE(r.find("min_abs_phi").has_value());
  EXPECT_FALSE(r.find("zero_at").has_value());
  const auto narrow = fs::char_fn_min(fs::gaussian_density(1.0), 3.0, 601);
  EXPECT_TRUE(narrow.pass);
  EXPECT_NEAR(*narrow.find("min_abs_phi"), std::exp(-4.5), 1e-6);
}

TEST(CharFnMin, LaplaceNeverVanishes) {
  const auto r = fs::char_fn_min(fs::laplace_density(1.0), 10.0, 2001);
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(*r.find("min_abs_phi"), 1.0 / 101.0, 1e-4);
}

TEST(CharFnMin, UniformVanishesAtPi) {
  const auto r = fs::char_fn_min(fs::uniform_density(1.0), 10.0, 2001);
  EXPECT_FALSE(r.pass);
  ASSERT_TRUE(r.find("zero_at").has_value());
  EXPECT_NEAR(std::abs(*r.find("zero_at")), fs::kPi, 1e-3);
}

TEST(CharFnMin, TriangularVanishesOnlyWhenTheWindowReachesTwoPi) {
  const auto wide = fs::char_fn_min(fs::triangular_density(1.0), 10.0, 2001);
  EXPECT_FALSE(wide.pass);
  ASSERT_TRUE(wide.find("zero_at").has_value());
  EXPECT_NEAR(std::abs(*wide.find("zero_at")), 2 * fs::kPi, 1e-3);
  const auto narrow = fs::char_fn_min(fs::triangular_density(1.0), 6.0, 1201);
  EXPECT_TRUE(narrow.pass);
  const double t = 6.0;
  EXPECT_NEAR(*narrow.find("min_abs_phi"), std::pow(std::sin(t / 2) / (t / 2), 2), 1e-6);
}

TEST(CharFnMin, EvidencePopulatedOnEveryOutcome) {
  for (const auto& q : {fs::gaussian_density(1.0), fs::uniform_density(1.0)}) {
    const auto r = fs::char_fn_min(q, 10.0, 2001);
    for (const char* key : {"min_abs_phi", "argmin_t", "freq_max", "freq_count", "tolerance", "quadrature_error"}) {
      EXPECT_TRUE(r.find(key).has_value()) << key;
    }
    EXPECT_FALSE(r.curve.empty());
  }
}

TEST(AssumptionReport, ArPresetPassesEveryCheck) {
  const auto ar = fs::ARKernel::linear_1d(1.0, 0.0, 1.0, fs::gaussian_density(1.0));
  const fs::HMMSpec spec(ar.as_kernel(), fs::ObservationChannel::identity(fs::gaussian_density(5.0)),
                         fs::GaussianMeasure::make_1d(-2, 1));
  const auto reports = fs::assumption_report(spec);
  EXPECT_EQ(reports.size(), 5u);
  for (const auto& r : reports) {
    EXPECT_TRUE(r.pass) << r.name << ": " << r.notes;
    EXPECT_FALSE(r.evidence.empty()) << r.name;
  }
  EXPECT_LT(*find_report(reports, "kernel_tv_modulus").find("modulus_at_0.001"), 0.01);
}

TEST(AssumptionReport, BlindChannelFailsTheInverseCheck) {
  const fs::HMMSpec spec(fs::TransitionKernel::identity(1), fs::ObservationChannel::blind(fs::gaussian_density(1.0)),
                         fs::GaussianMeasure::make_1d(0, 1));
  const auto reports = fs::assumption_report(spec);
  EXPECT_FALSE(find_report(reports, "h_inverse_roundtrip").pass);
  EXPECT_TRUE(find_report(reports, "noise_fourier_nonvanishing").pass);
  EXPECT_FALSE(find_report(reports, "kernel_tv_modulus").pass);
}

TEST(AssumptionReport, UniformObservationNoiseFailsTheFourierCheck) {
  const auto ar = fs::ARKernel::linear_1d(0.5, 0.0, 1.0, fs::gaussian_density(1.0));
  const fs::HMMSpec spec(ar.as_kernel(), fs::ObservationChannel::identity(fs::uniform_density(1.0)),
                         fs::GaussianMeasure::make_1d(0, 1));
  const auto reports = fs::assumption_report(spec);
  EXPECT_FALSE(find_report(reports, "noise_fourier_nonvanishing").pass);
  EXPECT_TRUE(find_report(reports, "h_inverse_roundtrip").pass);
}
