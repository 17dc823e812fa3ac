#include "filterstab/errors.hpp"
#include "filterstab/experiment.hpp"

namespace filterstab {

std::vector<std::string> preset_names() {
  return {"static-gaussian", "ar-random-walk", "ar-contracting", "counterexample-blind"};
}

Preset make_preset(const std::string& name) {
  if (name == "static-gaussian") {
    const StaticGaussianModel model{0.0, 1.0, 1.0};
    return Preset{name,
                  model.spec(),
                  GaussianMeasure::make_1d(model.alpha, model.sigma2),
                  GaussianMeasure::make_1d(model.beta, model.sigma2),
                  Method::kalman_static,
                  GridConfig::covering(-10.0, 10.0, 0.005),
                  2000,
                  model};
  }
  if (name == "ar-random-walk") {
    // Observation noise std 5 against unit signal noise: low signal-to-noise ratio.
    const ARKernel ar = ARKernel::linear_1d(1.0, 0.0, 1.0, gaussian_density(1.0));
    return Preset{name,
                  HMMSpec(ar.as_kernel(), ObservationChannel::identity(gaussian_density(5.0)),
                          GaussianMeasure::make_1d(-2.0, 1.0)),
                  GaussianMeasure::make_1d(-2.0, 1.0),
                  GaussianMeasure::make_1d(2.0, 1.0),
                  Method::grid,
                  GridConfig::covering(-100.0, 100.0, 0.1),
                  200,
                  std::nullopt};
  }
  if (name == "ar-contracting") {
    const ARKernel ar = ARKernel::linear_1d(0.5, 0.0, 1.0, gaussian_density(1.0));
    return Preset{name,
                  HMMSpec(ar.as_kernel(), ObservationChannel::identity(gaussian_density(1.0)),
                          GaussianMeasure::make_1d(-3.0, 1.0)),
                  GaussianMeasure::make_1d(-3.0, 1.0),
                  GaussianMeasure::make_1d(3.0, 1.0),
                  Method::grid,
                  GridConfig::covering(-15.0, 15.0, 0.02),
                  100,
                  std::nullopt};
  }
  if (name == "counterexample-blind") {
    return Preset{name,
                  HMMSpec(TransitionKernel::identity(1), ObservationChannel::blind(gaussian_density(1.0)),
                          GaussianMeasure::make_1d(0.0, 1.0)),
                  GaussianMeasure::make_1d(0.0, 1.0),
                  GaussianMeasure::make_1d(1.0, 1.0),
                  Method::grid,
                  GridConfig::covering(-10.0, 10.0, 0.01),
                  100,
                  std::nullopt};
  }
  throw ConfigError("unknown preset '" + name + "'", "run.preset");
}

}  // namespace filterstab
