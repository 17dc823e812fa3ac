#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "filterstab/checks.hpp"
#include "filterstab/stability.hpp"

namespace filterstab {

/// A named, fully specified twin experiment.
struct Preset {
  std::string name;
  HMMSpec spec;
  Measure prior_mu;
  Measure prior_nu;
  Method method;
  GridConfig grid;
  std::size_t horizon;
  /// Set for the static Gaussian model, where the closed-form filter applies.
  std::optional<StaticGaussianModel> model;
};

/// static-gaussian, ar-random-walk, ar-contracting, counterexample-blind.
std::vector<std::string> preset_names();
/// Throws ConfigError for unknown names.
Preset make_preset(const std::string& name);

/// Resolved experiment description (a preset plus overrides).
struct ExperimentConfig {
  std::string label;
  HMMSpec spec;
  Measure prior_mu;
  Measure prior_nu;
  std::optional<Measure> observation_prior;
  Method method;
  GridConfig grid;
  std::size_t horizon;
  std::vector<std::uint64_t> seeds{1};
  bool record_bl = true;
  bool record_tv = true;
  bool record_predictor = false;
  std::size_t n_particles = 1000;
  std::filesystem::path out_dir = "out";
  AssumptionOptions assumptions;

  explicit ExperimentConfig(const Preset& preset);
  TwinRunConfig twin(std::uint64_t seed) const;
};

/// Command-line overrides applied after the config file.
struct Overrides {
  std::optional<std::string> preset;
  std::optional<std::size_t> horizon;
  std::optional<std::vector<std::uint64_t>> seeds;
  std::optional<std::string> method;
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::string> distances;
};

/// Builds a config from an optional INI file and overrides. Unknown sections
/// or keys raise ConfigError naming "section.key".
ExperimentConfig load_experiment(const std::optional<std::filesystem::path>& config_path, const Overrides& overrides);

/// Parses INI text (exposed for tests).
ExperimentConfig parse_experiment(std::istream& ini, const Overrides& overrides);

inline constexpr const char* kTraceHeader = "step,bl,tv,predictor_bl,predictor_tv,cos_lower";

void write_trace_csv(const StabilityTrace& trace, std::ostream& out);

/// Rows of a trace CSV with the fixed header; empty fields become NaN.
struct TraceTable {
  std::vector<std::size_t> steps;
  std::vector<std::vector<double>> columns;  ///< bl, tv, predictor_bl, predictor_tv, cos_lower
  const std::vector<double>& column(const std::string& name) const;
};
TraceTable read_trace_csv(std::istream& in);

/// Runs every seed, writes trace_<seed>.csv and summary.json into out_dir.
/// Returns 0 on success, 2 on a degenerate update, 1 on configuration or
/// runtime errors; diagnostics go to `err`.
int run_experiment(const ExperimentConfig& config, std::ostream& log, std::ostream& err);

/// Prints one line per assumption check; returns 0 iff all pass.
int check_assumptions(const ExperimentConfig& config, std::ostream& out);

/// Fits and prints the decay rate of one column of a trace CSV.
int rate_command(const std::filesystem::path& csv, const std::string& column, std::ostream& out, std::ostream& err);

}  // namespace filterstab
