#include <CLI11.hpp>
#include <iostream>

#include "filterstab/errors.hpp"
#include "filterstab/experiment.hpp"

namespace {

struct CommonFlags {
  std::string preset;
  std::string config;
  std::size_t horizon = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds;
  std::string method;
  std::string out;
  std::string distances;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--preset", f.preset, "Model preset")
      ->check(CLI::IsMember(filterstab::preset_names()));
  cmd->add_option("--config", f.config, "INI experiment config")->check(CLI::ExistingFile);
}

filterstab::Overrides overrides_from(const CommonFlags& f, const CLI::App* cmd) {
  filterstab::Overrides o;
  if (!f.preset.empty()) o.preset = f.preset;
  auto given = [cmd](const char* name) {
    const CLI::Option* opt = cmd->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };
  if (given("--horizon")) o.horizon = f.horizon;
  if (given("--seed")) o.seeds = std::vector<std::uint64_t>{f.seed};
  if (given("--seeds")) o.seeds = f.seeds;
  if (!f.method.empty()) o.method = f.method;
  if (!f.out.empty()) o.out_dir = f.out;
  if (!f.distances.empty()) o.distances = f.distances;
  return o;
}

std::optional<std::filesystem::path> config_path(const CommonFlags& f) {
  if (f.config.empty()) return std::nullopt;
  return std::filesystem::path(f.config);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Twin-filter stability experiments"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  auto* run = app.add_subcommand("run", "Run a twin-filter experiment and write trace CSVs and summary.json");
  add_common(run, run_flags);
  run->add_option("--horizon", run_flags.horizon, "Number of observation steps")->check(CLI::PositiveNumber);
  auto* seed_opt = run->add_option("--seed", run_flags.seed, "Single seed");
  run->add_option("--seeds", run_flags.seeds, "Comma-separated seeds")->delimiter(',')->excludes(seed_opt);
  run->add_option("--method", run_flags.method, "grid, particle or kalman-static")
      ->check(CLI::IsMember({"grid", "particle", "kalman-static"}));
  run->add_option("--out", run_flags.out, "Output directory");
  run->add_option("--distances", run_flags.distances, "Comma-separated subset of bl,tv");

  CommonFlags check_flags;
  auto* check = app.add_subcommand("check-assumptions", "Run the observation and kernel diagnostics");
  add_common(check, check_flags);

  std::string csv;
  std::string column = "bl";
  auto* rate = app.add_subcommand("rate", "Fit the decay rate of a trace CSV column");
  rate->add_option("trace", csv, "Trace CSV")->required()->check(CLI::ExistingFile);
  rate->add_option("--column", column, "Column to fit")
      ->check(CLI::IsMember({"bl", "tv", "predictor_bl", "predictor_tv", "cos_lower"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (run->parsed()) {
      const auto config = filterstab::load_experiment(config_path(run_flags), overrides_from(run_flags, run));
      return filterstab::run_experiment(config, std::cout, std::cerr);
    }
    if (check->parsed()) {
      const auto config = filterstab::load_experiment(config_path(check_flags), overrides_from(check_flags, check));
      return filterstab::check_assumptions(config, std::cout);
    }
    return filterstab::rate_command(csv, column, std::cout, std::cerr);
  } catch (const filterstab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
