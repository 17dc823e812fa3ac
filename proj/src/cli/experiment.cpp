#include "filterstab/experiment.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <set>
#include <sstream>

#include "filterstab/errors.hpp"

namespace filterstab {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"run", {"preset", "horizon", "seeds", "method", "out", "distances", "record_predictor", "particles"}},
      {"grid", {"origin", "spacing", "count"}},
      {"kernel", {"kind", "drift_coef", "drift_offset", "sigma", "noise", "noise_scale"}},
      {"channel", {"kind", "gain", "noise", "noise_scale"}},
      {"prior_mu", {"kind", "mean", "var", "atoms", "weights"}},
      {"prior_nu", {"kind", "mean", "var", "atoms", "weights"}},
      {"observation_prior", {"kind", "mean", "var", "atoms", "weights"}},
      {"checks", {"freq_max", "freq_count", "probes", "box", "seed"}},
  };
  return keys;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  try {
    std::size_t used = 0;
    const double v = std::stod(t, &used);
    if (used == t.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("expected a finite number for '" + key + "', got '" + text + "'", key);
}

std::uint64_t parse_unsigned(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  try {
    std::size_t used = 0;
    if (!t.empty() && t[0] != '-') {
      const unsigned long long v = std::stoull(t, &used);
      if (used == t.size()) return v;
    }
  } catch (const std::exception&) {
  }
  throw ConfigError("expected a nonnegative integer for '" + key + "', got '" + text + "'", key);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  for (char c : text) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!item.empty()) out.push_back(item);
      item.clear();
    } else {
      item.push_back(c);
    }
  }
  if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<double> parse_doubles(const std::string& text, const std::string& key) {
  std::vector<double> out;
  for (const auto& s : split_list(text)) out.push_back(parse_double(s, key));
  if (out.empty()) throw ConfigError("empty list for '" + key + "'", key);
  return out;
}

bool parse_bool(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError("expected true or false for '" + key + "'", key);
}

// Read access to one INI section with key tracking for error messages.
class Section {
 public:
  Section(std::string name, const pt::ptree* tree) : name_(std::move(name)), tree_(tree) {}

  bool present() const { return tree_ != nullptr; }
  bool has(const std::string& key) const { return tree_ != nullptr && tree_->find(key) != tree_->not_found(); }
  std::string key(const std::string& k) const { return name_ + "." + k; }

  std::string text(const std::string& k) const {
    if (!has(k)) throw ConfigError("missing required key '" + key(k) + "'", key(k));
    return trim(tree_->get<std::string>(k));
  }
  std::string text_or(const std::string& k, const std::string& fallback) const { return has(k) ? text(k) : fallback; }
  double number(const std::string& k) const { return parse_double(text(k), key(k)); }
  double number_or(const std::string& k, double fallback) const { return has(k) ? number(k) : fallback; }

 private:
  std::string name_;
  const pt::ptree* tree_;
};

DensityFn make_noise(const std::string& kind, double scale, const std::string& key) {
  if (!(scale > 0.0)) throw ConfigError("noise scale must be positive for '" + key + "'", key);
  if (kind == "gaussian") return gaussian_density(scale);
  if (kind == "uniform") return uniform_density(scale);
  if (kind == "triangular") return triangular_density(scale);
  if (kind == "laplace") return laplace_density(scale);
  throw ConfigError("unknown noise '" + kind + "' for '" + key + "' (gaussian, uniform, triangular, laplace)", key);
}

TransitionKernel make_kernel(const Section& s) {
  const std::string kind = s.text_or("kind", "ar");
  if (kind == "identity") return TransitionKernel::identity(1);
  if (kind != "ar") throw ConfigError("unknown kernel kind '" + kind + "' (identity, ar)", s.key("kind"));
  const double sigma = s.number_or("sigma", 1.0);
  if (sigma == 0.0) throw ConfigError("kernel sigma must be nonzero", s.key("sigma"));
  DensityFn noise = make_noise(s.text_or("noise", "gaussian"), s.number_or("noise_scale", 1.0), s.key("noise"));
  return ARKernel::linear_1d(s.number_or("drift_coef", 1.0), s.number_or("drift_offset", 0.0), sigma, std::move(noise))
      .as_kernel();
}

ObservationChannel make_channel(const Section& s) {
  const std::string kind = s.text_or("kind", "identity");
  DensityFn noise = make_noise(s.text_or("noise", "gaussian"), s.number_or("noise_scale", 1.0), s.key("noise"));
  if (kind == "identity") return ObservationChannel::identity(std::move(noise));
  if (kind == "blind") return ObservationChannel::blind(std::move(noise));
  if (kind == "linear") {
    const double gain = s.number("gain");
    if (gain == 0.0) throw ConfigError("linear channel gain must be nonzero (use kind = blind)", s.key("gain"));
    return ObservationChannel::linear_1d(gain, std::move(noise));
  }
  throw ConfigError("unknown channel kind '" + kind + "' (identity, linear, blind)", s.key("kind"));
}

Measure make_prior(const Section& s) {
  const std::string kind = s.text_or("kind", "gaussian");
  if (kind == "gaussian") {
    const double var = s.number("var");
    if (!(var >= 0.0)) throw ConfigError("prior variance must be >= 0", s.key("var"));
    return GaussianMeasure::make_1d(s.number("mean"), var);
  }
  if (kind == "atoms") {
    const auto atoms = parse_doubles(s.text("atoms"), s.key("atoms"));
    std::vector<double> weights(atoms.size(), 1.0);
    if (s.has("weights")) weights = parse_doubles(s.text("weights"), s.key("weights"));
    if (weights.size() != atoms.size()) throw ConfigError("atoms and weights differ in length", s.key("weights"));
    for (double w : weights) {
      if (!(w >= 0.0)) throw ConfigError("weights must be nonnegative", s.key("weights"));
    }
    try {
      return DiscreteMeasure::make_1d(atoms, weights);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("invalid atoms: ") + e.what(), s.key("atoms"));
    }
  }
  throw ConfigError("unknown prior kind '" + kind + "' (gaussian, atoms)", s.key("kind"));
}

void apply_distances(ExperimentConfig& c, const std::string& text, const std::string& key) {
  c.record_bl = false;
  c.record_tv = false;
  for (const auto& d : split_list(text)) {
    if (d == "bl") {
      c.record_bl = true;
    } else if (d == "tv") {
      c.record_tv = true;
    } else {
      throw ConfigError("unknown distance '" + d + "' (bl, tv)", key);
    }
  }
  if (!c.record_bl && !c.record_tv) throw ConfigError("no distances selected", key);
}

std::vector<std::uint64_t> parse_seeds(const std::string& text, const std::string& key) {
  std::vector<std::uint64_t> seeds;
  for (const auto& s : split_list(text)) seeds.push_back(parse_unsigned(s, key));
  if (seeds.empty()) throw ConfigError("empty seed list", key);
  return seeds;
}

Preset custom_base(const Section& kernel, const Section& channel, const Section& mu, const Section& nu) {
  if (!kernel.present() || !channel.present() || !mu.present() || !nu.present()) {
    throw ConfigError("without a preset the config needs [kernel], [channel], [prior_mu] and [prior_nu]", "run.preset");
  }
  Measure prior_mu = make_prior(mu);
  HMMSpec spec(make_kernel(kernel), make_channel(channel), prior_mu);
  return Preset{"custom", std::move(spec), std::move(prior_mu), make_prior(nu), Method::grid,
                GridConfig{}, 100, std::nullopt};
}

std::string format_number(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string format_optional(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

}  // namespace

ExperimentConfig::ExperimentConfig(const Preset& preset)
    : label(preset.name),
      spec(preset.spec),
      prior_mu(preset.prior_mu),
      prior_nu(preset.prior_nu),
      method(preset.method),
      grid(preset.grid),
      horizon(preset.horizon) {}

TwinRunConfig ExperimentConfig::twin(std::uint64_t seed) const {
  TwinRunConfig t(spec, prior_mu, prior_nu);
  t.horizon = horizon;
  t.seed = seed;
  t.method = method;
  t.record_bl = record_bl;
  t.record_tv = record_tv;
  t.record_predictor = record_predictor;
  t.grid = grid;
  t.n_particles = n_particles;
  t.observation_prior = observation_prior;
  return t;
}

ExperimentConfig parse_experiment(std::istream& ini, const Overrides& overrides) {
  pt::ptree tree;
  try {
    pt::read_ini(ini, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  const auto& allowed = allowed_keys();
  for (const auto& [section, body] : tree) {
    const auto it = allowed.find(section);
    if (it == allowed.end()) {
      if (body.empty()) throw ConfigError("unknown top-level key '" + section + "'", section);
      throw ConfigError("unknown section '[" + section + "]'", section);
    }
    for (const auto& [key, value] : body) {
      (void)value;
      if (it->second.count(key) == 0) throw ConfigError("unknown key '" + section + "." + key + "'", section + "." + key);
    }
  }
  auto section = [&](const std::string& name) {
    const auto child = tree.get_child_optional(name);
    return Section(name, child ? &*child : nullptr);
  };
  const Section run = section("run");
  const Section grid = section("grid");
  const Section kernel = section("kernel");
  const Section channel = section("channel");
  const Section mu = section("prior_mu");
  const Section nu = section("prior_nu");
  const Section gamma = section("observation_prior");
  const Section checks = section("checks");

  std::optional<std::string> preset_name = overrides.preset;
  if (!preset_name && run.has("preset")) preset_name = run.text("preset");
  Preset base = preset_name ? make_preset(*preset_name) : custom_base(kernel, channel, mu, nu);
  ExperimentConfig c(base);

  try {
    if (kernel.present()) c.spec.kernel = make_kernel(kernel);
    if (channel.present()) c.spec.channel = make_channel(channel);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid model: ") + e.what(), kernel.present() ? "kernel" : "channel");
  }
  if (mu.present()) c.prior_mu = make_prior(mu);
  if (nu.present()) c.prior_nu = make_prior(nu);
  c.spec.prior = c.prior_mu;
  if (gamma.present()) c.observation_prior = make_prior(gamma);
  if (kernel.present() || channel.present() || mu.present() || nu.present()) {
    if (preset_name) c.label = *preset_name + "+overrides";
  }

  if (grid.present()) {
    c.grid.origin = grid.number_or("origin", c.grid.origin);
    c.grid.spacing = grid.number_or("spacing", c.grid.spacing);
    if (grid.has("count")) c.grid.count = parse_unsigned(grid.text("count"), grid.key("count"));
    if (!(c.grid.spacing > 0.0)) throw ConfigError("grid spacing must be positive", grid.key("spacing"));
    if (c.grid.count < 2) throw ConfigError("grid needs at least 2 nodes", grid.key("count"));
  }
  if (run.has("horizon")) c.horizon = parse_unsigned(run.text("horizon"), run.key("horizon"));
  if (run.has("seeds")) c.seeds = parse_seeds(run.text("seeds"), run.key("seeds"));
  if (run.has("method")) {
    try {
      c.method = parse_method(run.text("method"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what(), run.key("method"));
    }
  }
  if (run.has("out")) c.out_dir = run.text("out");
  if (run.has("distances")) apply_distances(c, run.text("distances"), run.key("distances"));
  if (run.has("record_predictor")) c.record_predictor = parse_bool(run.text("record_predictor"), run.key("record_predictor"));
  if (run.has("particles")) c.n_particles = parse_unsigned(run.text("particles"), run.key("particles"));

  if (checks.present()) {
    c.assumptions.freq_max = checks.number_or("freq_max", c.assumptions.freq_max);
    if (checks.has("freq_count")) {
      c.assumptions.freq_count = static_cast<int>(parse_unsigned(checks.text("freq_count"), checks.key("freq_count")));
    }
    if (checks.has("probes")) {
      c.assumptions.modulus_probes = static_cast<int>(parse_unsigned(checks.text("probes"), checks.key("probes")));
    }
    c.assumptions.box_half_width = checks.number_or("box", c.assumptions.box_half_width);
    if (checks.has("seed")) c.assumptions.seed = parse_unsigned(checks.text("seed"), checks.key("seed"));
  }

  if (overrides.horizon) c.horizon = *overrides.horizon;
  if (overrides.seeds) c.seeds = *overrides.seeds;
  if (overrides.method) {
    try {
      c.method = parse_method(*overrides.method);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what(), "--method");
    }
  }
  if (overrides.out_dir) c.out_dir = *overrides.out_dir;
  if (overrides.distances) apply_distances(c, *overrides.distances, "--distances");

  if (c.horizon < 1) throw ConfigError("horizon must be >= 1", "run.horizon");
  if (c.seeds.empty()) throw ConfigError("no seeds", "run.seeds");
  if (c.n_particles < 2) throw ConfigError("need at least 2 particles", "run.particles");
  return c;
}

ExperimentConfig load_experiment(const std::optional<std::filesystem::path>& config_path, const Overrides& overrides) {
  if (!config_path) {
    std::istringstream empty;
    return parse_experiment(empty, overrides);
  }
  std::ifstream in(*config_path);
  if (!in) throw ConfigError("cannot read config '" + config_path->string() + "'");
  return parse_experiment(in, overrides);
}

void write_trace_csv(const StabilityTrace& trace, std::ostream& out) {
  out << kTraceHeader << '\n';
  for (const auto& row : trace.rows) {
    out << row.step << ',' << format_optional(row.bl) << ',' << format_optional(row.tv) << ','
        << format_optional(row.predictor_bl) << ',' << format_optional(row.predictor_tv) << ','
        << format_optional(row.cos_lower) << '\n';
  }
}

const std::vector<double>& TraceTable::column(const std::string& name) const {
  static const std::vector<std::string> names{"bl", "tv", "predictor_bl", "predictor_tv", "cos_lower"};
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return columns[i];
  }
  throw std::invalid_argument("unknown trace column '" + name + "'");
}

TraceTable read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != kTraceHeader) {
    throw std::invalid_argument(std::string("trace CSV must start with the header '") + kTraceHeader + "'");
  }
  TraceTable table;
  table.columns.assign(5, {});
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream row(line);
    while (std::getline(row, field, ',')) fields.push_back(trim(field));
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (fields.size() != 6) throw std::invalid_argument("trace CSV line " + std::to_string(line_no) + ": expected 6 fields");
    table.steps.push_back(parse_unsigned(fields[0], "step"));
    for (std::size_t c = 0; c < 5; ++c) {
      table.columns[c].push_back(fields[c + 1].empty() ? std::nan("") : parse_double(fields[c + 1], "value"));
    }
  }
  return table;
}

int run_experiment(const ExperimentConfig& config, std::ostream& log, std::ostream& err) {
  using nlohmann::ordered_json;
  std::vector<StabilityTrace> traces;
  try {
    std::filesystem::create_directories(config.out_dir);
    for (std::uint64_t seed : config.seeds) {
      StabilityTrace trace = twin_run(config.twin(seed));
      const auto path = config.out_dir / ("trace_" + std::to_string(seed) + ".csv");
      std::ofstream csv(path);
      if (!csv) throw std::runtime_error("cannot write " + path.string());
      write_trace_csv(trace, csv);
      log << "seed " << seed << ": wrote " << path.string() << " (" << trace.size() << " steps, "
          << format_number(trace.rows.back().wall_seconds) << " s)\n";
      traces.push_back(std::move(trace));
    }
  } catch (const DegenerateUpdate& e) {
    err << "error: degenerate update: " << e.what() << '\n';
    return 2;
  } catch (const ParticleDegeneracy& e) {
    err << "error: particle degeneracy: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  ordered_json summary;
  summary["preset"] = config.label;
  summary["method"] = to_string(config.method);
  summary["horizon"] = config.horizon;
  summary["seeds"] = config.seeds;
  ordered_json final_bl = ordered_json::array();
  ordered_json final_tv = ordered_json::array();
  ordered_json x0 = ordered_json::array();
  for (const auto& t : traces) {
    const auto& last = t.rows.back();
    final_bl.push_back(last.bl ? ordered_json(*last.bl) : ordered_json());
    final_tv.push_back(last.tv ? ordered_json(*last.tv) : ordered_json());
    x0.push_back(t.x0());
  }
  summary["final_bl"] = final_bl;
  summary["final_tv"] = final_tv;

  // Rate fit on the seed-averaged distance trace.
  const std::string metric = config.record_bl ? "bl" : "tv";
  std::vector<double> mean(config.horizon, 0.0);
  for (const auto& t : traces) {
    const auto col = t.column(metric);
    for (std::size_t n = 0; n < mean.size(); ++n) mean[n] += col[n] / static_cast<double>(traces.size());
  }
  summary["rate_metric"] = metric;
  try {
    const RateFit fit = estimate_rate(mean);
    summary["rate_slope"] = fit.slope;
    summary["rate_class"] = to_string(fit.classification);
    summary["rate_window"] = {fit.n_min, fit.n_max};
    summary["rate_r2"] = fit.r2;
  } catch (const std::invalid_argument& e) {
    summary["rate_slope"] = nullptr;
    summary["rate_class"] = nullptr;
    summary["rate_note"] = e.what();
  }

  ordered_json liminf = ordered_json::array();
  std::optional<StaticGaussianModel> model;
  if (config.method == Method::kalman_static) {
    const auto& a = std::get<GaussianMeasure>(config.prior_mu);
    const auto& b = std::get<GaussianMeasure>(config.prior_nu);
    model = StaticGaussianModel{a.mean[0], b.mean[0], a.variance[0]};
  }
  for (const auto& t : traces) {
    if (model && model->sigma2 > 0.0 && t.size() >= 2) {
      liminf.push_back(liminf_constant(t, *model, t.x0()).estimate);
    } else {
      liminf.push_back(nullptr);
    }
  }
  summary["liminf_estimate"] = liminf;
  summary["x0"] = x0;
  if (model) {
    summary["model"] = {{"alpha", model->alpha}, {"beta", model->beta}, {"sigma2", model->sigma2}};
  }

  std::size_t in_range = 0;
  std::size_t in_range_total = 0;
  std::size_t bl_tv = 0;
  std::size_t bl_tv_total = 0;
  std::size_t cos_bl = 0;
  std::size_t cos_bl_total = 0;
  for (const auto& t : traces) {
    for (const auto& row : t.rows) {
      for (const auto* d : {&row.bl, &row.tv, &row.predictor_bl, &row.predictor_tv}) {
        if (!*d) continue;
        ++in_range_total;
        in_range += (**d >= 0.0 && **d <= 2.0) ? 1 : 0;
      }
      if (row.bl && row.tv) {
        ++bl_tv_total;
        bl_tv += *row.bl <= *row.tv + 1e-9 ? 1 : 0;
      }
      if (row.cos_lower && row.bl) {
        ++cos_bl_total;
        cos_bl += *row.cos_lower <= *row.bl + 1e-9 ? 1 : 0;
      }
    }
  }
  ordered_json checks;
  checks["distances_in_range"] = {{"passed", in_range}, {"total", in_range_total}};
  checks["bl_le_tv"] = {{"passed", bl_tv}, {"total", bl_tv_total}};
  checks["cos_lower_le_bl"] = {{"passed", cos_bl}, {"total", cos_bl_total}};
  summary["checks"] = checks;

  const auto path = config.out_dir / "summary.json";
  std::ofstream out(path);
  if (!out) {
    err << "error: cannot write " << path.string() << '\n';
    return 1;
  }
  out << summary.dump(2) << '\n';
  log << "wrote " << path.string() << '\n';
  return 0;
}

int check_assumptions(const ExperimentConfig& config, std::ostream& out) {
  const auto reports = assumption_report(config.spec, config.assumptions);
  bool all = true;
  for (const auto& r : reports) {
    all = all && r.pass;
    out << (r.pass ? "PASS " : "FAIL ") << r.name;
    for (const auto& [k, v] : r.evidence) out << ' ' << k << '=' << format_number(v);
    if (!r.notes.empty()) out << "  # " << r.notes;
    out << '\n';
  }
  return all ? 0 : 1;
}

int rate_command(const std::filesystem::path& csv, const std::string& column, std::ostream& out, std::ostream& err) {
  try {
    std::ifstream in(csv);
    if (!in) throw std::runtime_error("cannot read " + csv.string());
    const TraceTable table = read_trace_csv(in);
    const RateFit fit = estimate_rate(table.column(column));
    out << "column=" << column << " window=[" << fit.n_min << ',' << fit.n_max << "] points=" << fit.points
        << " slope=" << format_number(fit.slope) << " r2=" << format_number(fit.r2)
        << " linear_slope=" << format_number(fit.linear_slope) << " linear_r2=" << format_number(fit.linear_r2)
        << " class=" << to_string(fit.classification) << '\n';
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace filterstab
