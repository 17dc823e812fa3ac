#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <fstream>
#include <sstream>

#include "filterstab/checks.hpp"
#include "filterstab/errors.hpp"
#include "filterstab/experiment.hpp"
#include "filterstab/stability.hpp"

namespace py = pybind11;
namespace fs = filterstab;

namespace {

fs::DiscreteMeasure discrete(const std::vector<double>& atoms, const std::vector<double>& weights) {
  return fs::DiscreteMeasure::make_1d(atoms, weights);
}

py::dict columns(const fs::StabilityTrace& trace) {
  py::dict out;
  std::vector<std::size_t> steps;
  for (const auto& r : trace.rows) steps.push_back(r.step);
  out["step"] = steps;
  for (const char* name : {"bl", "tv", "predictor_bl", "predictor_tv", "cos_lower"}) out[name] = trace.column(name);
  out["x0"] = trace.x0();
  out["observations"] = trace.path.observations_1d();
  return out;
}

py::dict rate_dict(const fs::RateFit& f) {
  py::dict d;
  d["slope"] = f.slope;
  d["intercept"] = f.intercept;
  d["r2"] = f.r2;
  d["linear_slope"] = f.linear_slope;
  d["linear_r2"] = f.linear_r2;
  d["classification"] = fs::to_string(f.classification);
  d["window"] = py::make_tuple(f.n_min, f.n_max);
  d["points"] = f.points;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Filter stability laboratory: distances, filters and twin-filter experiments.";
  m.attr("__version__") = "0.1.0";
  m.attr("TRACE_HEADER") = fs::kTraceHeader;

  py::register_exception<fs::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<fs::DegenerateUpdate>(m, "DegenerateUpdate", PyExc_RuntimeError);
  py::register_exception<fs::NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<fs::DimensionError>(m, "DimensionError", PyExc_ValueError);

  m.def("preset_names", &fs::preset_names);

  m.def(
      "tv_gaussian",
      [](double m0, double v0, double m1, double v1) {
        return fs::tv_distance(fs::GaussianMeasure::make_1d(m0, v0), fs::GaussianMeasure::make_1d(m1, v1));
      },
      py::arg("mean_a"), py::arg("var_a"), py::arg("mean_b"), py::arg("var_b"),
      "L1 distance (range [0, 2]) between two univariate Gaussians.");
  m.def(
      "tv_discrete",
      [](const std::vector<double>& xa, const std::vector<double>& wa, const std::vector<double>& xb,
         const std::vector<double>& wb) { return fs::tv_distance(discrete(xa, wa), discrete(xb, wb)); },
      py::arg("atoms_a"), py::arg("weights_a"), py::arg("atoms_b"), py::arg("weights_b"));
  m.def(
      "bl_discrete",
      [](const std::vector<double>& xa, const std::vector<double>& wa, const std::vector<double>& xb,
         const std::vector<double>& wb) { return fs::bl_distance(discrete(xa, wa), discrete(xb, wb)); },
      py::arg("atoms_a"), py::arg("weights_a"), py::arg("atoms_b"), py::arg("weights_b"),
      "Dual bounded-Lipschitz distance between two discrete measures on the line.");
  m.def("cos_bl_lower_bound", &fs::cos_bl_lower_bound, py::arg("z_mu"), py::arg("v"), py::arg("z_nu"));

  m.def(
      "kalman_static",
      [](double alpha, double beta, double sigma2, double prior_mean, const std::vector<double>& ys) {
        std::vector<std::pair<double, double>> out;
        for (const auto& s : fs::kalman_static(fs::StaticGaussianModel{alpha, beta, sigma2}, prior_mean, ys)) {
          out.emplace_back(s.z, s.v);
        }
        return out;
      },
      py::arg("alpha"), py::arg("beta"), py::arg("sigma2"), py::arg("prior_mean"), py::arg("observations"),
      "(mean, variance) of the static Gaussian filter after each observation.");

  m.def(
      "twin_run",
      [](const std::string& preset, std::size_t horizon, std::uint64_t seed, std::optional<std::string> method) {
        const auto p = fs::make_preset(preset);
        fs::TwinRunConfig c(p.spec, p.prior_mu, p.prior_nu);
        c.horizon = horizon;
        c.seed = seed;
        c.method = method ? fs::parse_method(*method) : p.method;
        c.grid = p.grid;
        std::optional<fs::StabilityTrace> trace;
        {
          py::gil_scoped_release release;
          trace = fs::twin_run(c);
        }
        return columns(*trace);
      },
      py::arg("preset"), py::arg("horizon"), py::arg("seed"), py::arg("method") = py::none(),
      "Runs two filters of a preset model on one simulated path; returns trace columns.");

  m.def(
      "estimate_rate",
      [](const std::vector<double>& values, std::optional<std::size_t> n_min, std::optional<std::size_t> n_max) {
        if (n_min || n_max) {
          return rate_dict(fs::estimate_rate(values, n_min.value_or(std::max<std::size_t>(1, values.size() / 10)),
                                             n_max.value_or(values.empty() ? 0 : values.size() - 1)));
        }
        return rate_dict(fs::estimate_rate(values));
      },
      py::arg("values"), py::arg("n_min") = py::none(), py::arg("n_max") = py::none());

  m.def(
      "check_assumptions",
      [](const std::string& preset) {
        py::list out;
        for (const auto& r : fs::assumption_report(fs::make_preset(preset).spec)) {
          py::dict d;
          d["name"] = r.name;
          d["pass"] = r.pass;
          py::dict ev;
          for (const auto& [k, v] : r.evidence) ev[py::str(k)] = v;
          d["evidence"] = ev;
          d["notes"] = r.notes;
          out.append(d);
        }
        return out;
      },
      py::arg("preset"));

  m.def(
      "run",
      [](const std::string& preset, std::size_t horizon, const std::vector<std::uint64_t>& seeds,
         const std::filesystem::path& out_dir, std::optional<std::string> method) {
        fs::Overrides o;
        o.preset = preset;
        o.horizon = horizon;
        o.seeds = seeds;
        o.out_dir = out_dir;
        o.method = method;
        const auto config = fs::load_experiment(std::nullopt, o);
        std::ostringstream log, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = fs::run_experiment(config, log, err);
        }
        return py::make_tuple(code, log.str(), err.str());
      },
      py::arg("preset"), py::arg("horizon"), py::arg("seeds"), py::arg("out_dir"), py::arg("method") = py::none(),
      "Writes trace_<seed>.csv files and summary.json; returns (exit code, log, errors).");

  m.def(
      "read_trace_csv",
      [](const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot read " + path.string());
        const auto t = fs::read_trace_csv(in);
        py::dict d;
        d["step"] = t.steps;
        for (const char* name : {"bl", "tv", "predictor_bl", "predictor_tv", "cos_lower"}) d[name] = t.column(name);
        return d;
      },
      py::arg("path"));
}
