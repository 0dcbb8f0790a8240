#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nphmm/calibration.hpp"
#include "nphmm/crossval.hpp"
#include "nphmm/diagnostics.hpp"
#include "nphmm/errors.hpp"
#include "nphmm/family.hpp"
#include "nphmm/io.hpp"
#include "nphmm/selection.hpp"
#include "nphmm/simplex.hpp"
#include "nphmm/simulation.hpp"
#include "nphmm/spectral.hpp"

namespace py = pybind11;
using namespace nphmm;

namespace {

// Structured results cross the boundary as JSON text; the Python side decodes it.
std::string estimate(const std::vector<double>& obs, int K, const std::string& method, const std::string& basis_name,
                     int m, int M_min, int M_max, int retries, std::uint64_t seed, int threads) {
  const Basis basis(basis_kind_from_string(basis_name), M_max);
  FamilyOptions options;
  options.m = m;
  options.retries = retries;
  options.seed = seed;
  options.threads = threads;
  const auto grid = model_range(M_min, M_max);
  const auto family = method_from_string(method) == Method::Spectral
                          ? estimate_spectral_family(obs, basis, grid, K, options)
                          : estimate_ls_family(obs, basis, grid, K, options);
  return family_to_json(family).dump();
}

std::string select_doc(const std::string& family_json, const std::string& variant_name,
                   const std::string& calibration, const std::vector<double>& rho, int rho_points) {
  const auto family = family_from_json(Json::parse(family_json));
  const auto variant = variant_from_string(variant_name);
  const auto kind = penalty_kind_for(family.method);
  const DistanceCache cache(family);
  PenaltyDescriptor penalty{kind, {}, family.n};
  Json cal_json;
  if (calibration == "none") {
    require(rho.size() == 1 || static_cast<int>(rho.size()) == family.K, ErrorKind::InvalidArgument,
            "rho needs one value or one per state");
    penalty.rho = rho.size() == 1 ? std::vector<double>(family.K, rho[0]) : rho;
  } else {
    const auto grid = default_rho_grid(family, cache, kind, rho_points);
    const auto cal = calibrate(family, cache, kind, calibration_mode_from_string(calibration), grid, variant);
    penalty = cal.penalty(kind, family.n);
    cal_json = calibration_to_json(cal);
  }
  auto doc = selection_to_json(select_models(family, cache, penalty, variant));
  if (!cal_json.is_null()) doc["calibration"] = cal_json;
  return doc.dump();
}

std::string cv(const std::vector<double>& obs, int K, int m, int M_min, int M_max, int folds, int gap,
               std::uint64_t seed) {
  CvOptions options;
  options.folds = folds;
  options.gap = gap;
  options.m = m;
  options.seed = seed;
  return cv_to_json(cv_select(obs, Basis(BasisKind::Trig, M_max), model_range(M_min, M_max), K, options)).dump();
}

std::string hdet(const std::string& params_json, double step) {
  return hdet_to_json(hdet_diagnostic(params_from_json(Json::parse(params_json)), step)).dump();
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() = "Nonparametric HMM emission estimation with per-state model selection";

  static py::exception<Error> error(mod, "NphmmError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, (std::string(to_string(e.kind())) + ": " + e.what()).c_str());
    }
  });

  mod.attr("schema_version") = kSchemaVersion;

  mod.def("simulate", [](std::int64_t n, std::uint64_t seed, const std::vector<std::string>& emissions,
                         const Eigen::MatrixXd& Q) {
    const auto truth = GroundTruth::make(emissions, Q, Basis(BasisKind::Trig, 1), 1024);
    return sample_hmm(truth, n, seed);
  }, py::arg("n"), py::arg("seed"), py::arg("emissions"), py::arg("Q"));
  mod.def("benchmark_transition", &benchmark_transition);
  mod.def("benchmark_emissions", &benchmark_emissions);
  mod.def("true_density", &true_density, py::arg("name"), py::arg("y"));
  mod.def("stationary_distribution", &stationary_distribution, py::arg("Q"));
  mod.def("benchmark_projection", [](int max_dim) { return GroundTruth::benchmark(max_dim).coeffs; },
          py::arg("max_dim"));

  mod.def("estimate_json", &estimate, py::arg("obs"), py::arg("K"), py::arg("method"), py::arg("basis"),
          py::arg("m"), py::arg("M_min"), py::arg("M_max"), py::arg("retries"), py::arg("seed"),
          py::arg("threads"));
  mod.def("select_json", &select_doc, py::arg("family"), py::arg("variant"), py::arg("calibration"),
          py::arg("rho"), py::arg("rho_points"));
  mod.def("cv_json", &cv, py::arg("obs"), py::arg("K"), py::arg("m"), py::arg("M_min"), py::arg("M_max"),
          py::arg("folds"), py::arg("gap"), py::arg("seed"));
  mod.def("hdet_json", &hdet, py::arg("params"), py::arg("step"));

  mod.def("rate_regression", [](const std::vector<std::pair<double, double>>& points, double n_min) {
    const auto fit = rate_regression(points, n_min);
    return py::dict(py::arg("slope") = fit.slope, py::arg("stderr") = fit.stderr_slope,
                    py::arg("intercept") = fit.intercept, py::arg("points") = fit.points.size());
  }, py::arg("points"), py::arg("n_min"));
  mod.def("simplex_project", [](const Eigen::VectorXd& v) { return simplex_project(v); }, py::arg("v"));
}
