#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include "nphmm/calibration.hpp"
#include "nphmm/campaign.hpp"
#include "nphmm/crossval.hpp"
#include "nphmm/diagnostics.hpp"
#include "nphmm/errors.hpp"
#include "nphmm/family.hpp"
#include "nphmm/io.hpp"
#include "nphmm/selection.hpp"
#include "nphmm/simulation.hpp"
#include "nphmm/spectral.hpp"

namespace nphmm::cli {

namespace {

struct Globals {
  std::uint64_t seed = 1;
  int threads = 1;
};

struct SimulateArgs {
  std::string config, out, states_out, campaign, results;
  std::int64_t n = 0;
  std::vector<std::string> emissions;
};

struct EstimateArgs {
  std::string obs, column, method = "spectral", basis = "trig", out, spectrum;
  std::string K = "3";
  int m = 20, M_min = 3, M_max = 300, retries = 0, reference = 0;
  double coeff_bound = 10.0;
};

struct SelectArgs {
  std::string family, variant = "standard", calibration = "eachjump", out, csv, curves;
  std::vector<double> rho;
  int rho_points = 64;
};

struct CalibrateArgs {
  std::string family, mode = "eachjump", variant = "standard", out, curves;
  int rho_points = 64;
};

struct CvArgs {
  std::string obs, column, basis = "trig", out, csv;
  int K = 3, m = 20, M_min = 3, M_max = 300, folds = 10, gap = 30, retries = 0;
};

struct RatesArgs {
  std::string results, method = "spectral", variant = "standard", calibration = "eachjump", out;
  double nmin = 0.0;
};

struct DiagnoseArgs {
  std::string params, family, out;
  int model = 0;
  double step = 1e-4;
};

std::optional<std::string> opt(const std::string& s) {
  return s.empty() ? std::nullopt : std::optional<std::string>(s);
}

void emit(std::ostream& out, const std::string& path, const Json& doc) {
  if (path.empty() || path == "-") {
    out << doc.dump(2) << "\n";
  } else {
    write_json(path, doc);
  }
}

struct SimulationSpec {
  std::int64_t n = 0;
  std::uint64_t seed = 1;
  std::vector<std::string> emissions = benchmark_emissions();
  Eigen::MatrixXd Q = benchmark_transition();
};

SimulationSpec simulation_spec(const SimulateArgs& a, const Globals& g, bool seed_given) {
  SimulationSpec s;
  s.seed = g.seed;
  if (!a.config.empty()) {
    const auto j = read_json(a.config);
    check_schema_version(j);
    try {
      s.n = j.value("n", std::int64_t{0});
      if (!seed_given) s.seed = j.value("seed", s.seed);
      if (j.contains("emissions")) s.emissions = j["emissions"].get<std::vector<std::string>>();
      if (j.contains("Q")) {
        const auto rows = j["Q"].get<std::vector<std::vector<double>>>();
        s.Q.resize(rows.size(), rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
          require(rows[i].size() == rows.size(), ErrorKind::Schema, "Q must be square");
          for (std::size_t k = 0; k < rows.size(); ++k) s.Q(i, k) = rows[i][k];
        }
      }
    } catch (const Json::exception& e) {
      fail(ErrorKind::Schema, std::string("bad simulation config: ") + e.what());
    }
  }
  if (a.n > 0) s.n = a.n;
  if (!a.emissions.empty()) s.emissions = a.emissions;
  require(s.n >= 1, ErrorKind::InvalidArgument, "simulate needs n >= 1 (--n or config)");
  return s;
}

int cmd_simulate(const SimulateArgs& a, const Globals& g, bool seed_given, std::ostream& out) {
  if (!a.campaign.empty()) {
    auto config = campaign_from_json(read_json(a.campaign));
    if (seed_given) config.seed = g.seed;
    config.threads = g.threads;
    const auto rows = run_campaign(config);
    if (a.results.empty()) {
      out << results_csv(rows);
    } else {
      write_text(a.results, results_csv(rows));
    }
    return 0;
  }
  const auto spec = simulation_spec(a, g, seed_given);
  const auto truth = GroundTruth::make(spec.emissions, spec.Q, Basis(BasisKind::Trig, 1), 1024);
  const auto path = sample_hmm_path(truth, spec.n, spec.seed);
  require(!a.out.empty(), ErrorKind::InvalidArgument, "simulate needs --out");
  write_observations(a.out, path.observations);
  if (!a.states_out.empty()) {
    std::string text;
    for (int s : path.states) text += std::to_string(s) + "\n";
    write_text(a.states_out, text);
  }
  return 0;
}

int cmd_estimate(const EstimateArgs& a, const Globals& g, std::ostream& out) {
  const auto obs = read_observations(a.obs, opt(a.column));
  const Basis basis(basis_kind_from_string(a.basis), a.M_max);
  const auto grid = model_range(a.M_min, a.M_max);
  const int m = std::min(a.m, a.M_max);
  const auto tensors = accumulate_moments(obs, basis, m, a.M_max, g.threads);
  const auto spectrum = singular_spectrum(tensors);
  int K = 0;
  if (a.K == "auto") {
    K = elbow_order(spectrum);
  } else {
    try {
      K = std::stoi(a.K);
    } catch (const std::exception&) {
      fail(ErrorKind::InvalidArgument, "--K must be an integer or 'auto'");
    }
  }
  FamilyOptions options;
  options.m = a.m;
  options.retries = a.retries;
  options.seed = g.seed;
  options.threads = g.threads;
  options.coeff_norm_bound = a.coeff_bound;
  if (a.reference > 0) options.reference_model = a.reference;
  const auto method = method_from_string(a.method);
  const auto family = method == Method::Spectral
                          ? estimate_spectral_family(tensors, basis, grid, K, options)
                          : estimate_ls_family(obs, basis, grid, K, options);
  emit(out, a.out, family_to_json(family));
  if (!a.spectrum.empty()) {
    std::string text = "index,singular_value\n";
    for (Eigen::Index i = 0; i < spectrum.size(); ++i) {
      text += std::to_string(i + 1) + "," + format_double(spectrum(i)) + "\n";
    }
    write_text(a.spectrum, text);
  }
  return 0;
}

int cmd_select(const SelectArgs& a, const Globals& g, std::ostream& out) {
  const auto family = family_from_json(read_json(a.family));
  require(family.aligned, ErrorKind::Precondition, "family file is not aligned");
  const auto variant = variant_from_string(a.variant);
  const auto kind = penalty_kind_for(family.method);
  const DistanceCache cache(family, g.threads);
  PenaltyDescriptor penalty{kind, {}, family.n};
  if (a.calibration == "none") {
    require(a.rho.size() == 1 || static_cast<int>(a.rho.size()) == family.K,
            ErrorKind::InvalidArgument, "--rho needs one value or one per state");
    penalty.rho = a.rho.size() == 1 ? std::vector<double>(family.K, a.rho[0]) : a.rho;
  } else {
    require(a.rho.empty(), ErrorKind::InvalidArgument, "--rho is only used with --calibration none");
    const auto grid = default_rho_grid(family, cache, kind, a.rho_points);
    const auto cal = calibrate(family, cache, kind, calibration_mode_from_string(a.calibration),
                               grid, variant);
    penalty = cal.penalty(kind, family.n);
    if (!a.curves.empty()) write_text(a.curves, jump_curves_csv(cal));
  }
  const auto result = select_models(family, cache, penalty, variant);
  emit(out, a.out, selection_to_json(result));
  if (!a.csv.empty()) write_text(a.csv, selection_csv(result));
  return 0;
}

int cmd_calibrate(const CalibrateArgs& a, const Globals& g, std::ostream& out) {
  const auto family = family_from_json(read_json(a.family));
  require(family.aligned, ErrorKind::Precondition, "family file is not aligned");
  const auto kind = penalty_kind_for(family.method);
  const DistanceCache cache(family, g.threads);
  const auto grid = default_rho_grid(family, cache, kind, a.rho_points);
  const auto cal = calibrate(family, cache, kind, calibration_mode_from_string(a.mode), grid,
                             variant_from_string(a.variant));
  emit(out, a.out, calibration_to_json(cal));
  if (!a.curves.empty()) write_text(a.curves, jump_curves_csv(cal));
  return 0;
}

int cmd_cv(const CvArgs& a, const Globals& g, std::ostream& out) {
  const auto obs = read_observations(a.obs, opt(a.column));
  const Basis basis(basis_kind_from_string(a.basis), a.M_max);
  CvOptions options;
  options.folds = a.folds;
  options.gap = a.gap;
  options.m = a.m;
  options.retries = a.retries;
  options.seed = g.seed;
  options.threads = g.threads;
  const auto result = cv_select(obs, basis, model_range(a.M_min, a.M_max), a.K, options);
  emit(out, a.out, cv_to_json(result));
  if (!a.csv.empty()) write_text(a.csv, cv_csv(result));
  return 0;
}

int cmd_rates(const RatesArgs& a, std::ostream& out) {
  const auto rows = read_results_csv(a.results);
  std::map<int, std::vector<std::pair<double, double>>> points;
  std::map<int, std::map<std::int64_t, std::vector<int>>> dims;
  std::vector<double> sizes;
  for (const auto& r : rows) {
    if (r.method != a.method || r.variant != a.variant || r.calibration != a.calibration) continue;
    points[r.state].emplace_back(static_cast<double>(r.n), r.l2_error);
    dims[r.state][r.n].push_back(r.M_selected);
    sizes.push_back(static_cast<double>(r.n));
  }
  require(!points.empty(), ErrorKind::InsufficientData, "no result rows match the filters");
  const double nmin = a.nmin > 0.0 ? a.nmin : default_n_min(sizes);
  Json states = Json::array();
  for (const auto& [state, pts] : points) {
    const auto fit = rate_regression(pts, nmin);
    auto& at_max = dims[state].rbegin()->second;
    std::sort(at_max.begin(), at_max.end());
    states.push_back({{"state", state},
                      {"slope", fit.slope},
                      {"stderr", fit.stderr_slope},
                      {"intercept", fit.intercept},
                      {"points", fit.points.size()},
                      {"median_M_at_largest_n", at_max[(at_max.size() - 1) / 2]}});
  }
  emit(out, a.out,
       {{"schema_version", kSchemaVersion},
        {"method", a.method},
        {"variant", a.variant},
        {"calibration", a.calibration},
        {"n_min", nmin},
        {"states", states}});
  return 0;
}

int cmd_diagnose(const DiagnoseArgs& a, const Globals& g, std::ostream& out) {
  HmmParams params;
  if (!a.params.empty()) {
    params = params_from_json(read_json(a.params));
  } else {
    require(!a.family.empty(), ErrorKind::InvalidArgument, "diagnose needs --params or --family");
    const auto family = family_from_json(read_json(a.family));
    const int M = a.model > 0 ? a.model : family.reference_model;
    params = family.model(M).params(family.basis.kind());
  }
  emit(out, a.out, hdet_to_json(hdet_diagnostic(params, a.step, g.threads)));
  return 0;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nonparametric HMM emission estimation with per-state model selection", "nphmm"};
  app.require_subcommand(1);
  // Global flags may follow the subcommand.
  app.fallthrough();
  Globals g;
  auto* seed_opt = app.add_option("--seed", g.seed, "Seed for all randomness")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Sample observations, or run a benchmark campaign");
  simulate->add_option("--config", sim.config, "Simulation config JSON (n, seed, emissions, Q)");
  simulate->add_option("--n", sim.n, "Number of observation triples");
  simulate->add_option("--emissions", sim.emissions, "Emission density names");
  simulate->add_option("--out", sim.out, "Observation file");
  simulate->add_option("--states-out", sim.states_out, "Hidden path file");
  simulate->add_option("--campaign", sim.campaign, "Campaign config JSON");
  simulate->add_option("--results", sim.results, "Campaign results CSV");

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "Estimate an aligned family over a model grid");
  estimate->add_option("--obs", est.obs, "Observation file")->required();
  estimate->add_option("--column", est.column, "CSV column (name or 0-based index)");
  estimate->add_option("--method", est.method, "spectral or ls")->capture_default_str();
  estimate->add_option("--basis", est.basis, "trig or dirac_trig")->capture_default_str();
  estimate->add_option("--K", est.K, "Number of states, or 'auto'")->capture_default_str();
  estimate->add_option("--m", est.m)->capture_default_str();
  estimate->add_option("--M-min", est.M_min)->capture_default_str();
  estimate->add_option("--M-max", est.M_max)->capture_default_str();
  estimate->add_option("--retries", est.retries, "0: ceil(2 log n + 2 log M)")->capture_default_str();
  estimate->add_option("--reference", est.reference, "Alignment reference model");
  estimate->add_option("--coeff-bound", est.coeff_bound, "LS coefficient norm bound")->capture_default_str();
  estimate->add_option("--out", est.out, "Family JSON (stdout if absent)");
  estimate->add_option("--spectrum", est.spectrum, "Singular values of N as CSV");

  SelectArgs sel;
  auto* select = app.add_subcommand("select", "Per-state model selection");
  select->add_option("--family", sel.family)->required();
  select->add_option("--variant", sel.variant, "standard, pos or max")->capture_default_str();
  select->add_option("--calibration", sel.calibration, "eachjump, jumpmax, jumpmean or none")
      ->capture_default_str();
  select->add_option("--rho", sel.rho, "Penalty constants when --calibration none");
  select->add_option("--rho-points", sel.rho_points)->capture_default_str();
  select->add_option("--out", sel.out, "Selection JSON (stdout if absent)");
  select->add_option("--csv", sel.csv, "(state, M, A, criterion) CSV");
  select->add_option("--curves", sel.curves, "Jump curves CSV");

  CalibrateArgs cal;
  auto* calibrate_cmd = app.add_subcommand("calibrate", "Dimension-jump penalty calibration");
  calibrate_cmd->add_option("--family", cal.family)->required();
  calibrate_cmd->add_option("--mode", cal.mode, "eachjump, jumpmax or jumpmean")->capture_default_str();
  calibrate_cmd->add_option("--variant", cal.variant)->capture_default_str();
  calibrate_cmd->add_option("--rho-points", cal.rho_points)->capture_default_str();
  calibrate_cmd->add_option("--out", cal.out);
  calibrate_cmd->add_option("--curves", cal.curves, "Jump curves CSV");

  CvArgs cva;
  auto* cv = app.add_subcommand("cv", "Blocked cross-validation baseline");
  cv->add_option("--obs", cva.obs)->required();
  cv->add_option("--column", cva.column);
  cv->add_option("--basis", cva.basis)->capture_default_str();
  cv->add_option("--K", cva.K)->capture_default_str();
  cv->add_option("--m", cva.m)->capture_default_str();
  cv->add_option("--M-min", cva.M_min)->capture_default_str();
  cv->add_option("--M-max", cva.M_max)->capture_default_str();
  cv->add_option("--folds", cva.folds)->capture_default_str();
  cv->add_option("--gap", cva.gap)->capture_default_str();
  cv->add_option("--retries", cva.retries)->capture_default_str();
  cv->add_option("--out", cva.out);
  cv->add_option("--csv", cva.csv, "(M, E_VC) CSV");

  RatesArgs rat;
  auto* rates = app.add_subcommand("rates", "Convergence-rate regression on campaign results");
  rates->add_option("--results", rat.results)->required();
  rates->add_option("--nmin", rat.nmin, "Smallest n used (default: 60th percentile)");
  rates->add_option("--method", rat.method)->capture_default_str();
  rates->add_option("--variant", rat.variant)->capture_default_str();
  rates->add_option("--calibration", rat.calibration)->capture_default_str();
  rates->add_option("--out", rat.out);

  DiagnoseArgs dia;
  auto* diagnose = app.add_subcommand("diagnose", "Nondegeneracy (Hessian) diagnostic");
  diagnose->add_option("--params", dia.params, "HMM parameter JSON");
  diagnose->add_option("--family", dia.family, "Family JSON");
  diagnose->add_option("--M", dia.model, "Model of the family (default: reference)");
  diagnose->add_option("--step", dia.step)->capture_default_str();
  diagnose->add_option("--out", dia.out);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << error_record("usage", e.what()).dump() << "\n";
    return 2;
  }

  try {
    const bool seed_given = seed_opt->count() > 0;
    if (simulate->parsed()) return cmd_simulate(sim, g, seed_given, out);
    if (estimate->parsed()) return cmd_estimate(est, g, out);
    if (select->parsed()) return cmd_select(sel, g, out);
    if (calibrate_cmd->parsed()) return cmd_calibrate(cal, g, out);
    if (cv->parsed()) return cmd_cv(cva, g, out);
    if (rates->parsed()) return cmd_rates(rat, out);
    if (diagnose->parsed()) return cmd_diagnose(dia, g, out);
  } catch (const Error& e) {
    err << error_record(to_string(e.kind()), e.what()).dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << error_record("internal", e.what()).dump() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace nphmm::cli
