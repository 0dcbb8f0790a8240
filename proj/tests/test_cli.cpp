#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "cli.hpp"
#include "helpers.hpp"
#include "nphmm/calibration.hpp"
#include "nphmm/crossval.hpp"
#include "nphmm/diagnostics.hpp"
#include "nphmm/io.hpp"
#include "nphmm/spectral.hpp"

using namespace nphmm;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status = 0;
  std::string out, err;
  Json error() const { return Json::parse(err); }
  Json json() const { return Json::parse(out); }
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Run r;
  r.status = cli::run_command(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// Shared workspace: one simulated data set and its family.
struct Workspace {
  fs::path dir;
  std::string sim, obs, states, family;
  Workspace() {
    dir = fs::temp_directory_path() / ("nphmm_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    sim = (dir / "sim.json").string();
    obs = (dir / "obs.txt").string();
    states = (dir / "states.txt").string();
    family = (dir / "family.json").string();
    write_json(sim, Json{{"schema_version", "1.0"}, {"n", 60000}, {"seed", 4}});
    REQUIRE(run({"simulate", "--config", sim, "--out", obs, "--states-out", states}).status == 0);
    REQUIRE(run({"estimate", "--method", "spectral", "--obs", obs, "--m", "8", "--M-min", "3",
                 "--M-max", "16", "--out", family, "--seed", "3"})
                .status == 0);
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string file(const std::string& name) const { return (dir / name).string(); }
};

Workspace& workspace() {
  static Workspace w;
  return w;
}

}  // namespace

TEST_CASE("cli usage errors") {
  auto r = run({});
  CHECK(r.status != 0);
  CHECK(r.error()["status"] == "error");
  r = run({"frobnicate"});
  CHECK(r.status == 2);
  CHECK(r.error()["error"] == "usage");
  r = run({"estimate", "--obs", "x", "--bogus", "1"});
  CHECK(r.status == 2);
  CHECK(r.error()["error"] == "usage");
  r = run({"estimate"});
  CHECK(r.status == 2);
  r = run({"estimate", "--obs", "/nonexistent/obs.txt"});
  CHECK(r.status == 1);
  CHECK(r.error()["error"] == "io-error");
  r = run({"--help"});
  CHECK(r.status == 0);
  CHECK(r.out.find("simulate") != std::string::npos);
  r = run({"simulate", "--n", "10"});
  CHECK(r.status == 1);
  CHECK(r.error()["error"] == "invalid-argument");
}

TEST_CASE("cli simulate matches the library") {
  auto& w = workspace();
  const auto truth = GroundTruth::benchmark(1);
  const auto path = sample_hmm_path(truth, 60000, 4);
  CHECK(read_observations(w.obs) == path.observations);
  std::string states;
  for (int s : path.states) states += std::to_string(s) + "\n";
  CHECK(slurp(w.states) == states);

  // --seed overrides the config seed; same seed gives the same file.
  const auto a = w.file("a.txt"), b = w.file("b.txt");
  CHECK(run({"--seed", "11", "simulate", "--config", w.sim, "--n", "500", "--out", a}).status == 0);
  CHECK(run({"simulate", "--n", "500", "--out", b, "--seed", "11"}).status == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(read_observations(a) == sample_hmm(truth, 500, 11));

  const auto bad = w.file("bad_sim.json");
  write_json(bad, Json{{"schema_version", "3.0"}, {"n", 10}});
  const auto r = run({"simulate", "--config", bad, "--out", a});
  CHECK(r.status == 1);
  CHECK(r.error()["error"] == "schema-error");
}

TEST_CASE("cli estimate matches the library") {
  auto& w = workspace();
  const auto doc = read_json(w.family);
  CHECK(doc["model_grid"] == model_range(3, 16));
  CHECK(doc["method"] == "spectral");

  const auto obs = read_observations(w.obs);
  const Basis basis(BasisKind::Trig, 16);
  const auto tensors = accumulate_moments(obs, basis, 8, 16, 1);
  FamilyOptions options;
  options.m = 8;
  options.seed = 3;
  const auto lib = estimate_spectral_family(tensors, basis, model_range(3, 16), 3, options);
  CHECK(family_to_json(lib) == doc);

  // Threads reorder the moment sums: decisions agree, values to rounding.
  const auto r = run({"--threads", "3", "estimate", "--obs", w.obs, "--m", "8", "--M-max", "16", "--seed", "3"});
  CHECK(r.status == 0);
  const auto threaded = family_from_json(r.json());
  REQUIRE(threaded.model_grid == lib.model_grid);
  CHECK(threaded.reference_model == lib.reference_model);
  double worst = 0.0;
  for (std::size_t i = 0; i < lib.models.size(); ++i) {
    CHECK(threaded.models[i].attempt_index == lib.models[i].attempt_index);
    worst = std::max(worst, (threaded.models[i].O - lib.models[i].O).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-8);

  // Auto order and the spectrum export.
  const auto spec = w.file("spectrum.csv");
  const auto ra = run({"estimate", "--obs", w.obs, "--m", "8", "--M-max", "10", "--K", "auto", "--spectrum", spec});
  CHECK(ra.status == 0);
  CHECK(ra.json()["K"] == elbow_order(singular_spectrum(accumulate_moments(obs, Basis(BasisKind::Trig, 10), 8, 10, 1))));
  CHECK(slurp(spec).rfind("index,singular_value\n1,", 0) == 0);
}

TEST_CASE("cli select and calibrate match the library") {
  auto& w = workspace();
  const auto family = family_from_json(read_json(w.family));
  const DistanceCache cache(family);
  const auto kind = penalty_kind_for(family.method);
  const auto grid = default_rho_grid(family, cache, kind, 64);

  for (const auto& [vname, variant] : std::map<std::string, Variant>{
           {"standard", Variant::Standard}, {"pos", Variant::Pos}, {"max", Variant::Max}}) {
    for (const auto& [cname, mode] : std::map<std::string, CalibrationMode>{
             {"eachjump", CalibrationMode::EachJump}, {"jumpmax", CalibrationMode::JumpMax}}) {
      const auto out = w.file("sel.json");
      const auto r = run({"select", "--family", w.family, "--variant", vname, "--calibration", cname, "--out", out});
      REQUIRE(r.status == 0);
      const auto cal = calibrate(family, cache, kind, mode, grid, variant);
      const auto lib = select_models(family, cache, cal.penalty(kind, family.n), variant);
      CHECK(read_json(out) == selection_to_json(lib));
      const auto cli_sel = selection_from_json(read_json(out));
      for (int k = 0; k < family.K; ++k) CHECK(cli_sel.states[k].M_hat == lib.states[k].M_hat);

      const auto rc = run({"calibrate", "--family", w.family, "--mode", cname, "--variant", vname});
      REQUIRE(rc.status == 0);
      CHECK(rc.json() == calibration_to_json(cal));
    }
  }

  const auto csv = w.file("sel.csv"), curves = w.file("curves.csv");
  auto r = run({"select", "--family", w.family, "--calibration", "none", "--rho", "0.5", "--csv", csv});
  REQUIRE(r.status == 0);
  const PenaltyDescriptor fixed{kind, std::vector<double>(family.K, 0.5), family.n};
  const auto lib = select_models(family, cache, fixed, Variant::Standard);
  CHECK(r.json() == selection_to_json(lib));
  CHECK(slurp(csv) == selection_csv(lib));

  r = run({"select", "--family", w.family, "--curves", curves});
  REQUIRE(r.status == 0);
  CHECK(slurp(curves) ==
        jump_curves_csv(calibrate(family, cache, kind, CalibrationMode::EachJump, grid, Variant::Standard)));

  r = run({"select", "--family", w.family, "--calibration", "none", "--rho", "1", "2"});
  CHECK(r.status == 1);
  r = run({"select", "--family", w.family, "--rho", "1"});
  CHECK(r.status == 1);

  auto doc = read_json(w.family);
  doc["schema_version"] = "2.0";
  const auto v2 = w.file("v2.json");
  write_json(v2, doc);
  r = run({"select", "--family", v2});
  CHECK(r.status == 1);
  CHECK(r.error()["error"] == "schema-error");
}

TEST_CASE("cli cv matches the library") {
  auto& w = workspace();
  const auto csv = w.file("cv.csv");
  const auto r = run({"cv", "--obs", w.obs, "--m", "6", "--M-min", "3", "--M-max", "9", "--folds", "4", "--csv", csv});
  REQUIRE(r.status == 0);
  CvOptions options;
  options.folds = 4;
  options.m = 6;
  options.seed = 1;
  const auto lib = cv_select(read_observations(w.obs), Basis(BasisKind::Trig, 9), model_range(3, 9), 3, options);
  CHECK(r.json() == cv_to_json(lib));
  CHECK(slurp(csv) == cv_csv(lib));
}

TEST_CASE("cli rates recomputes the regression") {
  auto& w = workspace();
  std::vector<ResultRow> rows;
  Rng rng(8);
  for (std::int64_t n : {50000, 100000, 200000, 400000, 800000})
    for (int rep = 0; rep < 4; ++rep)
      for (int state = 0; state < 3; ++state) {
        const double err = (1.0 + state) * std::pow(static_cast<double>(n), -0.3 - 0.05 * state) *
                           std::exp(0.1 * rng.normal());
        rows.push_back({"spectral", "standard", "eachjump", n, rep, state, 5 + rep, err, 0.5 * err, 5});
        rows.push_back({"spectral", "max", "eachjump", n, rep, state, 7, 2 * err, 0.5 * err, 5});
      }
  const auto path = w.file("results.csv");
  write_text(path, results_csv(rows));
  const auto r = run({"rates", "--results", path, "--nmin", "2e5"});
  REQUIRE(r.status == 0);
  const auto doc = r.json();
  CHECK(doc["n_min"] == 2e5);
  const auto parsed = read_results_csv(path);
  for (int state = 0; state < 3; ++state) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& row : parsed)
      if (row.state == state && row.variant == "standard") pts.emplace_back(static_cast<double>(row.n), row.l2_error);
    const auto fit = rate_regression(pts, 2e5);
    const auto& s = doc["states"][state];
    CHECK(s["state"] == state);
    CHECK(s["slope"].get<double>() == fit.slope);
    CHECK(s["stderr"].get<double>() == fit.stderr_slope);
    CHECK(s["points"] == 12);
    CHECK(s["median_M_at_largest_n"] == 6);
  }
  // Default n_min is the 60th percentile of the sizes.
  const auto rd = run({"rates", "--results", path, "--variant", "max"});
  REQUIRE(rd.status == 0);
  CHECK(rd.json()["n_min"] == 2e5);
  CHECK(rd.json()["states"][0]["median_M_at_largest_n"] == 7);

  const auto rn = run({"rates", "--results", path, "--method", "ls"});
  CHECK(rn.status == 1);
  CHECK(rn.error()["error"] == "insufficient-data");
}

TEST_CASE("cli diagnose matches the library") {
  auto& w = workspace();
  const auto p = testing::random_hmm(2, 4, 3);
  const auto params = w.file("params.json");
  write_json(params, params_to_json(p));
  auto r = run({"diagnose", "--params", params, "--step", "1e-3"});
  REQUIRE(r.status == 0);
  CHECK(r.json() == hdet_to_json(hdet_diagnostic(p, 1e-3)));

  r = run({"diagnose", "--family", w.family, "--M", "6"});
  REQUIRE(r.status == 0);
  const auto family = family_from_json(read_json(w.family));
  CHECK(r.json() == hdet_to_json(hdet_diagnostic(family.model(6).params(family.basis.kind()))));

  r = run({"diagnose"});
  CHECK(r.status == 1);
  r = run({"diagnose", "--params", params, "--step", "1"});
  CHECK(r.status == 1);
  CHECK(r.error()["error"] == "invalid-argument");
}
