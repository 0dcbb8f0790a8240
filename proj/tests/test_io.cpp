#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "helpers.hpp"
#include "nphmm/errors.hpp"
#include "nphmm/io.hpp"

using namespace nphmm;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("nphmm_io_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void put(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

template <typename F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("schema version") {
  CHECK_NOTHROW(check_schema_version(Json{{"schema_version", "1.0"}}));
  CHECK_NOTHROW(check_schema_version(Json{{"schema_version", "1.7"}}));
  CHECK_NOTHROW(check_schema_version(Json{{"schema_version", "1"}}));
  CHECK(kind_of([] { check_schema_version(Json{{"schema_version", "2.0"}}); }) == ErrorKind::Schema);
  CHECK(kind_of([] { check_schema_version(Json{{"schema_version", "10.1"}}); }) == ErrorKind::Schema);
  CHECK(kind_of([] { check_schema_version(Json{{"schema_version", 1}}); }) == ErrorKind::Schema);
  CHECK(kind_of([] { check_schema_version(Json{{"n", 3}}); }) == ErrorKind::Schema);
  CHECK(kind_of([] { check_schema_version(Json::array()); }) == ErrorKind::Schema);
}

TEST_CASE("observation files") {
  TempDir dir;
  put(dir.file("plain.txt"), "# header comment\n0.25\n\n  0.5  \n1\n0\n");
  CHECK(read_observations(dir.file("plain.txt")) == std::vector<double>{0.25, 0.5, 1.0, 0.0});

  put(dir.file("table.csv"), "t,y\n1,0.1\n2,0.2\n3,0.3\n");
  CHECK(read_observations(dir.file("table.csv"), "y") == std::vector<double>{0.1, 0.2, 0.3});
  CHECK(read_observations(dir.file("table.csv"), "1") == std::vector<double>{0.1, 0.2, 0.3});
  CHECK(kind_of([&] { read_observations(dir.file("table.csv"), "z"); }) == ErrorKind::Io);
  CHECK(kind_of([&] { read_observations(dir.file("table.csv"), "0"); }) == ErrorKind::Domain);

  put(dir.file("out.txt"), "0.5\n1.5\n");
  CHECK(kind_of([&] { read_observations(dir.file("out.txt")); }) == ErrorKind::Domain);
  put(dir.file("nan.txt"), "0.5\nnan\n");
  CHECK(kind_of([&] { read_observations(dir.file("nan.txt")); }) == ErrorKind::Domain);
  put(dir.file("junk.txt"), "0.5\nabc\n");
  CHECK_THROWS_AS(read_observations(dir.file("junk.txt")), Error);
  CHECK(kind_of([&] { read_observations(dir.file("missing.txt")); }) == ErrorKind::Io);

  // Shortest round-trip text keeps every bit.
  Rng rng(5);
  std::vector<double> y(1000);
  for (auto& v : y) v = rng.uniform();
  y.push_back(0.0);
  y.push_back(1.0);
  write_observations(dir.file("rt.txt"), y);
  CHECK(read_observations(dir.file("rt.txt")) == y);
}

TEST_CASE("format_double") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, -2.5}) CHECK(std::stod(format_double(v)) == v);
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_double(std::nan("")) == "nan");
}

TEST_CASE("family JSON") {
  auto family = testing::nested_family({3, 4, 6, 9}, 2, 12);
  family.n = 12345;
  family.reference_model = 6;
  family.models[1].separation_score = 0.75;
  family.models[1].attempt_index = 4;
  family.skipped.emplace_back(5, "ill-conditioned");
  const auto j = family_to_json(family);
  CHECK(j["schema_version"] == kSchemaVersion);
  for (const char* key : {"basis", "n", "K", "method", "reference_model", "models"}) CHECK(j.contains(key));
  CHECK(j["models"][0].contains("O_rowmajor"));
  CHECK(j["models"][0]["O_rowmajor"][1] == family.models[0].O(0, 1));

  // Through text, exactly.
  const auto back = family_from_json(Json::parse(j.dump()));
  CHECK(back.model_grid == family.model_grid);
  CHECK(back.n == 12345);
  CHECK(back.K == 2);
  CHECK(back.aligned);
  CHECK(back.reference_model == 6);
  CHECK(back.skipped == family.skipped);
  for (std::size_t i = 0; i < family.models.size(); ++i) {
    CHECK(back.models[i].O == family.models[i].O);
    CHECK(back.models[i].Q == family.models[i].Q);
    CHECK(back.models[i].pi == family.models[i].pi);
  }
  CHECK(back.models[1].separation_score == 0.75);
  CHECK(back.models[1].attempt_index == 4);
  CHECK(std::isnan(back.models[0].separation_score));
  CHECK(family_to_json(back) == j);

  // K = 1 stores an infinite separation as null and reads it back as +inf.
  auto single = testing::nested_family({3, 4}, 1, 2);
  single.models[0].separation_score = std::numeric_limits<double>::infinity();
  const auto js = family_to_json(single);
  CHECK(js["models"][0]["diagnostics"]["separation_score"].is_null());
  CHECK(std::isinf(family_from_json(js).models[0].separation_score));

  auto bad = j;
  bad["schema_version"] = "2.0";
  CHECK(kind_of([&] { family_from_json(bad); }) == ErrorKind::Schema);
  bad = j;
  bad["models"][0]["O_rowmajor"].erase(0);
  CHECK(kind_of([&] { family_from_json(bad); }) == ErrorKind::Schema);
  bad = j;
  bad["model_grid"] = {3, 4, 6, 10};
  CHECK(kind_of([&] { family_from_json(bad); }) == ErrorKind::Schema);
  bad = j;
  bad.erase("n");
  CHECK(kind_of([&] { family_from_json(bad); }) == ErrorKind::Schema);
  bad = j;
  std::swap(bad["models"][0], bad["models"][1]);
  bad.erase("model_grid");
  CHECK(kind_of([&] { family_from_json(bad); }) == ErrorKind::Schema);
}

TEST_CASE("selection, params and campaign JSON") {
  const auto family = testing::nested_family({3, 5, 8, 12, 20}, 3, 4);
  const PenaltyDescriptor penalty{PenaltyKind::Spectral, {0.1, 0.2, 0.3}, 100000};
  const auto sel = select_models(family, penalty, Variant::Pos);
  const auto j = selection_to_json(sel);
  const auto back = selection_from_json(Json::parse(j.dump()));
  CHECK(back.variant == Variant::Pos);
  CHECK(back.penalty.rho == penalty.rho);
  CHECK(back.penalty.n == 100000);
  CHECK(back.model_grid == sel.model_grid);
  for (int k = 0; k < 3; ++k) {
    CHECK(back.states[k].M_hat == sel.states[k].M_hat);
    CHECK(back.states[k].index == sel.states[k].index);
    CHECK(back.states[k].A == sel.states[k].A);
    CHECK(back.states[k].criterion == sel.states[k].criterion);
  }
  auto bad = j;
  bad["states"][0]["M_hat"] = 4;
  CHECK(kind_of([&] { selection_from_json(bad); }) == ErrorKind::Schema);

  const std::string csv = selection_csv(sel);
  CHECK(csv.rfind("state,M,A,criterion\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3 * 5);

  const auto p = testing::random_hmm(3, 4, 8);
  const auto pj = params_from_json(Json::parse(params_to_json(p).dump()));
  CHECK(pj.pi == p.pi);
  CHECK(pj.Q == p.Q);
  CHECK(pj.O == p.O);
  auto pbad = params_to_json(p);
  pbad["Q"].erase(0);
  CHECK(kind_of([&] { params_from_json(pbad); }) == ErrorKind::Schema);

  CampaignConfig c;
  c.n_grid = {1000, 2000};
  c.reps = 3;
  c.variants = {Variant::Standard, Variant::Max};
  c.calibrations = {CalibrationMode::JumpMean};
  c.cross_validation = true;
  c.seed = 99;
  const auto cj = campaign_to_json(c);
  CHECK(cj["r_rule"] == "ceil(2 log n + 2 log M)");
  const auto cb = campaign_from_json(Json::parse(cj.dump()));
  CHECK(cb.n_grid == c.n_grid);
  CHECK(cb.reps == 3);
  CHECK(cb.variants == c.variants);
  CHECK(cb.calibrations == c.calibrations);
  CHECK(cb.cross_validation);
  CHECK(cb.seed == 99);
  CHECK(cb.Q == c.Q);
  CHECK(campaign_to_json(cb) == cj);
  auto cbad = cj;
  cbad["variants"] = {"median"};
  CHECK_THROWS_AS(campaign_from_json(cbad), Error);
}

TEST_CASE("results CSV") {
  std::vector<ResultRow> rows;
  for (int i = 0; i < 6; ++i) {
    rows.push_back({"spectral", "standard", "eachjump", 1000 * (i + 1), i % 2, i % 3, 5 + i,
                    1.0 / (i + 3), 0.1 / (i + 1), 4 + i});
  }
  const auto text = results_csv(rows);
  CHECK(text.rfind("# schema_version=1.0\nmethod,variant,calibration,n,rep,state,M_selected,l2_error,oracle_error,oracle_M\n", 0) == 0);
  const auto back = parse_results_csv(text);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].method == rows[i].method);
    CHECK(back[i].n == rows[i].n);
    CHECK(back[i].state == rows[i].state);
    CHECK(back[i].M_selected == rows[i].M_selected);
    CHECK(back[i].l2_error == rows[i].l2_error);
    CHECK(back[i].oracle_error == rows[i].oracle_error);
    CHECK(back[i].oracle_M == rows[i].oracle_M);
  }
  // Column order is read from the header.
  const auto shuffled = parse_results_csv(
      "n,method,variant,calibration,rep,state,M_selected,l2_error,oracle_error,oracle_M\n"
      "500,ls,max,jumpmax,0,2,7,0.5,0.25,6\n");
  CHECK(shuffled[0].n == 500);
  CHECK(shuffled[0].method == "ls");
  CHECK(shuffled[0].oracle_M == 6);
  // Files without a version line are accepted; a newer major version is not.
  CHECK(parse_results_csv(text.substr(text.find('\n') + 1)).size() == rows.size());
  CHECK(kind_of([&] { parse_results_csv("# schema_version=2.0\n" + text.substr(text.find('\n') + 1)); }) ==
        ErrorKind::Schema);
  CHECK(kind_of([] { parse_results_csv("method,n\nspectral,5\n"); }) == ErrorKind::Schema);
  CHECK(kind_of([] { parse_results_csv(""); }) == ErrorKind::Schema);
}

TEST_CASE("error record and JSON files") {
  const auto e = error_record("io", "cannot open 'x'");
  CHECK(e["status"] == "error");
  CHECK(e["error"] == "io");
  CHECK(e["schema_version"] == kSchemaVersion);
  TempDir dir;
  put(dir.file("broken.json"), "{\"a\": ");
  CHECK(kind_of([&] { read_json(dir.file("broken.json")); }) == ErrorKind::Schema);
  CHECK(kind_of([&] { read_json(dir.file("absent.json")); }) == ErrorKind::Io);
  write_json(dir.file("ok.json"), Json{{"x", 1.5}});
  CHECK(read_json(dir.file("ok.json"))["x"] == 1.5);
  CHECK(kind_of([&] { write_text(dir.file("no/such/dir/f.txt"), "x"); }) == ErrorKind::Io);
}
