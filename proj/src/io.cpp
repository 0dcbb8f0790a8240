#include "nphmm/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "nphmm/errors.hpp"

namespace nphmm {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  std::string out = s.substr(b, e - b + 1);
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& text, const std::string& where) {
  double v = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    fail(ErrorKind::Io, "cannot parse number '" + text + "' (" + where + ")");
  }
  return v;
}

long long parse_int(const std::string& text, const std::string& where) {
  const double v = parse_double(text, where);
  if (v != std::floor(v) || std::abs(v) > 9e15) {
    fail(ErrorKind::Io, "expected an integer, got '" + text + "' (" + where + ")");
  }
  return static_cast<long long>(v);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json vector_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number_or_null(v(i)));
  return a;
}

Json matrix_rows(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(m.row(i).transpose()));
  return rows;
}

Eigen::VectorXd vector_from(const Json& j, const char* what) {
  if (!j.is_array()) fail(ErrorKind::Schema, std::string(what) + " must be an array");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) fail(ErrorKind::Schema, std::string(what) + " must hold numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd matrix_from_rows(const Json& j, const char* what) {
  if (!j.is_array() || j.empty()) fail(ErrorKind::Schema, std::string(what) + " must be a nested array");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto first = vector_from(j[0], what);
  Eigen::MatrixXd m(rows, first.size());
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto r = vector_from(j[i], what);
    if (r.size() != first.size()) fail(ErrorKind::Schema, std::string(what) + " rows differ in length");
    m.row(i) = r.transpose();
  }
  return m;
}

template <typename F>
auto schema_guard(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Json::exception& e) {
    fail(ErrorKind::Schema, std::string("malformed document: ") + e.what());
  }
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

void check_schema_version(const Json& doc) {
  if (!doc.is_object() || !doc.contains("schema_version") || !doc["schema_version"].is_string()) {
    fail(ErrorKind::Schema, "document has no schema_version");
  }
  const auto v = doc["schema_version"].get<std::string>();
  if (v.substr(0, v.find('.')) != "1") {
    fail(ErrorKind::Schema, "unsupported schema_version '" + v + "'");
  }
}

std::vector<double> read_observations(const std::string& path, const std::optional<std::string>& column) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  std::vector<double> out;
  std::string line;
  std::size_t lineno = 0;
  std::optional<std::size_t> index;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::string where = path + ":" + std::to_string(lineno);
    double v = 0.0;
    if (column) {
      const auto cells = split_csv(t);
      if (!index) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
          if (cells[i] == *column) index = i;
        }
        if (!index) {
          const bool numeric = !column->empty() &&
                               column->find_first_not_of("0123456789") == std::string::npos;
          if (!numeric) fail(ErrorKind::Io, "column '" + *column + "' not found in " + path);
          index = std::stoul(*column);
        }
        continue;  // header row
      }
      if (*index >= cells.size()) fail(ErrorKind::Io, "missing column at " + where);
      v = parse_double(cells[*index], where);
    } else {
      v = parse_double(t, where);
    }
    if (!(v >= 0.0 && v <= 1.0)) fail(ErrorKind::Domain, "observation outside [0, 1] at " + where);
    out.push_back(v);
  }
  return out;
}

void write_observations(const std::string& path, const std::vector<double>& observations) {
  std::string text;
  text.reserve(observations.size() * 20);
  for (double v : observations) {
    text += format_double(v);
    text += '\n';
  }
  write_text(path, text);
}

Json basis_to_json(const Basis& basis) {
  return {{"kind", to_string(basis.kind())}, {"max_dim", basis.max_dim()}};
}

Basis basis_from_json(const Json& j) {
  return schema_guard([&] {
    return Basis(basis_kind_from_string(j.at("kind").get<std::string>()), j.at("max_dim").get<int>());
  });
}

Json params_to_json(const HmmParams& params) {
  return {{"schema_version", kSchemaVersion},
          {"kind", to_string(params.kind)},
          {"pi", vector_json(params.pi)},
          {"Q", matrix_rows(params.Q)},
          {"O", matrix_rows(params.O)}};
}

HmmParams params_from_json(const Json& j) {
  check_schema_version(j);
  return schema_guard([&] {
    HmmParams p;
    p.kind = basis_kind_from_string(j.value("kind", std::string("trig")));
    p.pi = vector_from(j.at("pi"), "pi");
    p.Q = matrix_from_rows(j.at("Q"), "Q");
    p.O = matrix_from_rows(j.at("O"), "O");
    try {
      p.check_shapes();
    } catch (const Error& e) {
      fail(ErrorKind::Schema, e.what());
    }
    return p;
  });
}

Json family_to_json(const EstimatorFamily& family) {
  Json models = Json::array();
  for (const auto& e : family.models) {
    Json o = Json::array();
    for (Eigen::Index a = 0; a < e.O.rows(); ++a)
      for (Eigen::Index k = 0; k < e.O.cols(); ++k) o.push_back(e.O(a, k));
    models.push_back({{"M", e.M},
                      {"pi", vector_json(e.pi)},
                      {"Q", matrix_rows(e.Q)},
                      {"O_rowmajor", o},
                      {"diagnostics",
                       {{"separation_score", number_or_null(e.separation_score)},
                        {"attempt_index", e.attempt_index},
                        {"criterion", number_or_null(e.criterion)}}}});
  }
  Json skipped = Json::array();
  for (const auto& [M, reason] : family.skipped) skipped.push_back({{"M", M}, {"reason", reason}});
  return {{"schema_version", kSchemaVersion},
          {"basis", basis_to_json(family.basis)},
          {"n", family.n},
          {"K", family.K},
          {"method", to_string(family.method)},
          {"aligned", family.aligned},
          {"reference_model", family.reference_model},
          {"model_grid", family.model_grid},
          {"models", models},
          {"skipped", skipped}};
}

EstimatorFamily family_from_json(const Json& j) {
  check_schema_version(j);
  return schema_guard([&] {
    EstimatorFamily f;
    f.basis = basis_from_json(j.at("basis"));
    f.n = j.at("n").get<std::int64_t>();
    f.K = j.at("K").get<int>();
    f.method = method_from_string(j.at("method").get<std::string>());
    f.aligned = j.value("aligned", false);
    f.reference_model = j.at("reference_model").get<int>();
    for (const auto& m : j.at("models")) {
      ModelEstimate e;
      e.M = m.at("M").get<int>();
      e.pi = vector_from(m.at("pi"), "pi");
      e.Q = matrix_from_rows(m.at("Q"), "Q");
      const auto flat = vector_from(m.at("O_rowmajor"), "O_rowmajor");
      if (flat.size() != static_cast<Eigen::Index>(e.M) * f.K) {
        fail(ErrorKind::Schema, "O_rowmajor must hold M*K values");
      }
      e.O.resize(e.M, f.K);
      for (int a = 0; a < e.M; ++a)
        for (int k = 0; k < f.K; ++k) e.O(a, k) = flat(static_cast<Eigen::Index>(a) * f.K + k);
      if (m.contains("diagnostics")) {
        const auto& d = m["diagnostics"];
        const auto& s = d.value("separation_score", Json(nullptr));
        e.separation_score = s.is_number() ? s.get<double>()
                             : f.K == 1    ? std::numeric_limits<double>::infinity()
                                           : std::numeric_limits<double>::quiet_NaN();
        e.attempt_index = d.value("attempt_index", -1);
        const auto& c = d.value("criterion", Json(nullptr));
        e.criterion = c.is_number() ? c.get<double>() : std::numeric_limits<double>::quiet_NaN();
      }
      f.model_grid.push_back(e.M);
      f.models.push_back(std::move(e));
    }
    if (j.contains("model_grid") && j["model_grid"].get<std::vector<int>>() != f.model_grid) {
      fail(ErrorKind::Schema, "model_grid does not match the models");
    }
    if (j.contains("skipped")) {
      for (const auto& s : j["skipped"]) {
        f.skipped.emplace_back(s.at("M").get<int>(), s.value("reason", std::string()));
      }
    }
    try {
      f.validate();
    } catch (const Error& e) {
      fail(ErrorKind::Schema, e.what());
    }
    return f;
  });
}

Json selection_to_json(const SelectionResult& result) {
  Json states = Json::array();
  for (std::size_t k = 0; k < result.states.size(); ++k) {
    const auto& s = result.states[k];
    states.push_back({{"state", k},
                      {"M_hat", s.M_hat},
                      {"A_curve", vector_json(s.A)},
                      {"criterion_curve", vector_json(s.criterion)}});
  }
  return {{"schema_version", kSchemaVersion},
          {"variant", to_string(result.variant)},
          {"penalty",
           {{"kind", to_string(result.penalty.kind)},
            {"rho", result.penalty.rho},
            {"n", result.penalty.n}}},
          {"model_grid", result.model_grid},
          {"states", states}};
}

SelectionResult selection_from_json(const Json& j) {
  check_schema_version(j);
  return schema_guard([&] {
    SelectionResult r;
    r.variant = variant_from_string(j.at("variant").get<std::string>());
    const auto& p = j.at("penalty");
    r.penalty.kind = penalty_kind_from_string(p.at("kind").get<std::string>());
    r.penalty.rho = p.at("rho").get<std::vector<double>>();
    r.penalty.n = p.at("n").get<std::int64_t>();
    r.model_grid = j.at("model_grid").get<std::vector<int>>();
    for (const auto& s : j.at("states")) {
      StateSelection st;
      st.M_hat = s.at("M_hat").get<int>();
      st.A = vector_from(s.at("A_curve"), "A_curve");
      st.criterion = vector_from(s.at("criterion_curve"), "criterion_curve");
      const auto it = std::find(r.model_grid.begin(), r.model_grid.end(), st.M_hat);
      if (it == r.model_grid.end()) fail(ErrorKind::Schema, "M_hat outside the model grid");
      st.index = static_cast<int>(it - r.model_grid.begin());
      r.states.push_back(std::move(st));
    }
    return r;
  });
}

Json calibration_to_json(const Calibration& calibration) {
  Json curves = Json::array();
  for (const auto& c : calibration.curves) {
    curves.push_back({{"state", c.state},
                      {"rho_jump", c.rho_jump},
                      {"jump_size", c.jump_size},
                      {"has_jump", c.has_jump}});
  }
  return {{"schema_version", kSchemaVersion},
          {"mode", to_string(calibration.mode)},
          {"rho", calibration.rho},
          {"curves", curves},
          {"warnings", calibration.warnings}};
}

Json cv_to_json(const CvResult& result) {
  return {{"schema_version", kSchemaVersion},
          {"M_hat", result.M_hat},
          {"folds", result.plan.folds},
          {"gap", result.plan.gap},
          {"model_grid", result.model_grid},
          {"E_curve", vector_json(result.E_curve)}};
}

Json hdet_to_json(const HdetReport& report) {
  return {{"schema_version", kSchemaVersion},
          {"dim", report.dim},
          {"det", report.determinant},
          {"min_eig", report.min_eigenvalue},
          {"max_eig", report.max_eigenvalue}};
}

Json campaign_to_json(const CampaignConfig& c) {
  std::vector<std::string> variants, calibrations;
  for (auto v : c.variants) variants.push_back(to_string(v));
  for (auto m : c.calibrations) calibrations.push_back(to_string(m));
  return {{"schema_version", kSchemaVersion},
          {"n_grid", c.n_grid},
          {"reps", c.reps},
          {"m", c.m},
          {"M_min", c.M_min},
          {"M_max", c.M_max},
          {"r_rule", "ceil(2 log n + 2 log M)"},
          {"emissions", c.emissions},
          {"Q", matrix_rows(c.Q)},
          {"variants", variants},
          {"calibrations", calibrations},
          {"cross_validation", c.cross_validation},
          {"folds", c.folds},
          {"gap", c.gap},
          {"rho_points", c.rho_points},
          {"seed", c.seed},
          {"quadrature_points", c.quadrature_points}};
}

CampaignConfig campaign_from_json(const Json& j) {
  check_schema_version(j);
  return schema_guard([&] {
    CampaignConfig c;
    if (j.contains("n_grid")) c.n_grid = j["n_grid"].get<std::vector<std::int64_t>>();
    c.reps = j.value("reps", c.reps);
    c.m = j.value("m", c.m);
    c.M_min = j.value("M_min", c.M_min);
    c.M_max = j.value("M_max", c.M_max);
    if (j.contains("emissions")) c.emissions = j["emissions"].get<std::vector<std::string>>();
    if (j.contains("Q")) c.Q = matrix_from_rows(j["Q"], "Q");
    if (j.contains("variants")) {
      c.variants.clear();
      for (const auto& v : j["variants"]) c.variants.push_back(variant_from_string(v.get<std::string>()));
    }
    if (j.contains("calibrations")) {
      c.calibrations.clear();
      for (const auto& v : j["calibrations"]) {
        c.calibrations.push_back(calibration_mode_from_string(v.get<std::string>()));
      }
    }
    c.cross_validation = j.value("cross_validation", c.cross_validation);
    c.folds = j.value("folds", c.folds);
    c.gap = j.value("gap", c.gap);
    c.rho_points = j.value("rho_points", c.rho_points);
    c.seed = j.value("seed", c.seed);
    c.quadrature_points = j.value("quadrature_points", c.quadrature_points);
    c.validate();
    return c;
  });
}

Json error_record(const std::string& kind, const std::string& message) {
  return {{"schema_version", kSchemaVersion}, {"status", "error"}, {"error", kind}, {"message", message}};
}

Json read_json(const std::string& path) {
  const auto text = read_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    fail(ErrorKind::Schema, "'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_json(const std::string& path, const Json& doc) { write_text(path, doc.dump(2) + "\n"); }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path + "'");
  out << text;
  if (!out) fail(ErrorKind::Io, "write to '" + path + "' failed");
}

std::string selection_csv(const SelectionResult& result) {
  std::string s = "state,M,A,criterion\n";
  for (std::size_t k = 0; k < result.states.size(); ++k) {
    const auto& st = result.states[k];
    for (std::size_t i = 0; i < result.model_grid.size(); ++i) {
      s += std::to_string(k) + "," + std::to_string(result.model_grid[i]) + "," +
           format_double(st.A(i)) + "," + format_double(st.criterion(i)) + "\n";
    }
  }
  return s;
}

std::string jump_curves_csv(const Calibration& calibration) {
  std::string s = "state,rho,M_hat\n";
  for (const auto& c : calibration.curves) {
    for (std::size_t i = 0; i < c.rho_grid.size(); ++i) {
      s += std::to_string(c.state) + "," + format_double(c.rho_grid[i]) + "," +
           std::to_string(c.M_hat[i]) + "\n";
    }
  }
  return s;
}

std::string cv_csv(const CvResult& result) {
  std::string s = "M,E_VC,selected\n";
  for (std::size_t i = 0; i < result.model_grid.size(); ++i) {
    s += std::to_string(result.model_grid[i]) + "," + format_double(result.E_curve(i)) + "," +
         (result.model_grid[i] == result.M_hat ? "1" : "0") + "\n";
  }
  return s;
}

namespace {
const char* const kResultColumns[] = {"method", "variant", "calibration", "n", "rep",
                                      "state",  "M_selected", "l2_error", "oracle_error",
                                      "oracle_M"};
}

std::string results_csv(const std::vector<ResultRow>& rows) {
  std::string s = std::string("# schema_version=") + kSchemaVersion + "\n";
  for (std::size_t i = 0; i < std::size(kResultColumns); ++i) {
    s += (i ? "," : "") + std::string(kResultColumns[i]);
  }
  s += "\n";
  for (const auto& r : rows) {
    s += r.method + "," + r.variant + "," + r.calibration + "," + std::to_string(r.n) + "," +
         std::to_string(r.rep) + "," + std::to_string(r.state) + "," + std::to_string(r.M_selected) +
         "," + format_double(r.l2_error) + "," + format_double(r.oracle_error) + "," +
         std::to_string(r.oracle_M) + "\n";
  }
  return s;
}

std::vector<ResultRow> parse_results_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<int> pos(std::size(kResultColumns), -1);
  bool header = false;
  std::vector<ResultRow> rows;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      // Optional version comment before the header.
      const auto eq = t.find("schema_version=");
      if (eq != std::string::npos) {
        check_schema_version(Json{{"schema_version", trim(t.substr(eq + 15))}});
      }
      continue;
    }
    const auto cells = split_csv(line);
    if (!header) {
      for (std::size_t c = 0; c < std::size(kResultColumns); ++c) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
          if (cells[i] == kResultColumns[c]) pos[c] = static_cast<int>(i);
        }
        if (pos[c] < 0) fail(ErrorKind::Schema, std::string("results file lacks column ") + kResultColumns[c]);
      }
      header = true;
      continue;
    }
    const std::string where = "results line " + std::to_string(lineno);
    auto cell = [&](int c) -> const std::string& {
      if (pos[c] >= static_cast<int>(cells.size())) fail(ErrorKind::Io, "short row at " + where);
      return cells[pos[c]];
    };
    ResultRow r;
    r.method = cell(0);
    r.variant = cell(1);
    r.calibration = cell(2);
    r.n = parse_int(cell(3), where);
    r.rep = static_cast<int>(parse_int(cell(4), where));
    r.state = static_cast<int>(parse_int(cell(5), where));
    r.M_selected = static_cast<int>(parse_int(cell(6), where));
    r.l2_error = parse_double(cell(7), where);
    r.oracle_error = parse_double(cell(8), where);
    r.oracle_M = static_cast<int>(parse_int(cell(9), where));
    rows.push_back(std::move(r));
  }
  if (!header) fail(ErrorKind::Schema, "empty results file");
  return rows;
}

std::vector<ResultRow> read_results_csv(const std::string& path) {
  return parse_results_csv(read_file(path));
}

}  // namespace nphmm
