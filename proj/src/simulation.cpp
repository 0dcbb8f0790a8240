#include "nphmm/simulation.hpp"

#include <algorithm>
#include <boost/math/special_functions/beta.hpp>
#include <cctype>
#include <cmath>
#include <complex>
#include <limits>
#include <regex>

#include "nphmm/errors.hpp"

namespace nphmm {

namespace {

struct ParsedName {
  enum Kind { Uniform, Beta, SymBeta } kind = Uniform;
  double a = 0.0;
  double b = 0.0;
};

ParsedName parse_name(const std::string& raw) {
  std::string name;
  for (char c : raw) {
    if (!std::isspace(static_cast<unsigned char>(c))) {
      name.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (name == "uniform") return {ParsedName::Uniform, 0.0, 0.0};
  if (name == "beta") return {ParsedName::Beta, 3.0, 7.0};
  if (name == "symbeta") return {ParsedName::SymBeta, 3.0, 1.6};
  static const std::regex pattern(R"(^(beta|symbeta)\(([^,()]+),([^,()]+)\)$)");
  std::smatch match;
  if (std::regex_match(name, match, pattern)) {
    double a = 0.0, b = 0.0;
    try {
      a = std::stod(match[2].str());
      b = std::stod(match[3].str());
    } catch (const std::exception&) {
      fail(ErrorKind::InvalidArgument, "bad parameters in density name '" + raw + "'");
    }
    require(a > 0.0 && b > 0.0 && std::isfinite(a) && std::isfinite(b), ErrorKind::InvalidArgument,
            "beta parameters must be positive");
    return {match[1].str() == "beta" ? ParsedName::Beta : ParsedName::SymBeta, a, b};
  }
  fail(ErrorKind::InvalidArgument, "unknown density '" + raw + "'");
}

double beta_pdf(double a, double b, double x) {
  if (x < 0.0 || x > 1.0) return 0.0;
  return boost::math::ibeta_derivative(a, b, x);
}

double evaluate(const ParsedName& p, double y) {
  switch (p.kind) {
    case ParsedName::Uniform: return 1.0;
    case ParsedName::Beta: return beta_pdf(p.a, p.b, y);
    case ParsedName::SymBeta: {
      double f = 0.0;
      if (y <= 2.0 / 3.0) f += 0.5 * 1.5 * beta_pdf(p.a, p.b, 1.5 * y);
      if (y >= 2.0 / 3.0) f += 0.5 * 3.0 * beta_pdf(p.a, p.b, 3.0 * (1.0 - y));
      return f;
    }
  }
  return 0.0;
}

class UniformSampler final : public EmissionSampler {
 public:
  double draw(Rng& rng) const override { return rng.uniform(); }
};

class BetaSampler final : public EmissionSampler {
 public:
  BetaSampler(double a, double b) : quantile_(a, b) {}
  double draw(Rng& rng) const override { return quantile_(rng.uniform()); }

 private:
  BetaQuantile quantile_;
};

class SymBetaSampler final : public EmissionSampler {
 public:
  SymBetaSampler(double a, double b) : quantile_(a, b) {}
  double draw(Rng& rng) const override {
    const bool left = rng.uniform() < 0.5;
    const double x = quantile_(rng.uniform());
    return left ? (2.0 / 3.0) * x : 1.0 - x / 3.0;
  }

 private:
  BetaQuantile quantile_;
};

}  // namespace

Density named_density(const std::string& name) {
  const auto parsed = parse_name(name);
  Density d;
  d.name = name;
  d.pdf = [parsed](double y) { return evaluate(parsed, y); };
  if (parsed.kind == ParsedName::SymBeta) d.breakpoints = {2.0 / 3.0};
  return d;
}

double true_density(const std::string& name, double y) {
  require(y >= 0.0 && y <= 1.0, ErrorKind::Domain, "density evaluated outside [0, 1]");
  return evaluate(parse_name(name), y);
}

std::shared_ptr<const EmissionSampler> make_sampler(const std::string& name) {
  const auto p = parse_name(name);
  switch (p.kind) {
    case ParsedName::Uniform: return std::make_shared<UniformSampler>();
    case ParsedName::Beta: return std::make_shared<BetaSampler>(p.a, p.b);
    case ParsedName::SymBeta: return std::make_shared<SymBetaSampler>(p.a, p.b);
  }
  fail(ErrorKind::InvalidArgument, "unknown density '" + name + "'");
}

BetaQuantile::BetaQuantile(double a, double b, int log2_points) {
  require(a > 0.0 && b > 0.0, ErrorKind::InvalidArgument, "beta parameters must be positive");
  require(log2_points >= 4 && log2_points <= 24, ErrorKind::InvalidArgument, "table size");
  const std::size_t N = std::size_t{1} << log2_points;
  x_.resize(N + 1);
  x_[0] = 0.0;
  x_[N] = 1.0;
  for (std::size_t i = 1; i < N; ++i) {
    x_[i] = boost::math::ibeta_inv(a, b, static_cast<double>(i) / N);
  }
  // Slopes in table-index units; harmonic means keep the interpolant monotone.
  std::vector<double> secant(N);
  for (std::size_t i = 0; i < N; ++i) secant[i] = x_[i + 1] - x_[i];
  slope_.resize(N + 1);
  slope_[0] = secant[0];
  slope_[N] = secant[N - 1];
  for (std::size_t i = 1; i < N; ++i) {
    const double s0 = secant[i - 1], s1 = secant[i];
    slope_[i] = (s0 > 0.0 && s1 > 0.0) ? 2.0 * s0 * s1 / (s0 + s1) : 0.0;
  }
}

double BetaQuantile::operator()(double u) const {
  const std::size_t N = x_.size() - 1;
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const double pos = u * static_cast<double>(N);
  const auto i = std::min(static_cast<std::size_t>(pos), N - 1);
  const double t = pos - static_cast<double>(i);
  const double t2 = t * t, t3 = t2 * t;
  const double v = (2 * t3 - 3 * t2 + 1) * x_[i] + (t3 - 2 * t2 + t) * slope_[i] +
                   (-2 * t3 + 3 * t2) * x_[i + 1] + (t3 - t2) * slope_[i + 1];
  return std::clamp(v, x_[i], x_[i + 1]);
}

double beta_rejection_sample(double a, double b, Rng& rng) {
  require(a >= 1.0 && b >= 1.0, ErrorKind::InvalidArgument, "rejection sampler needs a, b >= 1");
  const double mode = (a == 1.0 && b == 1.0) ? 0.5 : (a - 1.0) / (a + b - 2.0);
  const double peak = beta_pdf(a, b, mode);
  for (;;) {
    const double x = rng.uniform();
    if (rng.uniform() * peak <= beta_pdf(a, b, x)) return x;
  }
}

Eigen::MatrixXd benchmark_transition() {
  Eigen::MatrixXd Q(3, 3);
  Q << 0.7, 0.1, 0.2, 0.08, 0.8, 0.12, 0.15, 0.15, 0.7;
  return Q;
}

std::vector<std::string> benchmark_emissions() { return {"uniform", "symbeta(3,1.6)", "beta(3,7)"}; }

GroundTruth GroundTruth::make(const std::vector<std::string>& names, const Eigen::MatrixXd& Q,
                              const Basis& basis, int quadrature_points) {
  const int K = static_cast<int>(names.size());
  require(K >= 1 && Q.rows() == K && Q.cols() == K, ErrorKind::InvalidArgument,
          "one emission per row of Q expected");
  GroundTruth t;
  t.names = names;
  t.Q = Q;
  t.pi = stationary_distribution(Q);
  t.basis = basis;
  t.coeffs.resize(basis.max_dim(), K);
  t.norm2.resize(K);
  for (int k = 0; k < K; ++k) {
    t.densities.push_back(named_density(names[k]));
    t.samplers.push_back(make_sampler(names[k]));
    t.coeffs.col(k) =
        project_true_density(basis, basis.max_dim(), t.densities[k], quadrature_points).coeffs;
    t.norm2(k) = squared_norm(t.densities[k], quadrature_points);
  }
  return t;
}

GroundTruth GroundTruth::benchmark(int max_dim, int quadrature_points) {
  return make(benchmark_emissions(), benchmark_transition(), Basis(BasisKind::Trig, max_dim),
              quadrature_points);
}

CoefficientDensity GroundTruth::projection(int k, int M) const {
  require(M >= 1 && M <= coeffs.rows(), ErrorKind::InvalidArgument, "projection beyond the cache");
  return {basis.kind(), coeffs.col(k).head(M)};
}

double GroundTruth::bias(int k, int M) const {
  require(M >= 1 && M <= coeffs.rows(), ErrorKind::InvalidArgument, "projection beyond the cache");
  return std::sqrt(std::max(0.0, norm2(k) - coeffs.col(k).head(M).squaredNorm()));
}

double GroundTruth::error(int k, const Eigen::Ref<const Eigen::VectorXd>& c) const {
  const auto M = static_cast<int>(c.size());
  require(M >= 1 && M <= coeffs.rows(), ErrorKind::InvalidArgument, "estimate beyond the cache");
  const double within = (c - coeffs.col(k).head(M)).squaredNorm();
  const double b = bias(k, M);
  return std::sqrt(within + b * b);
}

HmmParams GroundTruth::params(int M) const {
  require(M >= 1 && M <= coeffs.rows(), ErrorKind::InvalidArgument, "projection beyond the cache");
  return {basis.kind(), pi, Q, coeffs.topRows(M)};
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& Q) {
  const auto K = Q.rows();
  require(K >= 1 && Q.cols() == K && Q.allFinite(), ErrorKind::InvalidArgument,
          "Q must be a finite square matrix");
  for (Eigen::Index i = 0; i < K; ++i) {
    require(Q.row(i).minCoeff() >= -1e-12 && std::abs(Q.row(i).sum() - 1.0) <= 1e-9,
            ErrorKind::InvalidArgument, "rows of Q must be probability vectors");
  }
  if (K > 1) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(Q.transpose(), false);
    int unit = 0;
    for (Eigen::Index i = 0; i < K; ++i) {
      if (std::abs(es.eigenvalues()(i)) > 1.0 - 1e-9) ++unit;
    }
    require(unit == 1, ErrorKind::NoUniqueStationary,
            "transition matrix is reducible or periodic: no unique stationary law");
  }
  Eigen::MatrixXd A(K + 1, K);
  A.topRows(K) = Q.transpose() - Eigen::MatrixXd::Identity(K, K);
  A.row(K).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(K + 1);
  rhs(K) = 1.0;
  Eigen::VectorXd pi = A.colPivHouseholderQr().solve(rhs);
  require(pi.allFinite() && pi.minCoeff() > 1e-14, ErrorKind::NoUniqueStationary,
          "stationary law has empty states");
  pi /= pi.sum();
  return pi;
}

SampledPath sample_hmm_path(const GroundTruth& truth, std::int64_t n, std::uint64_t seed) {
  require(n >= 1, ErrorKind::InvalidArgument, "sample size must be positive");
  const int K = truth.K();
  require(static_cast<int>(truth.samplers.size()) == K, ErrorKind::InvalidArgument,
          "ground truth without samplers");
  Eigen::VectorXd pi;
  try {
    pi = stationary_distribution(truth.Q);
  } catch (const Error& e) {
    fail(ErrorKind::InvalidArgument, std::string("cannot sample: ") + e.what());
  }
  std::vector<double> init(K);
  std::vector<std::vector<double>> rows(K, std::vector<double>(K));
  double acc = 0.0;
  for (int k = 0; k < K; ++k) init[k] = acc += pi(k);
  for (int i = 0; i < K; ++i) {
    acc = 0.0;
    for (int j = 0; j < K; ++j) rows[i][j] = acc += truth.Q(i, j);
  }
  const auto total = static_cast<std::size_t>(n) + 2;
  SampledPath path;
  path.observations.resize(total);
  path.states.resize(total);
  Rng rng(seed);
  int x = rng.categorical(init, K);
  for (std::size_t t = 0; t < total; ++t) {
    if (t > 0) x = rng.categorical(rows[x], K);
    path.states[t] = x;
    path.observations[t] = truth.samplers[x]->draw(rng);
  }
  return path;
}

std::vector<double> sample_hmm(const GroundTruth& truth, std::int64_t n, std::uint64_t seed) {
  return sample_hmm_path(truth, n, seed).observations;
}

DpermResult d_perm_detail(const HmmParams& a, const HmmParams& b) {
  a.check_shapes();
  b.check_shapes();
  require(a.K() == b.K(), ErrorKind::InvalidArgument, "d_perm needs equal state counts");
  require(a.kind == b.kind, ErrorKind::InvalidArgument, "d_perm needs the same basis kind");
  DpermResult best{std::numeric_limits<double>::infinity(), {}};
  for (const auto& perm : all_permutations(a.K())) {
    const auto p = permute_states(b, perm);
    double s = (a.pi - p.pi).squaredNorm() + (a.Q - p.Q).squaredNorm();
    for (int k = 0; k < a.K(); ++k) {
      const double d = l2_distance(a.O.col(k), p.O.col(k));
      s += d * d;
    }
    if (s < best.value) best = {s, perm};
  }
  best.value = std::sqrt(best.value);
  return best;
}

double d_perm(const HmmParams& a, const HmmParams& b) { return d_perm_detail(a, b).value; }

std::vector<int> match_states(const EstimatorFamily& family, const GroundTruth& truth) {
  require(family.K == truth.K(), ErrorKind::InvalidArgument, "family and truth differ in K");
  require(family.basis.kind() == truth.basis.kind(), ErrorKind::InvalidArgument,
          "family and truth use different bases");
  const auto& ref = family.models[family.aligned ? family.index_of(family.reference_model) : 0];
  std::vector<int> best;
  double best_value = std::numeric_limits<double>::infinity();
  for (const auto& perm : all_permutations(family.K)) {
    double s = 0.0;
    for (int k = 0; k < family.K; ++k) {
      const double e = truth.error(perm[k], ref.O.col(k));
      s += e * e;
    }
    if (s < best_value) {
      best_value = s;
      best = perm;
    }
  }
  if (best.empty()) best = all_permutations(family.K).front();
  return best;
}

std::vector<StateError> error_report(const EstimatorFamily& family, const GroundTruth& truth,
                                     const std::vector<int>& selected_M) {
  family.validate();
  require(selected_M.empty() || static_cast<int>(selected_M.size()) == family.K,
          ErrorKind::InvalidArgument, "one selected model per state expected");
  const auto match = match_states(family, truth);
  std::vector<StateError> out(family.K);
  for (int k = 0; k < family.K; ++k) {
    auto& s = out[k];
    s.truth_state = match[k];
    s.error_curve.resize(family.models.size());
    for (std::size_t i = 0; i < family.models.size(); ++i) {
      s.error_curve(i) = truth.error(match[k], family.models[i].O.col(k));
    }
    Eigen::Index best = 0;
    s.oracle_error = s.error_curve.minCoeff(&best);
    s.oracle_M = family.model_grid[best];
    s.l2_error = selected_M.empty() ? std::numeric_limits<double>::quiet_NaN()
                                    : s.error_curve(family.index_of(selected_M[k]));
  }
  return out;
}

RateFit rate_regression(const std::vector<std::pair<double, double>>& points, double n_min) {
  RateFit fit;
  for (const auto& [n, err] : points) {
    if (n >= n_min) {
      require(n > 0.0 && err > 0.0 && std::isfinite(err), ErrorKind::InvalidArgument,
              "rate regression needs positive sizes and errors");
      fit.points.emplace_back(std::log(n), std::log(err));
    }
  }
  const auto p = fit.points.size();
  require(p >= 3, ErrorKind::InsufficientData, "rate regression needs at least 3 points with n >= n_min");
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : fit.points) {
    mx += x;
    my += y;
  }
  mx /= p;
  my /= p;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : fit.points) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  require(sxx > 0.0, ErrorKind::InsufficientData, "rate regression needs at least two sample sizes");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (const auto& [x, y] : fit.points) {
    const double r = y - fit.intercept - fit.slope * x;
    ssr += r * r;
  }
  fit.stderr_slope = p > 2 ? std::sqrt(ssr / (p - 2) / sxx) : 0.0;
  return fit;
}

double minimax_exponent(double s) {
  require(s > 0.0, ErrorKind::InvalidArgument, "regularity must be positive");
  return std::isinf(s) ? -0.5 : -s / (2.0 * s + 1.0);
}

double benchmark_regularity(const std::string& name) {
  const auto p = parse_name(name);
  switch (p.kind) {
    case ParsedName::Uniform: return std::numeric_limits<double>::infinity();
    case ParsedName::Beta:
      return std::min(p.a, p.b);
    case ParsedName::SymBeta: return std::min(p.a, p.b) - 1.0;
  }
  return 0.0;
}

double default_n_min(std::vector<double> sizes) {
  require(!sizes.empty(), ErrorKind::InvalidArgument, "no sample sizes");
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  const auto rank = static_cast<std::size_t>(std::ceil(0.6 * sizes.size()));
  return sizes[std::max<std::size_t>(rank, 1) - 1];
}

}  // namespace nphmm
