#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nphmm/basis.hpp"
#include "nphmm/family.hpp"
#include "nphmm/params.hpp"
#include "nphmm/quadrature.hpp"
#include "nphmm/rng.hpp"

namespace nphmm {

/// Named emission densities on [0, 1]:
///   "uniform"
///   "beta(a,b)"     Beta density; "beta" alone means beta(3,7)
///   "symbeta(a,b)"  equal mixture of (2/3) X and 1 - X'/3 with X, X' ~ Beta(a, b);
///                   "symbeta" alone means symbeta(3,1.6)
Density named_density(const std::string& name);
double true_density(const std::string& name, double y);

/// Draws from a named density.
class EmissionSampler {
 public:
  virtual ~EmissionSampler() = default;
  virtual double draw(Rng& rng) const = 0;
};

std::shared_ptr<const EmissionSampler> make_sampler(const std::string& name);

/// Beta quantile function tabulated on 2^16 + 1 equally spaced probabilities and
/// interpolated by a monotone (Fritsch-Carlson) cubic.
class BetaQuantile {
 public:
  BetaQuantile(double a, double b, int log2_points = 16);
  double operator()(double u) const;

 private:
  std::vector<double> x_;
  std::vector<double> slope_;
};

/// Reference sampler by rejection from the uniform proposal (a, b >= 1).
double beta_rejection_sample(double a, double b, Rng& rng);

/// Transition matrix of the three-state benchmark.
Eigen::MatrixXd benchmark_transition();
/// Emission names of the benchmark, in state order: uniform, symbeta, beta(3,7).
std::vector<std::string> benchmark_emissions();

/// A stationary HMM with analytic emissions and cached basis projections.
struct GroundTruth {
  std::vector<std::string> names;
  Eigen::VectorXd pi;
  Eigen::MatrixXd Q;
  Basis basis{BasisKind::Trig, 1};
  std::vector<Density> densities;
  std::vector<std::shared_ptr<const EmissionSampler>> samplers;
  /// max_dim x K projection coefficients; truncation gives every smaller model.
  Eigen::MatrixXd coeffs;
  /// Squared L2 norm of each density.
  Eigen::VectorXd norm2;

  static GroundTruth make(const std::vector<std::string>& names, const Eigen::MatrixXd& Q,
                          const Basis& basis,
                          int quadrature_points = kDefaultQuadraturePoints);
  static GroundTruth benchmark(int max_dim, int quadrature_points = kDefaultQuadraturePoints);

  int K() const { return static_cast<int>(names.size()); }
  CoefficientDensity projection(int k, int M) const;
  /// |f*_k - f*_k^(M)|.
  double bias(int k, int M) const;
  /// |f - f*_k| for f given by its coefficients.
  double error(int k, const Eigen::Ref<const Eigen::VectorXd>& c) const;
  /// (pi, Q, first M projection coefficients).
  HmmParams params(int M) const;
};

/// Unique stationary law of Q. Throws NoUniqueStationary when 1 is not a simple,
/// strictly dominant eigenvalue or the law has empty states.
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& Q);

struct SampledPath {
  std::vector<double> observations;
  std::vector<int> states;
};

/// n + 2 observations from the stationary chain (path returned too).
SampledPath sample_hmm_path(const GroundTruth& truth, std::int64_t n, std::uint64_t seed);
std::vector<double> sample_hmm(const GroundTruth& truth, std::int64_t n, std::uint64_t seed);

struct DpermResult {
  double value = 0.0;
  /// perm[k]: state of the second argument matched with state k of the first.
  std::vector<int> perm;
};

/// min over relabelings of sqrt(|pi1 - pi2|^2 + |Q1 - Q2|_F^2 + sum_k |f1_k - f2_k|^2).
DpermResult d_perm_detail(const HmmParams& a, const HmmParams& b);
double d_perm(const HmmParams& a, const HmmParams& b);

struct StateError {
  /// Truth state matched with this family column.
  int truth_state = 0;
  /// Error of the selected model (NaN when no selection is given).
  double l2_error = 0.0;
  double oracle_error = 0.0;
  int oracle_M = 0;
  /// |f^(M)_k - f*| over the family grid.
  Eigen::VectorXd error_curve;
};

/// Matches family columns with truth states at the reference model (minimum
/// total squared error over relabelings).
std::vector<int> match_states(const EstimatorFamily& family, const GroundTruth& truth);

/// Errors against the truth; `selected_M[k]` is the chosen model for column k.
std::vector<StateError> error_report(const EstimatorFamily& family, const GroundTruth& truth,
                                     const std::vector<int>& selected_M = {});

struct RateFit {
  double slope = 0.0;
  double stderr_slope = 0.0;
  double intercept = 0.0;
  /// (log n, log error) pairs used by the fit.
  std::vector<std::pair<double, double>> points;
};

/// OLS of log(error) on log(n) over points with n >= n_min.
RateFit rate_regression(const std::vector<std::pair<double, double>>& points, double n_min);

/// Minimax exponent -s / (2s + 1) of the L2 rate for s-Hölder densities on
/// [0, 1]; s = +inf gives the parametric -1/2.
double minimax_exponent(double s);

/// Hölder regularity of the benchmark densities (+inf for the uniform).
double benchmark_regularity(const std::string& name);

/// 60th percentile (nearest rank) of the distinct sample sizes.
double default_n_min(std::vector<double> sizes);

}  // namespace nphmm
