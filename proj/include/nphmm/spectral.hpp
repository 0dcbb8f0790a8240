#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>

#include "nphmm/basis.hpp"
#include "nphmm/moments.hpp"
#include "nphmm/params.hpp"

namespace nphmm {

struct SpectralOptions {
  /// Clip the emission estimates to [-n^alpha, n^alpha] (off by default).
  std::optional<double> clip_alpha;
  int clip_grid = 2048;
};

struct SpectralEstimate {
  HmmParams params;
  /// min_k min_{k1 != k2} |Lambda(k, k1) - Lambda(k, k2)| of the retained attempt
  /// (+inf when K = 1).
  double separation_score = 0.0;
  int attempt_index = 0;
  /// Top singular values of N, descending.
  Eigen::VectorXd singular_values;
};

/// Spectral estimator with randomized joint diagonalization.
///
/// Uses the top-K singular spaces of N to whiten P and the slices of T, draws
/// `retries` Haar rotations, diagonalizes the first rotated combination and keeps
/// the attempt whose eigenvalues are best separated across all K combinations.
/// Emission coefficients are read off the eigenvalues; pi and Q follow by the
/// closed-form moment identities and are projected onto the simplex /
/// transition-matrix sets. Attempt i uses an RNG stream derived from (seed, i).
///
/// Throws IllConditionedMoments when U^T P U is numerically singular and
/// DiagonalizationFailure when no attempt has real, separated eigenvalues.
SpectralEstimate spectral_estimate(const MomentTensors& tensors, const Basis& basis, int K,
                                   int retries, std::uint64_t seed,
                                   const SpectralOptions& options = {});

/// Descending singular values of N.
Eigen::VectorXd singular_spectrum(const MomentTensors& tensors);

/// Order suggested by the largest ratio s_k / s_{k+1} among k < max_order.
int elbow_order(const Eigen::Ref<const Eigen::VectorXd>& spectrum, int max_order = 10);

/// Haar-distributed K x K orthogonal matrix.
Eigen::MatrixXd haar_orthogonal(int K, std::uint64_t seed);

/// ceil(2 log n + 2 log M).
int default_retries(std::int64_t n, int M);

/// Evaluates f on `grid_size` midpoints, projects the values onto nonnegative
/// functions of unit mass, and re-expands on the same basis.
CoefficientDensity project_density_to_simplex(const Basis& basis, const CoefficientDensity& f,
                                              int grid_size);

/// Clips the values of f to [-bound, bound] on a midpoint grid and re-expands.
CoefficientDensity clip_density(const Basis& basis, const CoefficientDensity& f, double bound,
                                int grid_size);

}  // namespace nphmm
