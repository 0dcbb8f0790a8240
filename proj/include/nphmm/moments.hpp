#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "nphmm/basis.hpp"
#include "nphmm/params.hpp"

namespace nphmm {

/// Empirical (or population) statistics of consecutive observation triples:
///
///   L(a)      = mean phi_a(Y_s)
///   N(a,b)    = mean phi_a(Y_s) phi_b(Y_{s+1})
///   P(a,c)    = mean phi_a(Y_s) phi_c(Y_{s+2})
///   T(a,b,c)  = mean phi_a(Y_s) phi_b(Y_{s+1}) phi_c(Y_{s+2})
///
/// with a, c < m and b < M. T is stored dense as an (m*m) x M matrix whose
/// column b, read column-major as an m x m matrix, is the slice T(., b, .).
struct MomentTensors {
  BasisKind kind = BasisKind::Trig;
  int m = 0;
  int M = 0;
  std::int64_t n = 0;
  Eigen::VectorXd L;
  Eigen::MatrixXd N;
  Eigen::MatrixXd P;
  Eigen::MatrixXd T;

  static MomentTensors zeros(BasisKind kind, int m, int M);

  double t(int a, int b, int c) const { return T(a + m * c, b); }
  Eigen::Map<const Eigen::MatrixXd> slice(int b) const {
    return Eigen::Map<const Eigen::MatrixXd>(T.col(b).data(), m, m);
  }

  /// The statistics of the nested models (m2, M2), m2 <= m, M2 <= M.
  MomentTensors restricted(int m2, int M2) const;

  bool all_finite() const;
};

/// Single pass over the n = obs.size() - 2 triples.
MomentTensors accumulate_moments(std::span<const double> observations, const Basis& basis, int m,
                                 int M, int threads = 1);

/// Statistics of the triples starting at positions [first, first + count).
MomentTensors accumulate_moments_range(std::span<const double> observations, const Basis& basis,
                                       int m, int M, std::size_t first, std::size_t count);

/// Statistics over contiguous observation runs [begin, end); no triple straddles two runs.
MomentTensors accumulate_moments_runs(std::span<const double> observations, const Basis& basis,
                                      int m, int M,
                                      const std::vector<std::pair<std::size_t, std::size_t>>& runs);

/// n-weighted average; a tensor with n = 0 is neutral.
MomentTensors merge_moments(const MomentTensors& a, const MomentTensors& b);

/// Exact expectations under a stationary HMM whose emissions have coefficients params.O.
MomentTensors population_moments(const HmmParams& params, int m, int M);

}  // namespace nphmm
