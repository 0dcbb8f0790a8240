#pragma once

#include <Eigen/Dense>
#include <vector>

#include "nphmm/basis.hpp"

namespace nphmm {

/// (pi, Q, O) for K hidden states; column k of O holds the coefficients of the
/// k-th emission density over the basis.
struct HmmParams {
  BasisKind kind = BasisKind::Trig;
  Eigen::VectorXd pi;
  Eigen::MatrixXd Q;
  Eigen::MatrixXd O;

  int K() const { return static_cast<int>(pi.size()); }
  int dim() const { return static_cast<int>(O.rows()); }
  CoefficientDensity emission(int k) const { return {kind, O.col(k)}; }

  /// Shapes agree (pi: K, Q: KxK, O: MxK).
  void check_shapes() const;
  /// Shapes agree, pi and every row of Q lie in the simplex within tol.
  void check_valid(double tol = 1e-9) const;
};

/// Relabels states: new state k is old state perm[k].
HmmParams permute_states(const HmmParams& params, const std::vector<int>& perm);

/// All permutations of {0, ..., K-1} in lexicographic order.
std::vector<std::vector<int>> all_permutations(int K);

}  // namespace nphmm
