#pragma once

#include <Eigen/Dense>

namespace nphmm {

/// Euclidean projection onto {x >= 0, sum x = 1} (sort-based, exact).
Eigen::VectorXd simplex_project(const Eigen::Ref<const Eigen::VectorXd>& v);

/// Euclidean projection onto {x >= 0, w . x = 1} for positive weights w.
Eigen::VectorXd weighted_simplex_project(const Eigen::Ref<const Eigen::VectorXd>& v,
                                         const Eigen::Ref<const Eigen::VectorXd>& w);

/// Row-wise simplex projection onto the set of transition matrices.
Eigen::MatrixXd transition_project(const Eigen::Ref<const Eigen::MatrixXd>& A);

}  // namespace nphmm
