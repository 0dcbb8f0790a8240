#pragma once

#include <Eigen/Dense>

#include "nphmm/params.hpp"

namespace nphmm {

struct HdetReport {
  int dim = 0;
  Eigen::MatrixXd hessian;
  double determinant = 0.0;
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
};

/// Local coordinates (p, q, A) around params, flattened as
/// [p (K-1) | q row-major (K x (K-1)) | A row-major (K x (K-1))]. The last entry of
/// p and the last column of q and A are minus the sums of the others.
int hdet_dimension(int K);

/// |C(theta) - C(0)|_F^2, C the triple tensor of the perturbed parameters
/// (pi + p, Q + q, O (I + A)^T).
double hdet_objective(const HmmParams& params, const Eigen::Ref<const Eigen::VectorXd>& theta);

/// Jacobian of vec(C) with respect to theta at 0 (central differences).
Eigen::MatrixXd hdet_jacobian(const HmmParams& params, double step = 1e-4);

/// Central finite-difference Hessian of hdet_objective at 0, with determinant and
/// extreme eigenvalues.
HdetReport hdet_diagnostic(const HmmParams& params, double step = 1e-4, int threads = 1);

}  // namespace nphmm
