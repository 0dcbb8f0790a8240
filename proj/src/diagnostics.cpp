#include "nphmm/diagnostics.hpp"

#include "nphmm/errors.hpp"
#include "nphmm/leastsq.hpp"
#include "nphmm/parallel.hpp"

namespace nphmm {

int hdet_dimension(int K) { return (K - 1) * (2 * K + 1); }

namespace {

HmmParams perturbed(const HmmParams& params, const Eigen::Ref<const Eigen::VectorXd>& theta) {
  const int K = params.K();
  require(theta.size() == hdet_dimension(K), ErrorKind::InvalidArgument,
          "theta must have (K-1)(2K+1) entries");
  HmmParams out = params;
  int pos = 0;
  double sum = 0.0;
  for (int i = 0; i < K - 1; ++i) {
    out.pi(i) += theta(pos);
    sum += theta(pos++);
  }
  out.pi(K - 1) -= sum;
  for (int i = 0; i < K; ++i) {
    sum = 0.0;
    for (int j = 0; j < K - 1; ++j) {
      out.Q(i, j) += theta(pos);
      sum += theta(pos++);
    }
    out.Q(i, K - 1) -= sum;
  }
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(K, K);
  for (int i = 0; i < K; ++i) {
    for (int j = 0; j < K - 1; ++j) A(i, j) = theta(pos++);
    A(i, K - 1) = -A.row(i).head(K - 1).sum();
  }
  out.O = params.O * (Eigen::MatrixXd::Identity(K, K) + A).transpose();
  return out;
}

}  // namespace

double hdet_objective(const HmmParams& params, const Eigen::Ref<const Eigen::VectorXd>& theta) {
  params.check_shapes();
  const auto p = perturbed(params, theta);
  return (candidate_tensor(p.pi, p.Q, p.O) - candidate_tensor(params.pi, params.Q, params.O))
      .squaredNorm();
}

Eigen::MatrixXd hdet_jacobian(const HmmParams& params, double step) {
  params.check_shapes();
  require(params.K() >= 2, ErrorKind::InvalidArgument, "hdet needs K >= 2");
  const int dim = hdet_dimension(params.K());
  const auto M = params.dim();
  Eigen::MatrixXd J(static_cast<Eigen::Index>(M) * M * M, dim);
  for (int i = 0; i < dim; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
    e(i) = step;
    const auto plus = perturbed(params, e);
    const auto minus = perturbed(params, -e);
    const Eigen::MatrixXd diff = candidate_tensor(plus.pi, plus.Q, plus.O) -
                                 candidate_tensor(minus.pi, minus.Q, minus.O);
    J.col(i) = Eigen::Map<const Eigen::VectorXd>(diff.data(), diff.size()) / (2.0 * step);
  }
  return J;
}

HdetReport hdet_diagnostic(const HmmParams& params, double step, int threads) {
  params.check_shapes();
  require(params.K() >= 2, ErrorKind::InvalidArgument, "hdet needs K >= 2");
  require(step >= 1e-6 && step <= 1e-2, ErrorKind::InvalidArgument, "step must lie in [1e-6, 1e-2]");
  const int dim = hdet_dimension(params.K());
  auto h = [&](int i, double si, int j, double sj) {
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(dim);
    theta(i) += si;
    theta(j) += sj;
    return hdet_objective(params, theta);
  };
  const double h0 = hdet_objective(params, Eigen::VectorXd::Zero(dim));
  HdetReport report;
  report.dim = dim;
  report.hessian.resize(dim, dim);
  parallel_for(static_cast<std::size_t>(dim), threads, [&](std::size_t ii) {
    const int i = static_cast<int>(ii);
    report.hessian(i, i) = (h(i, step, i, 0.0) - 2.0 * h0 + h(i, -step, i, 0.0)) / (step * step);
    for (int j = i + 1; j < dim; ++j) {
      report.hessian(i, j) = (h(i, step, j, step) - h(i, step, j, -step) - h(i, -step, j, step) +
                              h(i, -step, j, -step)) /
                             (4.0 * step * step);
    }
  });
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < i; ++j) report.hessian(i, j) = report.hessian(j, i);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(report.hessian);
  report.min_eigenvalue = es.eigenvalues().minCoeff();
  report.max_eigenvalue = es.eigenvalues().maxCoeff();
  report.determinant = es.eigenvalues().prod();
  return report;
}

}  // namespace nphmm
