#include "nphmm/simplex.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "nphmm/errors.hpp"

namespace nphmm {

Eigen::VectorXd simplex_project(const Eigen::Ref<const Eigen::VectorXd>& v) {
  require(v.size() >= 1 && v.allFinite(), ErrorKind::InvalidArgument,
          "simplex_project needs a finite non-empty vector");
  std::vector<double> sorted(v.data(), v.data() + v.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    cumulative += sorted[j];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (sorted[j] - candidate > 0.0) theta = candidate;
  }
  return (v.array() - theta).cwiseMax(0.0).matrix();
}

Eigen::VectorXd weighted_simplex_project(const Eigen::Ref<const Eigen::VectorXd>& v,
                                         const Eigen::Ref<const Eigen::VectorXd>& w) {
  require(v.size() == w.size() && v.size() >= 1, ErrorKind::InvalidArgument,
          "weighted_simplex_project: size mismatch");
  require(w.minCoeff() > 0.0 && v.allFinite(), ErrorKind::InvalidArgument,
          "weighted_simplex_project needs positive weights and finite values");
  // x_i(lambda) = max(v_i - lambda w_i, 0); w . x(lambda) is piecewise linear and
  // nonincreasing with breakpoints at v_i / w_i.
  const Eigen::Index n = v.size();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return v(a) / w(a) > v(b) / w(b); });
  double sum_wv = 0.0;
  double sum_ww = 0.0;
  double lambda = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index i = order[j];
    sum_wv += w(i) * v(i);
    sum_ww += w(i) * w(i);
    const double candidate = (sum_wv - 1.0) / sum_ww;
    if (v(i) - candidate * w(i) > 0.0) lambda = candidate;
  }
  return (v - lambda * w).cwiseMax(0.0);
}

Eigen::MatrixXd transition_project(const Eigen::Ref<const Eigen::MatrixXd>& A) {
  Eigen::MatrixXd out(A.rows(), A.cols());
  for (Eigen::Index k = 0; k < A.rows(); ++k) {
    out.row(k) = simplex_project(A.row(k).transpose()).transpose();
  }
  return out;
}

}  // namespace nphmm
