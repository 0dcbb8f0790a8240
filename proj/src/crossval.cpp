#include "nphmm/crossval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nphmm/errors.hpp"
#include "nphmm/parallel.hpp"
#include "nphmm/rng.hpp"
#include "nphmm/selection.hpp"

namespace nphmm {

std::size_t CvPlan::training_size(int fold) const {
  std::size_t total = 0;
  for (const auto& [b, e] : training.at(fold)) total += e - b;
  return total;
}

CvPlan cv_split(std::size_t n, int folds, int gap) {
  require(folds >= 2, ErrorKind::InvalidArgument, "cross-validation needs at least two folds");
  require(gap >= 0, ErrorKind::InvalidArgument, "gap must be nonnegative");
  require(n >= static_cast<std::size_t>(folds) * (2 * static_cast<std::size_t>(gap) + 3),
          ErrorKind::InsufficientData, "too few observations for the requested folds and gap");
  CvPlan plan;
  plan.n = n;
  plan.folds = folds;
  plan.gap = gap;
  const std::size_t base = n / folds, extra = n % folds;
  std::size_t begin = 0;
  for (int j = 0; j < folds; ++j) {
    const std::size_t len = base + (static_cast<std::size_t>(j) < extra ? 1 : 0);
    plan.segments.emplace_back(begin, begin + len);
    begin += len;
  }
  for (const auto& [b, e] : plan.segments) {
    const std::size_t lo = b > static_cast<std::size_t>(gap) ? b - gap : 0;
    const std::size_t hi = std::min(n, e + gap);
    std::vector<IndexRange> runs;
    if (lo > 0) runs.emplace_back(0, lo);
    if (hi < n) runs.emplace_back(hi, n);
    plan.training.push_back(std::move(runs));
  }
  return plan;
}

double heldout_risk(const Eigen::VectorXd& pi, const Eigen::MatrixXd& Q, const Eigen::MatrixXd& O,
                    const Eigen::Ref<const Eigen::MatrixXd>& block_features) {
  const auto K = pi.size();
  require(Q.rows() == K && Q.cols() == K && O.cols() == K, ErrorKind::InvalidArgument,
          "inconsistent (pi, Q, O) shapes");
  require(block_features.cols() == O.rows(), ErrorKind::InvalidArgument,
          "features must have one column per basis function");
  const auto len = block_features.rows();
  require(len >= 3, ErrorKind::InsufficientData, "held-out block shorter than one triple");

  // |C|^2 = sum_{y,y'} tr(D_y G D_y'^T G) G(y, y'), D_y(x, z) = pi_x Q_xy Q_yz, G = O^T O.
  const Eigen::MatrixXd G = O.transpose() * O;
  std::vector<Eigen::MatrixXd> d(K);
  for (Eigen::Index y = 0; y < K; ++y) d[y] = pi.cwiseProduct(Q.col(y)) * Q.row(y);
  double c2 = 0.0;
  for (Eigen::Index y = 0; y < K; ++y) {
    const Eigen::MatrixXd left = d[y] * G;
    for (Eigen::Index y2 = 0; y2 < K; ++y2) {
      c2 += (left * d[y2].transpose() * G).trace() * G(y, y2);
    }
  }

  // <C, T_block> = mean_s sum_y [(g_s o pi)^T Q]_y g_{s+1}(y) [Q g_{s+2}]_y, g_s = O^T phi(Y_s).
  const Eigen::MatrixXd g = block_features * O;  // len x K
  const Eigen::MatrixXd a = (g.array().rowwise() * pi.transpose().array()).matrix() * Q;
  const Eigen::MatrixXd c = g * Q.transpose();
  const auto triples = len - 2;
  const double inner = (a.topRows(triples).array() * g.middleRows(1, triples).array() *
                        c.bottomRows(triples).array())
                           .sum() /
                       static_cast<double>(triples);
  return c2 - 2.0 * inner;
}

MomentTensors training_moments(std::span<const double> observations, const Basis& basis,
                               const MomentTensors& whole, const CvPlan& plan, int fold) {
  require(observations.size() == plan.n, ErrorKind::InvalidArgument, "plan does not match data");
  require(fold >= 0 && fold < plan.folds, ErrorKind::InvalidArgument, "fold out of range");
  const std::size_t n = plan.n;
  const auto [b, e] = plan.segments[fold];
  const std::size_t lo = b > static_cast<std::size_t>(plan.gap) ? b - plan.gap : 0;
  const std::size_t hi = std::min(n, e + plan.gap);
  // Triples starting in [lo - 2, hi) touch the excluded window.
  const std::size_t first = lo >= 2 ? lo - 2 : 0;
  const std::size_t last = std::min(hi, n - 2);
  const auto removed =
      accumulate_moments_range(observations, basis, whole.m, whole.M, first, last - first);
  const auto kept = whole.n - removed.n;
  require(kept >= 1, ErrorKind::InsufficientData, "training set has no observation triple");
  const double wa = static_cast<double>(whole.n) / kept;
  const double wb = static_cast<double>(removed.n) / kept;
  MomentTensors out = whole;
  out.n = kept;
  out.L = wa * whole.L - wb * removed.L;
  out.N = wa * whole.N - wb * removed.N;
  out.P = wa * whole.P - wb * removed.P;
  out.T = wa * whole.T - wb * removed.T;
  return out;
}

CvResult cv_select(std::span<const double> observations, const Basis& basis,
                   const std::vector<int>& model_grid, int K, const CvOptions& options) {
  require(!model_grid.empty(), ErrorKind::InvalidArgument, "empty model grid");
  for (std::size_t i = 1; i < model_grid.size(); ++i) {
    require(model_grid[i] > model_grid[i - 1], ErrorKind::InvalidArgument,
            "model grid must be strictly increasing");
  }
  require(model_grid.front() >= 1 && model_grid.back() <= basis.max_dim(),
          ErrorKind::InvalidArgument, "model grid outside the basis");
  require(K >= 1 && K <= std::min(options.m, model_grid.front()), ErrorKind::InvalidArgument,
          "every model must have at least K basis functions");
  CvResult result;
  result.plan = cv_split(observations.size(), options.folds, options.gap);
  result.model_grid = model_grid;
  const int M_max = model_grid.back();
  const int m = std::min(options.m, M_max);
  const auto whole = accumulate_moments(observations, basis, m, M_max, options.threads);
  const auto G = static_cast<Eigen::Index>(model_grid.size());
  result.fold_risk = Eigen::MatrixXd::Constant(options.folds, G, std::numeric_limits<double>::infinity());

  for (int j = 0; j < options.folds; ++j) {
    const auto train = training_moments(observations, basis, whole, result.plan, j);
    const auto [b, e] = result.plan.segments[j];
    Eigen::MatrixXd features(static_cast<Eigen::Index>(e - b), M_max);
    Eigen::VectorXd row(M_max);
    for (std::size_t s = b; s < e; ++s) {
      basis.evaluate_into(observations[s], std::span<double>(row.data(), M_max));
      features.row(static_cast<Eigen::Index>(s - b)) = row.transpose();
    }
    parallel_for(model_grid.size(), options.threads, [&](std::size_t i) {
      const int M = model_grid[i];
      const int mm = std::min(m, M);
      try {
        const int r = options.retries > 0 ? options.retries : default_retries(train.n, M);
        const std::uint64_t seed =
            derive_seed(derive_seed(options.seed, static_cast<std::uint64_t>(j)), M);
        const auto est =
            spectral_estimate(train.restricted(mm, M), basis, K, r, seed, options.spectral);
        result.fold_risk(j, static_cast<Eigen::Index>(i)) =
            heldout_risk(est.params.pi, est.params.Q, est.params.O, features.leftCols(M));
      } catch (const Error&) {
        // Failed cells stay at +inf.
      }
    });
  }

  result.E_curve.resize(G);
  for (Eigen::Index i = 0; i < G; ++i) result.E_curve(i) = result.fold_risk.col(i).mean();
  for (Eigen::Index i = 0; i < G; ++i) {
    require(result.fold_risk.col(i).array().isFinite().any(), ErrorKind::DiagonalizationFailure,
            "spectral estimation failed on every fold for M = " + std::to_string(model_grid[i]));
  }
  result.M_hat = model_grid[argmin_first(result.E_curve)];
  return result;
}

}  // namespace nphmm
