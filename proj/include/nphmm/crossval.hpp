#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "nphmm/basis.hpp"
#include "nphmm/moments.hpp"
#include "nphmm/spectral.hpp"

namespace nphmm {

using IndexRange = std::pair<std::size_t, std::size_t>;  // [begin, end)

/// Blocked folds over observation indices 0..n-1.
struct CvPlan {
  std::size_t n = 0;
  int folds = 10;
  int gap = 30;
  /// Contiguous validation blocks; the first n % folds blocks get one extra element.
  std::vector<IndexRange> segments;
  /// Per fold: training runs, i.e. everything outside [begin - gap, end + gap) of the fold.
  std::vector<std::vector<IndexRange>> training;

  std::size_t training_size(int fold) const;
};

CvPlan cv_split(std::size_t n, int folds = 10, int gap = 30);

struct CvOptions {
  int folds = 10;
  int gap = 30;
  int m = 20;
  int retries = 0;  // 0: ceil(2 log n + 2 log M)
  std::uint64_t seed = 0;
  int threads = 1;
  SpectralOptions spectral;
};

struct CvResult {
  int M_hat = 0;
  std::vector<int> model_grid;
  /// Mean held-out risk per model (+inf if every fold failed).
  Eigen::VectorXd E_curve;
  /// folds x models; +inf where the spectral fit failed.
  Eigen::MatrixXd fold_risk;
  CvPlan plan;
};

/// Held-out contrast of (pi, Q, O) on a block of observations:
/// |C|_F^2 - 2 <C, T_block>, C the candidate triple tensor at dimension O.rows().
/// Equals |C - T_block|_F^2 - |T_block|_F^2 without forming M^3 tensors.
double heldout_risk(const Eigen::VectorXd& pi, const Eigen::MatrixXd& Q, const Eigen::MatrixXd& O,
                    const Eigen::Ref<const Eigen::MatrixXd>& block_features);

/// Moments over the training runs of `fold`, computed as whole-sample sums minus
/// the triples that touch the excluded window.
MomentTensors training_moments(std::span<const double> observations, const Basis& basis,
                               const MomentTensors& whole, const CvPlan& plan, int fold);

/// Blocked cross-validation of the spectral estimator over a model grid; one
/// model is returned for all states.
CvResult cv_select(std::span<const double> observations, const Basis& basis,
                   const std::vector<int>& model_grid, int K, const CvOptions& options = {});

}  // namespace nphmm
