#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>

#include "nphmm/basis.hpp"
#include "nphmm/errors.hpp"
#include "nphmm/moments.hpp"
#include "nphmm/params.hpp"

namespace nphmm {

/// Full M x M x M triple tensor in the MomentTensors layout: (M*M) x M,
/// entry (a + M c, b).
using TripleTensor = Eigen::MatrixXd;

struct LsProblem {
  TripleTensor T_full;
  int K = 1;
  /// Emission coefficient vectors are kept in {w . c = 1, |c| <= coeff_norm_bound},
  /// w being the coefficients of the constant function.
  double coeff_norm_bound = 10.0;
  Basis basis{BasisKind::Trig, 1};
  /// Sample size behind T_full (only used to size the spectral warm start).
  std::int64_t n = 1;

  int dim() const;
};

TripleTensor build_ls_tensor(std::span<const double> observations, const Basis& basis, int M);

/// Triple tensor of (pi, Q, O): slice b is O Diag[pi] Q Diag[O(b, .)] Q O^T.
TripleTensor candidate_tensor(const Eigen::VectorXd& pi, const Eigen::MatrixXd& Q,
                              const Eigen::MatrixXd& O);

/// |candidate - T|_F^2 - |T|_F^2.
double ls_criterion(const Eigen::VectorXd& pi, const Eigen::MatrixXd& Q, const Eigen::MatrixXd& O,
                    const TripleTensor& T_emp);

/// The moment tensors (m = M) implied by a full triple tensor, obtained by
/// contracting the unused slots with the constant function.
MomentTensors moments_from_triple(const TripleTensor& T, const Basis& basis, std::int64_t n);

struct LsOptions {
  int max_iters = 5000;
  double tol = 1e-9;
  int restarts = 3;
  std::uint64_t seed = 0;
};

struct LsResult {
  HmmParams params;
  double criterion = 0.0;
  double initial_criterion = 0.0;
  int iterations = 0;
  bool converged = false;
};

class OptimizationStalled : public Error {
 public:
  OptimizationStalled(const std::string& message, HmmParams best, double criterion)
      : Error(ErrorKind::OptimizationStalled, message), best_(std::move(best)), criterion_(criterion) {}
  const HmmParams& best() const { return best_; }
  double criterion() const { return criterion_; }

 private:
  HmmParams best_;
  double criterion_;
};

/// Projected block-coordinate gradient descent on the least-squares contrast,
/// alternating pi, Q and O with backtracking line searches. Without `init`, a
/// spectral warm start is computed from T_full.
LsResult ls_estimate(const LsProblem& problem, const std::optional<HmmParams>& init,
                     const LsOptions& options = {});

/// Euclidean projection of a coefficient vector onto {w . c = 1, |c| <= bound}.
Eigen::VectorXd project_emission(const Eigen::Ref<const Eigen::VectorXd>& c,
                                 const Eigen::Ref<const Eigen::VectorXd>& w, double bound);

}  // namespace nphmm
