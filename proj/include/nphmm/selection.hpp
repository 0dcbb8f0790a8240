#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "nphmm/family.hpp"

namespace nphmm {

/// Smallest grid model with M >= 4K, or the largest model if there is none.
int default_reference_model(const std::vector<int>& model_grid, int K);

/// Permutes each model's states to best match the reference model: tau
/// minimizes max_k |f^(M)_tau(k) - f^(M0)_k|. Ties keep the earliest
/// permutation in lexicographic order, so an aligned family is left unchanged.
EstimatorFamily align_family(const EstimatorFamily& family, int reference_model);

/// The permutation align_family applies to one model.
std::vector<int> alignment_permutation(const Eigen::MatrixXd& O, const Eigen::MatrixXd& O_ref);

enum class PenaltyKind { Spectral, Ls };
enum class Variant { Standard, Pos, Max };

std::string to_string(PenaltyKind kind);
std::string to_string(Variant variant);
PenaltyKind penalty_kind_from_string(const std::string& name);
Variant variant_from_string(const std::string& name);

/// sqrt(M log(n)^4 / n) for Spectral, sqrt(M log(n) / n) for Ls.
double penalty_shape(PenaltyKind kind, int M, std::int64_t n);

PenaltyKind penalty_kind_for(Method method);

/// sigma_k(M) = rho[k] * penalty_shape(kind, M, n).
struct PenaltyDescriptor {
  PenaltyKind kind = PenaltyKind::Spectral;
  std::vector<double> rho;
  std::int64_t n = 0;

  double sigma(int k, int M) const { return rho[k] * penalty_shape(kind, M, n); }
  Eigen::VectorXd sigma_curve(int k, const std::vector<int>& model_grid) const;
};

/// Pairwise distances |f^(Mi)_k - f^(Mj)_k| between the models of a family.
class DistanceCache {
 public:
  explicit DistanceCache(const EstimatorFamily& family, int threads = 1);

  int states() const { return static_cast<int>(dist_.size()); }
  int models() const { return size_; }
  double operator()(int k, int i, int j) const {
    return i <= j ? dist_[k][offset(i, j)] : dist_[k][offset(j, i)];
  }
  /// Median over states and model pairs i < j (0 for single-model families).
  double median_pairwise() const;
  double max_pairwise() const;

 private:
  std::size_t offset(int i, int j) const {
    return static_cast<std::size_t>(i) * size_ - static_cast<std::size_t>(i) * (i - 1) / 2 + (j - i);
  }
  int size_ = 0;
  std::vector<std::vector<double>> dist_;
};

/// Bias proxy per grid model. Standard: max over M' of d(M', min(M, M')) - sigma(M').
/// Pos: max over M' >= M of (d(M', M) - sigma(M'))_+. Max: d(M_max, M).
Eigen::VectorXd compute_A(const DistanceCache& cache, int k, const Eigen::VectorXd& sigma,
                          Variant variant);

Eigen::VectorXd compute_A(const EstimatorFamily& family, int k, const Eigen::VectorXd& sigma,
                          Variant variant);

struct StateSelection {
  int M_hat = 0;
  int index = 0;
  Eigen::VectorXd A;
  Eigen::VectorXd criterion;
};

struct SelectionResult {
  Variant variant = Variant::Standard;
  PenaltyDescriptor penalty;
  std::vector<int> model_grid;
  std::vector<StateSelection> states;
};

/// Index of the smallest entry, the earliest on ties.
int argmin_first(const Eigen::Ref<const Eigen::VectorXd>& values);

/// Per-state selection: Standard and Pos minimize A + 2 sigma, Max minimizes
/// d(M_max, M) + sigma(M). Ties go to the smallest M.
SelectionResult select_models(const EstimatorFamily& family, const DistanceCache& cache,
                              const PenaltyDescriptor& penalty, Variant variant);

SelectionResult select_models(const EstimatorFamily& family, const PenaltyDescriptor& penalty,
                              Variant variant);

std::vector<CoefficientDensity> selected_estimates(const EstimatorFamily& family,
                                                   const SelectionResult& result);

}  // namespace nphmm
