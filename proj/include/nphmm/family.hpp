#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nphmm/basis.hpp"
#include "nphmm/leastsq.hpp"
#include "nphmm/moments.hpp"
#include "nphmm/params.hpp"
#include "nphmm/spectral.hpp"

namespace nphmm {

enum class Method { Spectral, Ls };

std::string to_string(Method method);
Method method_from_string(const std::string& name);

struct ModelEstimate {
  int M = 0;
  Eigen::VectorXd pi;
  Eigen::MatrixXd Q;
  Eigen::MatrixXd O;
  /// Spectral only; +inf for K = 1.
  double separation_score = std::numeric_limits<double>::quiet_NaN();
  int attempt_index = -1;
  /// LS only: final value of the contrast.
  double criterion = std::numeric_limits<double>::quiet_NaN();

  HmmParams params(BasisKind kind) const { return {kind, pi, Q, O}; }
};

/// Emission estimates for every model of a grid, all sharing the same labels
/// once aligned.
struct EstimatorFamily {
  Basis basis{BasisKind::Trig, 1};
  std::vector<int> model_grid;
  std::vector<ModelEstimate> models;  // models[i].M == model_grid[i]
  std::int64_t n = 0;
  int K = 0;
  Method method = Method::Spectral;
  bool aligned = false;
  int reference_model = 0;
  /// Models of the requested grid for which estimation failed, with the reason.
  std::vector<std::pair<int, std::string>> skipped;

  int index_of(int M) const;
  const ModelEstimate& model(int M) const { return models[index_of(M)]; }
  CoefficientDensity estimate(std::size_t index, int k) const {
    return {basis.kind(), models[index].O.col(k)};
  }
  /// Structural checks: strictly increasing grid, consistent shapes.
  void validate() const;
};

/// {lo, lo + 1, ..., hi}.
std::vector<int> model_range(int lo, int hi);

struct FamilyOptions {
  /// Row dimension of the moment tensors (capped at M for small models).
  int m = 20;
  /// Joint-diagonalization attempts; 0 means ceil(2 log n + 2 log M).
  int retries = 0;
  std::uint64_t seed = 0;
  int threads = 1;
  SpectralOptions spectral;
  LsOptions ls;
  double coeff_norm_bound = 10.0;
  /// Align labels across models after estimation.
  bool align = true;
  /// Alignment reference; default is the smallest grid model with M >= 4K.
  std::optional<int> reference_model;
};

/// Spectral estimates for every M in the grid from moments accumulated at
/// (m, max grid M). Models where the estimator fails are listed in `skipped`.
EstimatorFamily estimate_spectral_family(const MomentTensors& tensors, const Basis& basis,
                                         const std::vector<int>& model_grid, int K,
                                         const FamilyOptions& options = {});

EstimatorFamily estimate_spectral_family(std::span<const double> observations, const Basis& basis,
                                         const std::vector<int>& model_grid, int K,
                                         const FamilyOptions& options = {});

/// Least-squares estimates, each model warm-started by its spectral estimate.
/// Builds the full M_max^3 tensor, so intended for moderate M_max.
EstimatorFamily estimate_ls_family(std::span<const double> observations, const Basis& basis,
                                   const std::vector<int>& model_grid, int K,
                                   const FamilyOptions& options = {});

}  // namespace nphmm
