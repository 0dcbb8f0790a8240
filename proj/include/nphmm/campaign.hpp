#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nphmm/calibration.hpp"
#include "nphmm/crossval.hpp"
#include "nphmm/family.hpp"
#include "nphmm/selection.hpp"
#include "nphmm/simulation.hpp"

namespace nphmm {

/// Monte Carlo benchmark: simulate, estimate the spectral family, calibrate,
/// select and score against the truth for every (n, rep).
struct CampaignConfig {
  std::vector<std::int64_t> n_grid{50000, 100000, 200000, 400000, 800000};
  int reps = 10;
  int m = 20;
  int M_min = 3;
  int M_max = 300;
  std::vector<std::string> emissions = benchmark_emissions();
  Eigen::MatrixXd Q = benchmark_transition();
  std::vector<Variant> variants{Variant::Standard};
  std::vector<CalibrationMode> calibrations{CalibrationMode::EachJump};
  bool cross_validation = false;
  int folds = 10;
  int gap = 30;
  int rho_points = 64;
  std::uint64_t seed = 1;
  int threads = 1;
  int quadrature_points = kDefaultQuadraturePoints;

  void validate() const;
};

struct ResultRow {
  std::string method;
  std::string variant;
  std::string calibration;
  std::int64_t n = 0;
  int rep = 0;
  /// Truth state index.
  int state = 0;
  int M_selected = 0;
  double l2_error = 0.0;
  double oracle_error = 0.0;
  int oracle_M = 0;
};

struct ReplicationOutput {
  std::vector<ResultRow> rows;
  EstimatorFamily family;
  /// Truth state of each family column.
  std::vector<int> truth_state;
  /// One entry per (variant, calibration) pair, in config order.
  std::vector<Calibration> calibrations;
  std::vector<SelectionResult> selections;
  double moment_seconds = 0.0;
  double spectral_seconds = 0.0;
  double selection_seconds = 0.0;
  double cv_seconds = 0.0;
};

std::uint64_t replication_seed(std::uint64_t seed, std::int64_t n, int rep);

ReplicationOutput run_replication(const CampaignConfig& config, const GroundTruth& truth,
                                  std::int64_t n, int rep);

using ProgressFn = std::function<void(std::int64_t n, int rep)>;

std::vector<ResultRow> run_campaign(const CampaignConfig& config, const ProgressFn& progress = {});

}  // namespace nphmm
