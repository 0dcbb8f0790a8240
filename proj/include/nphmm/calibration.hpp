#pragma once

#include <string>
#include <vector>

#include "nphmm/selection.hpp"

namespace nphmm {

/// Selected model as a function of the penalty multiplier for one state.
struct JumpCurve {
  int state = 0;
  std::vector<double> rho_grid;
  std::vector<int> M_hat;
  /// Right end of the grid interval with the largest drop in model index.
  double rho_jump = 0.0;
  /// Size of that drop, counted in grid models (0 when the curve is flat).
  int jump_size = 0;
  bool has_jump = false;
};

/// `points` geometric values over [1e-3, 1e2] times
/// (median pairwise distance) / penalty_shape(M_max). Scale 1 for flat families.
std::vector<double> default_rho_grid(const EstimatorFamily& family, const DistanceCache& cache,
                                     PenaltyKind kind, int points = 64);

/// M_hat_k(rho) for every rho of the grid, selection run with sigma = rho * shape.
JumpCurve jump_curve(const EstimatorFamily& family, const DistanceCache& cache, PenaltyKind kind,
                     int k, const std::vector<double>& rho_grid,
                     Variant variant = Variant::Standard);

enum class CalibrationMode { EachJump, JumpMax, JumpMean };

std::string to_string(CalibrationMode mode);
CalibrationMode calibration_mode_from_string(const std::string& name);

struct Calibration {
  CalibrationMode mode = CalibrationMode::EachJump;
  /// Per-state penalty constants (twice the jump location).
  std::vector<double> rho;
  std::vector<JumpCurve> curves;
  std::vector<std::string> warnings;

  PenaltyDescriptor penalty(PenaltyKind kind, std::int64_t n) const { return {kind, rho, n}; }
};

/// Dimension-jump calibration. States whose curve is flat fall back to rho = 1
/// (EachJump) or are ignored when pooling (JumpMax, JumpMean); a warning is added.
Calibration calibrate(const EstimatorFamily& family, const DistanceCache& cache, PenaltyKind kind,
                      CalibrationMode mode, const std::vector<double>& rho_grid,
                      Variant variant = Variant::Standard);

/// Combines per-state jump locations according to the mode.
std::vector<double> combine_jumps(const std::vector<double>& rho_jump, CalibrationMode mode);

}  // namespace nphmm
