#include "nphmm/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nphmm/errors.hpp"

namespace nphmm {

std::vector<double> default_rho_grid(const EstimatorFamily& family, const DistanceCache& cache,
                                     PenaltyKind kind, int points) {
  require(points >= 2, ErrorKind::InvalidArgument, "rho grid needs at least two points");
  double scale = cache.median_pairwise() / penalty_shape(kind, family.model_grid.back(), family.n);
  if (!(scale > 0.0) || !std::isfinite(scale)) scale = 1.0;
  std::vector<double> grid(points);
  const double lo = std::log(1e-3), hi = std::log(1e2);
  for (int i = 0; i < points; ++i) {
    grid[i] = scale * std::exp(lo + (hi - lo) * i / (points - 1));
  }
  return grid;
}

JumpCurve jump_curve(const EstimatorFamily& family, const DistanceCache& cache, PenaltyKind kind,
                     int k, const std::vector<double>& rho_grid, Variant variant) {
  require(!rho_grid.empty(), ErrorKind::InvalidArgument, "empty rho grid");
  for (std::size_t i = 0; i < rho_grid.size(); ++i) {
    require(rho_grid[i] > 0.0 && (i == 0 || rho_grid[i] > rho_grid[i - 1]),
            ErrorKind::InvalidArgument, "rho grid must be positive and increasing");
  }
  require(k >= 0 && k < family.K, ErrorKind::InvalidArgument, "state index out of range");
  JumpCurve curve;
  curve.state = k;
  curve.rho_grid = rho_grid;
  std::vector<int> index;
  for (double rho : rho_grid) {
    PenaltyDescriptor penalty{kind, std::vector<double>(family.K, rho), family.n};
    const Eigen::VectorXd sigma = penalty.sigma_curve(k, family.model_grid);
    const Eigen::VectorXd A = compute_A(cache, k, sigma, variant);
    const Eigen::VectorXd crit = variant == Variant::Max ? Eigen::VectorXd(A + sigma)
                                                          : Eigen::VectorXd(A + 2.0 * sigma);
    const int i = argmin_first(crit);
    index.push_back(i);
    curve.M_hat.push_back(family.model_grid[i]);
  }
  curve.rho_jump = rho_grid.front();
  for (std::size_t i = 0; i + 1 < index.size(); ++i) {
    const int drop = index[i] - index[i + 1];
    if (drop > curve.jump_size) {
      curve.jump_size = drop;
      curve.rho_jump = rho_grid[i + 1];
    }
  }
  curve.has_jump = curve.jump_size > 0;
  return curve;
}

std::string to_string(CalibrationMode mode) {
  switch (mode) {
    case CalibrationMode::EachJump: return "eachjump";
    case CalibrationMode::JumpMax: return "jumpmax";
    case CalibrationMode::JumpMean: return "jumpmean";
  }
  return "eachjump";
}

CalibrationMode calibration_mode_from_string(const std::string& name) {
  if (name == "eachjump") return CalibrationMode::EachJump;
  if (name == "jumpmax") return CalibrationMode::JumpMax;
  if (name == "jumpmean") return CalibrationMode::JumpMean;
  fail(ErrorKind::InvalidArgument, "unknown calibration mode '" + name + "'");
}

std::vector<double> combine_jumps(const std::vector<double>& rho_jump, CalibrationMode mode) {
  require(!rho_jump.empty(), ErrorKind::InvalidArgument, "no jump locations");
  std::vector<double> out(rho_jump.size());
  switch (mode) {
    case CalibrationMode::EachJump:
      for (std::size_t k = 0; k < rho_jump.size(); ++k) out[k] = 2.0 * rho_jump[k];
      break;
    case CalibrationMode::JumpMax:
      std::fill(out.begin(), out.end(), 2.0 * *std::max_element(rho_jump.begin(), rho_jump.end()));
      break;
    case CalibrationMode::JumpMean:
      std::fill(out.begin(), out.end(),
                2.0 * std::accumulate(rho_jump.begin(), rho_jump.end(), 0.0) / rho_jump.size());
      break;
  }
  return out;
}

Calibration calibrate(const EstimatorFamily& family, const DistanceCache& cache, PenaltyKind kind,
                      CalibrationMode mode, const std::vector<double>& rho_grid, Variant variant) {
  Calibration out;
  out.mode = mode;
  std::vector<double> jumps;
  for (int k = 0; k < family.K; ++k) {
    out.curves.push_back(jump_curve(family, cache, kind, k, rho_grid, variant));
    if (out.curves.back().has_jump) {
      jumps.push_back(out.curves.back().rho_jump);
    } else {
      out.warnings.push_back("state " + std::to_string(k) + ": no dimension jump on the rho grid");
    }
  }
  if (mode == CalibrationMode::EachJump) {
    for (const auto& c : out.curves) out.rho.push_back(c.has_jump ? 2.0 * c.rho_jump : 1.0);
  } else if (jumps.empty()) {
    out.rho.assign(family.K, 1.0);
  } else {
    out.rho.assign(family.K, combine_jumps(jumps, mode).front());
  }
  return out;
}

}  // namespace nphmm
