#include "nphmm/campaign.hpp"

#include <chrono>
#include <mutex>

#include "nphmm/errors.hpp"
#include "nphmm/parallel.hpp"
#include "nphmm/rng.hpp"

namespace nphmm {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

void CampaignConfig::validate() const {
  require(!n_grid.empty() && reps >= 1, ErrorKind::InvalidArgument, "campaign needs n values and reps");
  for (auto n : n_grid) require(n >= 3, ErrorKind::InvalidArgument, "sample sizes must be >= 3");
  require(m >= 1 && M_min >= 1 && M_max >= M_min, ErrorKind::InvalidArgument,
          "campaign needs 1 <= M_min <= M_max");
  require(static_cast<int>(emissions.size()) == Q.rows() && Q.rows() == Q.cols(),
          ErrorKind::InvalidArgument, "one emission per state of Q expected");
  require(M_min >= static_cast<int>(emissions.size()), ErrorKind::InvalidArgument,
          "M_min must be at least the number of states");
  require(!variants.empty() && !calibrations.empty(), ErrorKind::InvalidArgument,
          "campaign needs at least one variant and one calibration mode");
  require(rho_points >= 2, ErrorKind::InvalidArgument, "rho grid needs at least two points");
}

std::uint64_t replication_seed(std::uint64_t seed, std::int64_t n, int rep) {
  return derive_seed(derive_seed(seed, static_cast<std::uint64_t>(n)), static_cast<std::uint64_t>(rep));
}

ReplicationOutput run_replication(const CampaignConfig& config, const GroundTruth& truth,
                                  std::int64_t n, int rep) {
  config.validate();
  const int K = truth.K();
  const Basis basis(BasisKind::Trig, config.M_max);
  require(truth.coeffs.rows() >= config.M_max, ErrorKind::InvalidArgument,
          "ground truth projections are shorter than M_max");
  const std::uint64_t seed = replication_seed(config.seed, n, rep);
  const auto obs = sample_hmm(truth, n, seed);

  ReplicationOutput out;
  auto t0 = std::chrono::steady_clock::now();
  const int m = std::min(config.m, config.M_max);
  const auto tensors = accumulate_moments(obs, basis, m, config.M_max);
  out.moment_seconds = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  FamilyOptions options;
  options.m = config.m;
  options.seed = derive_seed(seed, 1);
  out.family = estimate_spectral_family(tensors, basis, model_range(config.M_min, config.M_max), K,
                                        options);
  out.spectral_seconds = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  const DistanceCache cache(out.family);
  const auto rho_grid = default_rho_grid(out.family, cache, PenaltyKind::Spectral, config.rho_points);
  const auto reports = error_report(out.family, truth);
  for (const auto& r : reports) out.truth_state.push_back(r.truth_state);
  for (Variant variant : config.variants) {
    for (CalibrationMode mode : config.calibrations) {
      auto cal = calibrate(out.family, cache, PenaltyKind::Spectral, mode, rho_grid, variant);
      auto sel = select_models(out.family, cache, cal.penalty(PenaltyKind::Spectral, out.family.n),
                               variant);
      for (int k = 0; k < K; ++k) {
        const auto& r = reports[k];
        ResultRow row;
        row.method = "spectral";
        row.variant = to_string(variant);
        row.calibration = to_string(mode);
        row.n = n;
        row.rep = rep;
        row.state = r.truth_state;
        row.M_selected = sel.states[k].M_hat;
        row.l2_error = r.error_curve(sel.states[k].index);
        row.oracle_error = r.oracle_error;
        row.oracle_M = r.oracle_M;
        out.rows.push_back(row);
      }
      out.calibrations.push_back(std::move(cal));
      out.selections.push_back(std::move(sel));
    }
  }
  out.selection_seconds = seconds_since(t0);

  if (config.cross_validation) {
    t0 = std::chrono::steady_clock::now();
    CvOptions cv;
    cv.folds = config.folds;
    cv.gap = config.gap;
    cv.m = config.m;
    cv.seed = derive_seed(seed, 2);
    const auto cvr = cv_select(obs, basis, model_range(config.M_min, config.M_max), K, cv);
    const int index = out.family.index_of(cvr.M_hat);
    for (int k = 0; k < K; ++k) {
      const auto& r = reports[k];
      ResultRow row;
      row.method = "spectral";
      row.variant = "cv";
      row.calibration = "none";
      row.n = n;
      row.rep = rep;
      row.state = r.truth_state;
      row.M_selected = cvr.M_hat;
      row.l2_error = r.error_curve(index);
      row.oracle_error = r.oracle_error;
      row.oracle_M = r.oracle_M;
      out.rows.push_back(row);
    }
    out.cv_seconds = seconds_since(t0);
  }
  return out;
}

std::vector<ResultRow> run_campaign(const CampaignConfig& config, const ProgressFn& progress) {
  config.validate();
  const auto truth = GroundTruth::make(config.emissions, config.Q, Basis(BasisKind::Trig, config.M_max),
                                       config.quadrature_points);
  std::vector<std::pair<std::int64_t, int>> jobs;
  for (auto n : config.n_grid)
    for (int rep = 0; rep < config.reps; ++rep) jobs.emplace_back(n, rep);
  std::vector<std::vector<ResultRow>> slots(jobs.size());
  std::mutex progress_mutex;
  parallel_for(jobs.size(), config.threads, [&](std::size_t i) {
    slots[i] = run_replication(config, truth, jobs[i].first, jobs[i].second).rows;
    if (progress) {
      std::lock_guard<std::mutex> lock(progress_mutex);
      progress(jobs[i].first, jobs[i].second);
    }
  });
  std::vector<ResultRow> rows;
  for (auto& s : slots) rows.insert(rows.end(), s.begin(), s.end());
  return rows;
}

}  // namespace nphmm
