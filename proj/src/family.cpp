#include "nphmm/family.hpp"

#include <algorithm>
#include <mutex>

#include "nphmm/errors.hpp"
#include "nphmm/parallel.hpp"
#include "nphmm/rng.hpp"
#include "nphmm/selection.hpp"

namespace nphmm {

std::string to_string(Method method) { return method == Method::Spectral ? "spectral" : "ls"; }

Method method_from_string(const std::string& name) {
  if (name == "spectral") return Method::Spectral;
  if (name == "ls") return Method::Ls;
  fail(ErrorKind::InvalidArgument, "unknown method '" + name + "'");
}

int EstimatorFamily::index_of(int M) const {
  const auto it = std::lower_bound(model_grid.begin(), model_grid.end(), M);
  require(it != model_grid.end() && *it == M, ErrorKind::InvalidArgument,
          "model " + std::to_string(M) + " is not in the family");
  return static_cast<int>(it - model_grid.begin());
}

void EstimatorFamily::validate() const {
  require(!model_grid.empty(), ErrorKind::InvalidArgument, "empty model grid");
  require(models.size() == model_grid.size(), ErrorKind::InvalidArgument,
          "one estimate per grid model expected");
  require(K >= 1, ErrorKind::InvalidArgument, "family needs K >= 1");
  for (std::size_t i = 0; i < model_grid.size(); ++i) {
    require(i == 0 || model_grid[i] > model_grid[i - 1], ErrorKind::InvalidArgument,
            "model grid must be strictly increasing");
    const auto& e = models[i];
    require(e.M == model_grid[i] && e.O.rows() == e.M && e.O.cols() == K && e.pi.size() == K &&
                e.Q.rows() == K && e.Q.cols() == K,
            ErrorKind::InvalidArgument, "inconsistent estimate for model " + std::to_string(e.M));
    require(e.M <= basis.max_dim(), ErrorKind::InvalidArgument, "model exceeds the basis");
  }
}

std::vector<int> model_range(int lo, int hi) {
  require(lo >= 1 && hi >= lo, ErrorKind::InvalidArgument, "model range needs 1 <= lo <= hi");
  std::vector<int> out;
  for (int M = lo; M <= hi; ++M) out.push_back(M);
  return out;
}

namespace {

void check_grid(const std::vector<int>& grid, const Basis& basis, int K) {
  require(!grid.empty(), ErrorKind::InvalidArgument, "empty model grid");
  require(K >= 1, ErrorKind::InvalidArgument, "K must be positive");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    require(grid[i] >= 1 && (i == 0 || grid[i] > grid[i - 1]), ErrorKind::InvalidArgument,
            "model grid must be positive and strictly increasing");
  }
  require(grid.back() <= basis.max_dim(), ErrorKind::InvalidArgument,
          "largest model exceeds the basis dimension");
}

struct Slot {
  std::optional<ModelEstimate> estimate;
  std::string error;
};

EstimatorFamily collect(const Basis& basis, const std::vector<int>& grid, int K, std::int64_t n,
                        Method method, std::vector<Slot>& slots, const FamilyOptions& options) {
  EstimatorFamily family;
  family.basis = basis;
  family.n = n;
  family.K = K;
  family.method = method;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (slots[i].estimate) {
      family.model_grid.push_back(grid[i]);
      family.models.push_back(std::move(*slots[i].estimate));
    } else {
      family.skipped.emplace_back(grid[i], slots[i].error);
    }
  }
  require(!family.models.empty(), ErrorKind::DiagonalizationFailure,
          "estimation failed for every model of the grid");
  family.reference_model = default_reference_model(family.model_grid, K);
  if (options.reference_model) {
    family.index_of(*options.reference_model);
    family.reference_model = *options.reference_model;
  }
  if (options.align) family = align_family(family, family.reference_model);
  return family;
}

}  // namespace

EstimatorFamily estimate_spectral_family(const MomentTensors& tensors, const Basis& basis,
                                         const std::vector<int>& model_grid, int K,
                                         const FamilyOptions& options) {
  check_grid(model_grid, basis, K);
  require(tensors.kind == basis.kind(), ErrorKind::InvalidArgument, "moments use another basis");
  require(model_grid.back() <= tensors.M, ErrorKind::InvalidArgument,
          "moments were accumulated for a smaller M");
  std::vector<Slot> slots(model_grid.size());
  parallel_for(model_grid.size(), options.threads, [&](std::size_t i) {
    const int M = model_grid[i];
    const int m = std::min({options.m, M, tensors.m});
    try {
      require(K <= m, ErrorKind::InvalidArgument, "model smaller than K");
      const int r = options.retries > 0 ? options.retries : default_retries(tensors.n, M);
      const auto est = spectral_estimate(tensors.restricted(m, M), basis, K, r,
                                         derive_seed(options.seed, static_cast<std::uint64_t>(M)),
                                         options.spectral);
      ModelEstimate e;
      e.M = M;
      e.pi = est.params.pi;
      e.Q = est.params.Q;
      e.O = est.params.O;
      e.separation_score = est.separation_score;
      e.attempt_index = est.attempt_index;
      slots[i].estimate = std::move(e);
    } catch (const Error& err) {
      slots[i].error = std::string(to_string(err.kind())) + ": " + err.what();
    }
  });
  return collect(basis, model_grid, K, tensors.n, Method::Spectral, slots, options);
}

EstimatorFamily estimate_spectral_family(std::span<const double> observations, const Basis& basis,
                                         const std::vector<int>& model_grid, int K,
                                         const FamilyOptions& options) {
  check_grid(model_grid, basis, K);
  const int M_max = model_grid.back();
  const int m = std::min(options.m, M_max);
  require(m >= 1, ErrorKind::InvalidArgument, "m must be positive");
  const auto tensors = accumulate_moments(observations, basis, m, M_max, options.threads);
  return estimate_spectral_family(tensors, basis, model_grid, K, options);
}

EstimatorFamily estimate_ls_family(std::span<const double> observations, const Basis& basis,
                                   const std::vector<int>& model_grid, int K,
                                   const FamilyOptions& options) {
  check_grid(model_grid, basis, K);
  const int M_max = model_grid.back();
  const auto full = accumulate_moments(observations, basis, M_max, M_max, options.threads);
  std::vector<Slot> slots(model_grid.size());
  parallel_for(model_grid.size(), options.threads, [&](std::size_t i) {
    const int M = model_grid[i];
    try {
      require(K <= M, ErrorKind::InvalidArgument, "model smaller than K");
      const auto tensors = full.restricted(M, M);
      const std::uint64_t seed = derive_seed(options.seed, static_cast<std::uint64_t>(M));
      const int m = std::min(options.m, M);
      const int r = options.retries > 0 ? options.retries : default_retries(full.n, M);
      const auto warm =
          spectral_estimate(tensors.restricted(m, M), basis, K, r, seed, options.spectral);
      LsProblem problem;
      problem.T_full = tensors.T;
      problem.K = K;
      problem.coeff_norm_bound = options.coeff_norm_bound;
      problem.basis = basis;
      problem.n = full.n;
      LsOptions ls = options.ls;
      ls.seed = seed;
      ModelEstimate e;
      e.M = M;
      e.separation_score = warm.separation_score;
      e.attempt_index = warm.attempt_index;
      try {
        const auto fit = ls_estimate(problem, warm.params, ls);
        e.pi = fit.params.pi;
        e.Q = fit.params.Q;
        e.O = fit.params.O;
        e.criterion = fit.criterion;
      } catch (const OptimizationStalled& stalled) {
        // Keep the best iterate; the family records it like any other fit.
        e.pi = stalled.best().pi;
        e.Q = stalled.best().Q;
        e.O = stalled.best().O;
        e.criterion = stalled.criterion();
      }
      slots[i].estimate = std::move(e);
    } catch (const Error& err) {
      slots[i].error = std::string(to_string(err.kind())) + ": " + err.what();
    }
  });
  return collect(basis, model_grid, K, full.n, Method::Ls, slots, options);
}

}  // namespace nphmm
