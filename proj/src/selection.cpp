#include "nphmm/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nphmm/errors.hpp"
#include "nphmm/parallel.hpp"

namespace nphmm {

int default_reference_model(const std::vector<int>& model_grid, int K) {
  require(!model_grid.empty(), ErrorKind::InvalidArgument, "empty model grid");
  for (int M : model_grid) {
    if (M >= 4 * K) return M;
  }
  return model_grid.back();
}

std::vector<int> alignment_permutation(const Eigen::MatrixXd& O, const Eigen::MatrixXd& O_ref) {
  const int K = static_cast<int>(O.cols());
  require(O_ref.cols() == K, ErrorKind::InvalidArgument, "alignment needs equal state counts");
  require(K <= 8, ErrorKind::InvalidArgument, "alignment is brute force and limited to K <= 8");
  // cost(j, k) = |f_j - f_ref,k|
  Eigen::MatrixXd cost(K, K);
  for (int j = 0; j < K; ++j)
    for (int k = 0; k < K; ++k) cost(j, k) = l2_distance(O.col(j), O_ref.col(k));
  std::vector<int> best;
  double best_value = std::numeric_limits<double>::infinity();
  for (const auto& perm : all_permutations(K)) {
    double value = 0.0;
    for (int k = 0; k < K; ++k) value = std::max(value, cost(perm[k], k));
    if (value < best_value) {
      best_value = value;
      best = perm;
    }
  }
  if (best.empty()) best = all_permutations(K).front();  // non-finite costs
  return best;
}

EstimatorFamily align_family(const EstimatorFamily& family, int reference_model) {
  family.validate();
  const int ref = family.index_of(reference_model);
  EstimatorFamily out = family;
  const Eigen::MatrixXd& O_ref = family.models[ref].O;
  for (std::size_t i = 0; i < family.models.size(); ++i) {
    if (static_cast<int>(i) == ref) continue;
    const auto& e = family.models[i];
    const auto perm = alignment_permutation(e.O, O_ref);
    const auto p = permute_states(e.params(family.basis.kind()), perm);
    out.models[i].pi = p.pi;
    out.models[i].Q = p.Q;
    out.models[i].O = p.O;
  }
  out.aligned = true;
  out.reference_model = reference_model;
  return out;
}

std::string to_string(PenaltyKind kind) { return kind == PenaltyKind::Spectral ? "spectral" : "ls"; }

std::string to_string(Variant variant) {
  switch (variant) {
    case Variant::Standard: return "standard";
    case Variant::Pos: return "pos";
    case Variant::Max: return "max";
  }
  return "standard";
}

PenaltyKind penalty_kind_from_string(const std::string& name) {
  if (name == "spectral") return PenaltyKind::Spectral;
  if (name == "ls") return PenaltyKind::Ls;
  fail(ErrorKind::InvalidArgument, "unknown penalty kind '" + name + "'");
}

Variant variant_from_string(const std::string& name) {
  if (name == "standard") return Variant::Standard;
  if (name == "pos") return Variant::Pos;
  if (name == "max") return Variant::Max;
  fail(ErrorKind::InvalidArgument, "unknown variant '" + name + "'");
}

double penalty_shape(PenaltyKind kind, int M, std::int64_t n) {
  require(M >= 1 && n >= 3, ErrorKind::InvalidArgument, "penalty_shape needs M >= 1 and n >= 3");
  const double ln = std::log(static_cast<double>(n));
  const double logs = kind == PenaltyKind::Spectral ? ln * ln * ln * ln : ln;
  return std::sqrt(static_cast<double>(M) * logs / static_cast<double>(n));
}

PenaltyKind penalty_kind_for(Method method) {
  return method == Method::Spectral ? PenaltyKind::Spectral : PenaltyKind::Ls;
}

Eigen::VectorXd PenaltyDescriptor::sigma_curve(int k, const std::vector<int>& model_grid) const {
  require(k >= 0 && k < static_cast<int>(rho.size()), ErrorKind::InvalidArgument,
          "no penalty constant for this state");
  Eigen::VectorXd out(model_grid.size());
  for (std::size_t i = 0; i < model_grid.size(); ++i) out(i) = sigma(k, model_grid[i]);
  return out;
}

DistanceCache::DistanceCache(const EstimatorFamily& family, int threads)
    : size_(static_cast<int>(family.models.size())), dist_(family.K) {
  family.validate();
  const std::size_t pairs = static_cast<std::size_t>(size_) * (size_ + 1) / 2;
  for (auto& d : dist_) d.assign(pairs, 0.0);
  parallel_for(static_cast<std::size_t>(size_), threads, [&](std::size_t ii) {
    const int i = static_cast<int>(ii);
    for (int k = 0; k < family.K; ++k) {
      const auto a = family.models[i].O.col(k);
      for (int j = i + 1; j < size_; ++j) {
        dist_[k][offset(i, j)] = l2_distance(a, family.models[j].O.col(k));
      }
    }
  });
}

namespace {

std::vector<double> off_diagonal(const std::vector<std::vector<double>>& dist, int size) {
  std::vector<double> values;
  for (const auto& d : dist) {
    std::size_t pos = 0;
    for (int i = 0; i < size; ++i) {
      for (int j = i; j < size; ++j, ++pos) {
        if (j > i) values.push_back(d[pos]);
      }
    }
  }
  return values;
}

}  // namespace

double DistanceCache::median_pairwise() const {
  auto values = off_diagonal(dist_, size_);
  if (values.empty()) return 0.0;
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  if (values.size() % 2 == 1) return values[mid];
  const double upper = values[mid];
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

double DistanceCache::max_pairwise() const {
  const auto values = off_diagonal(dist_, size_);
  return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
}

Eigen::VectorXd compute_A(const DistanceCache& cache, int k, const Eigen::VectorXd& sigma,
                          Variant variant) {
  const int G = cache.models();
  require(k >= 0 && k < cache.states(), ErrorKind::InvalidArgument, "state index out of range");
  require(sigma.size() == G, ErrorKind::InvalidArgument, "one penalty value per model expected");
  for (int i = 1; i < G; ++i) {
    require(sigma(i) >= sigma(i - 1), ErrorKind::Precondition, "penalty must be nondecreasing");
  }
  Eigen::VectorXd A(G);
  switch (variant) {
    case Variant::Standard: {
      // Models M' <= M contribute -sigma(M'); keep their running maximum.
      double prefix = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < G; ++i) {
        prefix = std::max(prefix, -sigma(i));
        double a = prefix;
        for (int j = i + 1; j < G; ++j) a = std::max(a, cache(k, j, i) - sigma(j));
        A(i) = a;
      }
      break;
    }
    case Variant::Pos:
      for (int i = 0; i < G; ++i) {
        double a = 0.0;
        for (int j = i; j < G; ++j) a = std::max(a, cache(k, j, i) - sigma(j));
        A(i) = a;
      }
      break;
    case Variant::Max:
      for (int i = 0; i < G; ++i) A(i) = cache(k, G - 1, i);
      break;
  }
  return A;
}

Eigen::VectorXd compute_A(const EstimatorFamily& family, int k, const Eigen::VectorXd& sigma,
                          Variant variant) {
  require(family.aligned, ErrorKind::Precondition, "selection needs an aligned family");
  return compute_A(DistanceCache(family), k, sigma, variant);
}

int argmin_first(const Eigen::Ref<const Eigen::VectorXd>& values) {
  require(values.size() > 0, ErrorKind::InvalidArgument, "argmin of an empty vector");
  int best = 0;
  for (Eigen::Index i = 1; i < values.size(); ++i) {
    if (values(i) < values(best)) best = static_cast<int>(i);
  }
  return best;
}

SelectionResult select_models(const EstimatorFamily& family, const DistanceCache& cache,
                              const PenaltyDescriptor& penalty, Variant variant) {
  require(family.aligned, ErrorKind::Precondition, "selection needs an aligned family");
  require(cache.models() == static_cast<int>(family.models.size()) && cache.states() == family.K,
          ErrorKind::InvalidArgument, "distance cache does not match the family");
  require(static_cast<int>(penalty.rho.size()) == family.K, ErrorKind::InvalidArgument,
          "one penalty constant per state expected");
  SelectionResult result;
  result.variant = variant;
  result.penalty = penalty;
  result.model_grid = family.model_grid;
  for (int k = 0; k < family.K; ++k) {
    const Eigen::VectorXd sigma = penalty.sigma_curve(k, family.model_grid);
    StateSelection s;
    s.A = compute_A(cache, k, sigma, variant);
    s.criterion = variant == Variant::Max ? Eigen::VectorXd(s.A + sigma)
                                          : Eigen::VectorXd(s.A + 2.0 * sigma);
    s.index = argmin_first(s.criterion);
    s.M_hat = family.model_grid[s.index];
    result.states.push_back(std::move(s));
  }
  return result;
}

SelectionResult select_models(const EstimatorFamily& family, const PenaltyDescriptor& penalty,
                              Variant variant) {
  require(family.aligned, ErrorKind::Precondition, "selection needs an aligned family");
  return select_models(family, DistanceCache(family), penalty, variant);
}

std::vector<CoefficientDensity> selected_estimates(const EstimatorFamily& family,
                                                   const SelectionResult& result) {
  require(static_cast<int>(result.states.size()) == family.K, ErrorKind::InvalidArgument,
          "selection does not match the family");
  std::vector<CoefficientDensity> out;
  for (int k = 0; k < family.K; ++k) {
    out.push_back(family.estimate(family.index_of(result.states[k].M_hat), k));
  }
  return out;
}

}  // namespace nphmm
