#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "nphmm/family.hpp"
#include "nphmm/params.hpp"
#include "nphmm/rng.hpp"
#include "nphmm/simulation.hpp"

namespace testing {

// Diagonally dominant transition matrix: invertible with a unique stationary law.
inline Eigen::MatrixXd random_transition(int K, nphmm::Rng& rng) {
  Eigen::MatrixXd Q(K, K);
  for (int i = 0; i < K; ++i) {
    for (int j = 0; j < K; ++j) Q(i, j) = 0.1 + rng.uniform();
    Q.row(i) /= Q.row(i).sum();
    Q.row(i) *= 0.4;
    Q(i, i) += 0.6;
  }
  return Q;
}

// K emissions with unit mass and random components on trig functions 2..span.
inline nphmm::HmmParams random_hmm(int K, int M, std::uint64_t seed, int span = 8,
                                   double scale = 0.5) {
  nphmm::Rng rng(seed);
  nphmm::HmmParams p;
  p.Q = random_transition(K, rng);
  p.pi = nphmm::stationary_distribution(p.Q);
  p.O = Eigen::MatrixXd::Zero(M, K);
  for (int k = 0; k < K; ++k) {
    p.O(0, k) = 1.0;
    for (int a = 1; a < std::min(span, M); ++a) p.O(a, k) = scale * rng.normal();
  }
  return p;
}

// Emissions 1 + c cos/sin terms that stay positive: valid densities living in the
// first `dim` trig functions.
inline nphmm::HmmParams smooth_hmm(int M) {
  nphmm::HmmParams p;
  p.Q = nphmm::benchmark_transition();
  p.pi = nphmm::stationary_distribution(p.Q);
  p.O = Eigen::MatrixXd::Zero(M, 3);
  p.O(0, 0) = p.O(0, 1) = p.O(0, 2) = 1.0;
  p.O(1, 0) = 0.5;
  p.O(2, 1) = 0.45;
  p.O(3, 1) = 0.2;
  p.O(4, 2) = -0.4;
  p.O(1, 2) = 0.15;
  return p;
}

// Aligned family over `grid` whose model M has emission matrix emissions(M) (M x K).
inline nphmm::EstimatorFamily make_family(const std::vector<int>& grid, int K,
                                          const std::function<Eigen::MatrixXd(int)>& emissions,
                                          std::int64_t n = 100000) {
  nphmm::EstimatorFamily f;
  f.basis = nphmm::Basis(nphmm::BasisKind::Trig, grid.back());
  f.model_grid = grid;
  f.n = n;
  f.K = K;
  f.aligned = true;
  f.reference_model = grid.front();
  for (int M : grid) {
    nphmm::ModelEstimate e;
    e.M = M;
    e.pi = Eigen::VectorXd::Constant(K, 1.0 / K);
    e.Q = Eigen::MatrixXd::Constant(K, K, 1.0 / K);
    e.O = emissions(M);
    f.models.push_back(e);
  }
  return f;
}

// Family where model M holds the first M coefficients of fixed random vectors.
inline nphmm::EstimatorFamily nested_family(const std::vector<int>& grid, int K, std::uint64_t seed,
                                            double decay = 1.0) {
  nphmm::Rng rng(seed);
  const int top = grid.back();
  Eigen::MatrixXd full(top, K);
  for (int a = 0; a < top; ++a)
    for (int k = 0; k < K; ++k) full(a, k) = a == 0 ? 1.0 : rng.normal() / std::pow(a, decay);
  // Per-model noise so that estimates are not exact truncations.
  std::vector<Eigen::MatrixXd> noise;
  for (int M : grid) {
    Eigen::MatrixXd z(M, K);
    for (int i = 0; i < z.size(); ++i) z(i) = 0.02 * rng.normal();
    noise.push_back(z);
  }
  int idx = 0;
  return make_family(grid, K, [&](int M) -> Eigen::MatrixXd {
    return full.topRows(M) + noise[idx++];
  });
}

// Rejection sampler for a trig-polynomial density bounded by `ceiling`.
class TrigSampler : public nphmm::EmissionSampler {
 public:
  TrigSampler(nphmm::CoefficientDensity f, nphmm::Basis basis, double ceiling)
      : f_(std::move(f)), basis_(std::move(basis)), ceiling_(ceiling) {}
  double draw(nphmm::Rng& rng) const override {
    for (;;) {
      const double y = rng.uniform();
      if (rng.uniform() * ceiling_ <= f_.value(basis_, y)) return y;
    }
  }

 private:
  nphmm::CoefficientDensity f_;
  nphmm::Basis basis_;
  double ceiling_;
};

// Ground truth whose emissions are the columns of params.O (exact in dimension O.rows()).
inline nphmm::GroundTruth trig_truth(const nphmm::HmmParams& params, int max_dim) {
  nphmm::GroundTruth t;
  const int K = params.K();
  t.Q = params.Q;
  t.pi = nphmm::stationary_distribution(params.Q);
  t.basis = nphmm::Basis(nphmm::BasisKind::Trig, max_dim);
  t.coeffs = Eigen::MatrixXd::Zero(max_dim, K);
  t.coeffs.topRows(params.dim()) = params.O;
  t.norm2 = params.O.colwise().squaredNorm().transpose();
  for (int k = 0; k < K; ++k) {
    t.names.push_back("trig" + std::to_string(k));
    const nphmm::CoefficientDensity f{nphmm::BasisKind::Trig, params.O.col(k)};
    const nphmm::Basis b = t.basis;
    t.densities.push_back({t.names.back(), [f, b](double y) { return f.value(b, y); }, 0.0, {}});
    t.samplers.push_back(std::make_shared<TrigSampler>(f, b, f.coeffs.cwiseAbs().sum() * std::sqrt(2.0)));
  }
  return t;
}

}  // namespace testing
