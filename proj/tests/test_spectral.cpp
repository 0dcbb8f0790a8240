#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "helpers.hpp"
#include "nphmm/errors.hpp"
#include "nphmm/moments.hpp"
#include "nphmm/simplex.hpp"
#include "nphmm/simulation.hpp"
#include "nphmm/spectral.hpp"

using namespace nphmm;

namespace {

// Brute-force projection of a 2-vector: scan the segment {(t, 1 - t)}.
Eigen::Vector2d grid_project2(const Eigen::Vector2d& v) {
  double best_t = 0.0, best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 1000000; ++i) {
    const double t = i * 1e-6;
    const double d = (v - Eigen::Vector2d(t, 1.0 - t)).squaredNorm();
    if (d < best) {
      best = d;
      best_t = t;
    }
  }
  return {best_t, 1.0 - best_t};
}

void check_kkt(const Eigen::VectorXd& v, const Eigen::VectorXd& x) {
  CHECK(x.minCoeff() >= 0.0);
  CHECK(x.sum() == doctest::Approx(1.0).epsilon(1e-12));
  // x = max(v - tau, 0) for one threshold tau.
  double tau = std::numeric_limits<double>::quiet_NaN();
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x(i) > 0.0) tau = v(i) - x(i);
  REQUIRE(std::isfinite(tau));
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x(i) > 0.0) CHECK(v(i) - x(i) == doctest::Approx(tau).epsilon(1e-12));
    else CHECK(v(i) <= tau + 1e-12);
  }
}

bool in_simplex(const Eigen::VectorXd& x) {
  return x.minCoeff() >= 0.0 && std::abs(x.sum() - 1.0) < 1e-12;
}

}  // namespace

TEST_CASE("simplex_project") {
  const Eigen::Vector2d a = simplex_project(Eigen::Vector2d(0.5, 0.8));
  CHECK(a(0) == doctest::Approx(0.35));
  CHECK(a(1) == doctest::Approx(0.65));
  CHECK((a - grid_project2({0.5, 0.8})).norm() < 2e-6);
  const Eigen::Vector2d b = simplex_project(Eigen::Vector2d(2.0, -1.0));
  CHECK(b == Eigen::Vector2d(1.0, 0.0));
  CHECK((b - grid_project2({2.0, -1.0})).norm() < 2e-6);
  const Eigen::Vector3d c(0.2, 0.3, 0.5);
  CHECK((simplex_project(c) - c).norm() < 1e-15);

  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd v(6);
    for (int i = 0; i < 6; ++i) v(i) = 2.0 * rng.normal();
    const auto x = simplex_project(v);
    check_kkt(v, x);
    CHECK((simplex_project(x) - x).norm() < 1e-14);
  }

  const Eigen::Vector3d w(1.0, 2.0, 0.5);
  const Eigen::VectorXd p = weighted_simplex_project(Eigen::Vector3d(0.3, -0.2, 1.4), w);
  CHECK(p.minCoeff() >= 0.0);
  CHECK(w.dot(p) == doctest::Approx(1.0));
}

TEST_CASE("transition_project") {
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(3, 3);
  CHECK(transition_project(I) == I);
  Eigen::MatrixXd A(2, 2);
  A << 2.0, -1.0, 0.3, 0.9;
  const auto P = transition_project(A);
  CHECK(P.row(0) == Eigen::RowVector2d(1.0, 0.0));
  CHECK(P(1, 0) == doctest::Approx(0.2));
  Rng rng(5);
  Eigen::MatrixXd R(4, 4);
  for (int i = 0; i < 16; ++i) R(i) = rng.normal();
  const auto T = transition_project(R);
  for (int i = 0; i < 4; ++i) CHECK(in_simplex(T.row(i).transpose()));
}

TEST_CASE("haar_orthogonal and retries") {
  for (int K : {1, 2, 5}) {
    const auto H = haar_orthogonal(K, 17);
    CHECK((H.transpose() * H - Eigen::MatrixXd::Identity(K, K)).norm() < 1e-12);
    CHECK(haar_orthogonal(K, 17) == H);
  }
  CHECK(default_retries(200000, 50) == static_cast<int>(std::ceil(2 * std::log(2e5) + 2 * std::log(50.0))));
  CHECK(default_retries(1, 1) == 1);
}

TEST_CASE("exact recovery from population moments") {
  const auto truth = testing::smooth_hmm(8);
  const auto pop = population_moments(truth, 8, 8);
  const Basis basis(BasisKind::Trig, 8);
  const auto est = spectral_estimate(pop, basis, 3, 10, 42);
  CHECK(d_perm(est.params, truth) <= 1e-8);
  CHECK(est.separation_score > 0.0);

  for (int K = 1; K <= 4; ++K) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const int M = 10;
      const auto hmm = testing::random_hmm(K, M, seed * 100 + K);
      const auto t = population_moments(hmm, 8, M);
      const auto e = spectral_estimate(t, Basis(BasisKind::Trig, M), K, 20, seed);
      CHECK(d_perm(e.params, hmm) <= 1e-6);
    }
  }
}

TEST_CASE("one state") {
  auto hmm = testing::random_hmm(1, 6, 8);
  const auto t = population_moments(hmm, 4, 6);
  const auto e = spectral_estimate(t, Basis(BasisKind::Trig, 6), 1, 3, 1);
  CHECK(e.params.pi == Eigen::VectorXd::Ones(1));
  CHECK(e.params.Q == Eigen::MatrixXd::Ones(1, 1));
  CHECK((e.params.O - hmm.O).norm() < 1e-10);
  CHECK(std::isinf(e.separation_score));
}

TEST_CASE("determinism and retained attempt") {
  const auto truth = GroundTruth::benchmark(30);
  const auto y = sample_hmm(truth, 20000, 6);
  const auto t = accumulate_moments(y, truth.basis, 10, 30);
  const auto a = spectral_estimate(t, truth.basis, 3, 12, 99);
  const auto b = spectral_estimate(t, truth.basis, 3, 12, 99);
  CHECK(a.params.O == b.params.O);
  CHECK(a.params.Q == b.params.Q);
  CHECK(a.attempt_index == b.attempt_index);
  CHECK(in_simplex(a.params.pi));
  for (int k = 0; k < 3; ++k) CHECK(in_simplex(a.params.Q.row(k).transpose()));
  // With a single attempt the score is that attempt's; more attempts can only help.
  double single_best = -1.0;
  for (int r = 1; r <= 12; ++r) {
    const auto s = spectral_estimate(t, truth.basis, 3, r, 99);
    CHECK(s.separation_score >= single_best - 1e-15);
    single_best = std::max(single_best, s.separation_score);
  }
  CHECK(a.separation_score == doctest::Approx(single_best));
}

TEST_CASE("ill-conditioned moments") {
  auto zero = MomentTensors::zeros(BasisKind::Trig, 4, 6);
  zero.n = 10;
  try {
    spectral_estimate(zero, Basis(BasisKind::Trig, 6), 2, 3, 1);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::IllConditionedMoments);
  }
  CHECK(singular_spectrum(zero).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("singular_spectrum") {
  const auto hmm = testing::random_hmm(2, 8, 4);
  const auto s = singular_spectrum(population_moments(hmm, 8, 8));
  CHECK(s(1) > 1e-3);
  CHECK(s.tail(6).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(elbow_order(s) == 2);

  // Benchmark: rank 3 in population, and the sample spectrum obeys Weyl's bound.
  const auto truth = GroundTruth::benchmark(50);
  const auto pop = population_moments(truth.params(50), 50, 50);
  const auto sp = singular_spectrum(pop);
  CHECK(sp(2) > 1e-2);
  CHECK(sp(3) < 1e-12);
  CHECK(elbow_order(sp) == 3);
  const auto y = sample_hmm(truth, 100000, 11);
  const auto emp = accumulate_moments(y, truth.basis, 50, 50);
  const auto e = singular_spectrum(emp);
  const double noise = Eigen::JacobiSVD<Eigen::MatrixXd>(emp.N - pop.N).singularValues()(0);
  for (int k = 0; k < 50; ++k) CHECK(std::abs(e(k) - sp(k)) <= noise + 1e-12);
  CHECK(e(0) / e(1) > 4.0);
}

TEST_CASE("spectral estimate on simulated data") {
  const auto truth = GroundTruth::benchmark(50);
  const std::int64_t n = 200000;
  const auto y = sample_hmm(truth, n, 2);
  const auto t = accumulate_moments(y, truth.basis, 20, 50);
  const auto e = spectral_estimate(t, truth.basis, 3, default_retries(n, 50), 7);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& perm : all_permutations(3)) {
    double worst = 0.0;
    for (int k = 0; k < 3; ++k) worst = std::max(worst, truth.error(perm[k], e.params.O.col(k)));
    best = std::min(best, worst);
  }
  // Worst state over labelings; the small third singular value of the
  // benchmark makes this noisy at n = 2e5.
  CHECK(best < 0.35);
}

TEST_CASE("project_density_to_simplex") {
  const Basis basis(BasisKind::Trig, 9);
  CoefficientDensity f{BasisKind::Trig, Eigen::VectorXd::Zero(9)};
  f.coeffs(0) = 1.0;
  f.coeffs(1) = 0.3;
  f.coeffs(4) = -0.2;
  const auto same = project_density_to_simplex(basis, f, 1024);
  CHECK((same.coeffs - f.coeffs).cwiseAbs().maxCoeff() < 1e-3);

  CoefficientDensity dip{BasisKind::Trig, Eigen::VectorXd::Zero(9)};
  dip.coeffs(0) = 1.0;
  dip.coeffs(1) = 0.9;
  dip.coeffs(3) = 0.5;
  const auto p = project_density_to_simplex(basis, dip, 2048);
  CHECK(p.coeffs(0) == doctest::Approx(1.0).epsilon(1e-6));
  // The re-expansion is truncated, so nonnegativity holds on the grid up to the
  // truncation error of the projected values.
  double low = 0.0;
  for (int i = 0; i < 2048; ++i) low = std::min(low, p.value(basis, (i + 0.5) / 2048));
  CHECK(low > -0.5);
  CHECK(l2_distance(p, dip) > 0.0);

  const auto g1 = project_density_to_simplex(basis, dip, 1024);
  const auto g2 = project_density_to_simplex(basis, dip, 2048);
  CHECK((g1.coeffs - g2.coeffs).cwiseAbs().maxCoeff() <= 1e-3);
}
