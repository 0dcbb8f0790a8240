#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "nphmm/calibration.hpp"
#include "nphmm/errors.hpp"

using namespace nphmm;

namespace {

// Models up to M* share one estimate, larger models share another one at distance D.
EstimatorFamily two_cluster(const std::vector<int>& grid, int M_star, double D) {
  return testing::make_family(grid, 1, [&](int M) {
    Eigen::MatrixXd O = Eigen::MatrixXd::Zero(M, 1);
    O(0, 0) = 1.0;
    if (M > M_star) O(1, 0) = D;
    return O;
  });
}

std::vector<double> geometric(double lo, double hi, int points) {
  std::vector<double> g(points);
  for (int i = 0; i < points; ++i) g[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1));
  return g;
}

}  // namespace

TEST_CASE("flat curve") {
  const auto grid = model_range(3, 20);
  const auto f = testing::make_family(grid, 2, [](int M) {
    Eigen::MatrixXd O = Eigen::MatrixXd::Zero(M, 2);
    O(0, 0) = O(0, 1) = 1.0;
    O(1, 1) = 0.3;
    return O;
  });
  const DistanceCache cache(f);
  const auto rho = default_rho_grid(f, cache, PenaltyKind::Spectral);
  CHECK(rho.size() == 64);
  const auto c = jump_curve(f, cache, PenaltyKind::Spectral, 0, rho);
  CHECK(!c.has_jump);
  CHECK(c.jump_size == 0);
  CHECK(c.rho_jump == rho.front());
  for (int M : c.M_hat) CHECK(M == 3);
  const auto cal = calibrate(f, cache, PenaltyKind::Spectral, CalibrationMode::EachJump, rho);
  CHECK(cal.rho == std::vector<double>{1.0, 1.0});
  CHECK(cal.warnings.size() == 2);

  CHECK_THROWS_AS(jump_curve(f, cache, PenaltyKind::Spectral, 0, {}), Error);
  CHECK_THROWS_AS(jump_curve(f, cache, PenaltyKind::Spectral, 0, {1.0, 0.5}), Error);
}

TEST_CASE("two-cluster threshold") {
  const auto grid = model_range(3, 60);
  const std::int64_t n = 100000;
  for (int M_star : {5, 17, 40}) {
    for (double D : {0.05, 0.4}) {
      auto f = two_cluster(grid, M_star, D);
      f.n = n;
      const DistanceCache cache(f);
      const double threshold =
          D / (3.0 * (penalty_shape(PenaltyKind::Spectral, M_star + 1, n) -
                      penalty_shape(PenaltyKind::Spectral, grid.front(), n)));
      // The threshold itself is kept off the grid to avoid exact ties.
      const auto rho = geometric(threshold / 100.0, threshold * 100.0, 40);
      const auto c = jump_curve(f, cache, PenaltyKind::Spectral, 0, rho);
      CHECK(c.has_jump);
      CHECK(c.jump_size == M_star + 1 - grid.front());
      for (std::size_t i = 0; i < rho.size(); ++i) {
        CHECK(c.M_hat[i] == (rho[i] < threshold ? M_star + 1 : grid.front()));
      }
      const auto it = std::lower_bound(rho.begin(), rho.end(), threshold);
      CHECK(c.rho_jump == *it);

      // Halving the log spacing moves the jump by at most one coarse step.
      const auto fine = geometric(threshold / 100.0, threshold * 100.0, 79);
      const auto cf = jump_curve(f, cache, PenaltyKind::Spectral, 0, fine);
      const double step = rho[1] / rho[0];
      CHECK(cf.rho_jump <= c.rho_jump * (1.0 + 1e-12));
      CHECK(cf.rho_jump >= c.rho_jump / step * (1.0 - 1e-12));
    }
  }
}

TEST_CASE("calibration modes") {
  const std::vector<double> jumps = {1.0, 2.0, 3.0};
  CHECK(combine_jumps(jumps, CalibrationMode::EachJump) == std::vector<double>{2.0, 4.0, 6.0});
  CHECK(combine_jumps(jumps, CalibrationMode::JumpMax) == std::vector<double>{6.0, 6.0, 6.0});
  CHECK(combine_jumps(jumps, CalibrationMode::JumpMean) == std::vector<double>{4.0, 4.0, 4.0});
  for (auto mode : {CalibrationMode::EachJump, CalibrationMode::JumpMax, CalibrationMode::JumpMean}) {
    CHECK(combine_jumps({0.7}, mode) == std::vector<double>{1.4});
    CHECK(calibration_mode_from_string(to_string(mode)) == mode);
  }
  CHECK_THROWS_AS(calibration_mode_from_string("jumpmin"), Error);

  auto single = two_cluster(model_range(3, 30), 9, 0.2);
  const DistanceCache one(single);
  const auto grid1 = default_rho_grid(single, one, PenaltyKind::Spectral);
  const auto e = calibrate(single, one, PenaltyKind::Spectral, CalibrationMode::EachJump, grid1);
  for (auto mode : {CalibrationMode::JumpMax, CalibrationMode::JumpMean}) {
    CHECK(calibrate(single, one, PenaltyKind::Spectral, mode, grid1).rho == e.rho);
  }

  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto f = testing::nested_family(model_range(3, 50), 3, seed, 0.8);
    const DistanceCache cache(f);
    const auto grid = default_rho_grid(f, cache, PenaltyKind::Spectral);
    const auto each = calibrate(f, cache, PenaltyKind::Spectral, CalibrationMode::EachJump, grid);
    const auto mx = calibrate(f, cache, PenaltyKind::Spectral, CalibrationMode::JumpMax, grid);
    const auto mean = calibrate(f, cache, PenaltyKind::Spectral, CalibrationMode::JumpMean, grid);
    REQUIRE(each.warnings.empty());
    const double lo = *std::min_element(each.rho.begin(), each.rho.end());
    for (int k = 0; k < 3; ++k) {
      CHECK(each.rho[k] == doctest::Approx(2.0 * each.curves[k].rho_jump));
      CHECK(mx.rho[k] >= mean.rho[k]);
      CHECK(mean.rho[k] >= lo);
    }
  }
}

TEST_CASE("domination bound") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto grid = model_range(3, 40);
    const auto f = testing::nested_family(grid, 2, seed);
    const DistanceCache cache(f);
    const double bound = cache.max_pairwise() /
                         (penalty_shape(PenaltyKind::Spectral, grid[1], f.n) -
                          penalty_shape(PenaltyKind::Spectral, grid[0], f.n));
    for (int k = 0; k < 2; ++k) {
      for (auto v : {Variant::Standard, Variant::Pos}) {
        const auto c = jump_curve(f, cache, PenaltyKind::Spectral, k, {bound * 1.0001, bound * 10.0}, v);
        CHECK(c.M_hat.front() == grid.front());
        CHECK(c.M_hat.back() == grid.front());
      }
    }
  }
}

TEST_CASE("jump curve is deterministic and follows select_models") {
  const auto f = testing::nested_family(model_range(3, 40), 3, 33, 0.9);
  const DistanceCache cache(f);
  const auto grid = default_rho_grid(f, cache, PenaltyKind::Ls, 20);
  for (auto v : {Variant::Standard, Variant::Pos, Variant::Max}) {
    const auto a = jump_curve(f, cache, PenaltyKind::Ls, 1, grid, v);
    const auto b = jump_curve(f, cache, PenaltyKind::Ls, 1, grid, v);
    CHECK(a.M_hat == b.M_hat);
    CHECK(a.rho_jump == b.rho_jump);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const PenaltyDescriptor p{PenaltyKind::Ls, {grid[i], grid[i], grid[i]}, f.n};
      CHECK(select_models(f, cache, p, v).states[1].M_hat == a.M_hat[i]);
    }
  }
}
