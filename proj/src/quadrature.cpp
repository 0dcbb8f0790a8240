#include "nphmm/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nphmm/errors.hpp"

namespace nphmm {

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
}

QuadratureRule QuadratureRule::composite(int points, std::span<const double> breakpoints) {
  require(points >= kPanelOrder, ErrorKind::InvalidArgument, "quadrature needs at least 16 points");
  std::vector<double> edges{0.0, 1.0};
  for (double b : breakpoints) {
    if (b > 0.0 && b < 1.0) edges.push_back(b);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  const int total_panels = std::max(1, points / kPanelOrder);
  std::vector<double> gl_x, gl_w;
  gauss_legendre(kPanelOrder, gl_x, gl_w);

  QuadratureRule rule;
  auto add_panel = [&](double lo, double hi) {
    const double half = 0.5 * (hi - lo);
    const double mid = 0.5 * (hi + lo);
    for (int i = 0; i < kPanelOrder; ++i) {
      rule.nodes_.push_back(mid + half * gl_x[i]);
      rule.weights_.push_back(half * gl_w[i]);
    }
  };
  constexpr int kGradingLevels = 14;

  for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
    const double lo = edges[s];
    const double hi = edges[s + 1];
    const int panels = std::max(1, static_cast<int>(std::lround(total_panels * (hi - lo))));
    const double h = (hi - lo) / panels;
    const bool graded_lo = s > 0;
    const bool graded_hi = s + 2 < edges.size();
    for (int p = 0; p < panels; ++p) {
      const double a = lo + p * h;
      const double b = (p + 1 == panels) ? hi : lo + (p + 1) * h;
      const bool touch_lo = graded_lo && p == 0;
      const bool touch_hi = graded_hi && p + 1 == panels;
      if (!touch_lo && !touch_hi) {
        add_panel(a, b);
        continue;
      }
      // Geometric refinement toward the singular end(s).
      std::vector<double> cuts{a, b};
      double len = b - a;
      for (int level = 0; level < kGradingLevels; ++level) {
        len *= 0.5;
        if (touch_lo) cuts.push_back(a + len);
        if (touch_hi) cuts.push_back(b - len);
      }
      std::sort(cuts.begin(), cuts.end());
      cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
      for (std::size_t c = 0; c + 1 < cuts.size(); ++c) add_panel(cuts[c], cuts[c + 1]);
    }
  }
  return rule;
}

CoefficientDensity project_true_density(const Basis& basis, int M, const Density& density,
                                        int quadrature_points) {
  require(M >= 1 && M <= basis.max_dim(), ErrorKind::InvalidArgument,
          "projection dimension outside [1, max_dim]");
  require(quadrature_points >= 1024, ErrorKind::InvalidArgument,
          "project_true_density needs at least 1024 quadrature points");
  const auto rule = QuadratureRule::composite(quadrature_points, density.breakpoints);
  Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(M);
  Eigen::VectorXd phi(M);
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double y = rule.nodes()[i];
    const double f = density.pdf(y);
    if (!std::isfinite(f)) {
      fail(ErrorKind::Numerical, "density '" + density.name + "' is not finite at a quadrature node");
    }
    basis.evaluate_into(y, std::span<double>(phi.data(), M));
    coeffs.noalias() += (rule.weights()[i] * f) * phi;
  }
  if (basis.kind() == BasisKind::DiracTrig) coeffs(0) = density.atom;
  return {basis.kind(), coeffs};
}

double squared_norm(const Density& density, int quadrature_points) {
  const auto rule = QuadratureRule::composite(quadrature_points, density.breakpoints);
  const double lebesgue = rule.integrate([&](double y) {
    const double f = density.pdf(y);
    return f * f;
  });
  return lebesgue + density.atom * density.atom;
}

}  // namespace nphmm
