#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nphmm/basis.hpp"

namespace nphmm {

/// A density with respect to the basis' dominating measure: a Lebesgue part on
/// [0, 1] plus, for DiracTrig, an atom at 0. Breakpoints mark interior points
/// where the Lebesgue part is not smooth; quadrature panels are graded there.
struct Density {
  std::string name;
  std::function<double(double)> pdf;
  double atom = 0.0;
  std::vector<double> breakpoints;
};

/// Composite Gauss-Legendre rule on [0, 1].
class QuadratureRule {
 public:
  static constexpr int kPanelOrder = 16;

  /// About `points` nodes on uniform panels whose edges include every breakpoint,
  /// with the panels touching a breakpoint refined geometrically.
  static QuadratureRule composite(int points, std::span<const double> breakpoints = {});

  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return nodes_.size(); }

  template <typename F>
  double integrate(F&& f) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) sum += weights_[i] * f(nodes_[i]);
    return sum;
  }

 private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

inline constexpr int kDefaultQuadraturePoints = 4096;

/// Coefficients <f, phi_a>, a < M, by composite quadrature (plus the atom for DiracTrig).
CoefficientDensity project_true_density(const Basis& basis, int M, const Density& density,
                                        int quadrature_points = kDefaultQuadraturePoints);

/// Squared L2 norm of the density under the dominating measure.
double squared_norm(const Density& density, int quadrature_points = kDefaultQuadraturePoints);

}  // namespace nphmm
