#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>

namespace nphmm {

/// Nested orthonormal families on [0, 1].
///
/// Trig:      phi_1 = 1, phi_{2j} = sqrt(2) cos(2 pi j y), phi_{2j+1} = sqrt(2) sin(2 pi j y),
///            orthonormal for the Lebesgue measure.
/// DiracTrig: coordinate 0 is the indicator of {0}; coordinates 1.. are the trig family
///            restricted to y != 0. Orthonormal for delta_0 + Lebesgue.
///
/// Coordinates are stored 0-based in every vector: for Trig, entry a holds phi_{a+1};
/// for DiracTrig, entry 0 is the atom and entry a >= 1 holds trig phi_a.
enum class BasisKind { Trig, DiracTrig };

std::string to_string(BasisKind kind);
BasisKind basis_kind_from_string(const std::string& name);

class Basis {
 public:
  Basis(BasisKind kind, int max_dim);

  BasisKind kind() const noexcept { return kind_; }
  int max_dim() const noexcept { return max_dim_; }

  /// (phi_1(y), ..., phi_M(y)).
  Eigen::VectorXd evaluate(int M, double y) const;

  /// Writes the first out.size() basis values at y. Checks only the range of y.
  void evaluate_into(double y, std::span<double> out) const;

  /// Coefficients of the constant function 1 (so that <f, 1> = unit_mass . coeffs).
  Eigen::VectorXd unit_mass(int M) const;

  friend bool operator==(const Basis&, const Basis&) = default;

 private:
  BasisKind kind_;
  int max_dim_;
};

Basis make_basis(BasisKind kind, int max_dim);

/// A signed L2 function expressed on the first coeffs.size() functions of a basis.
/// L2 geometry is Euclidean geometry on the coefficients.
struct CoefficientDensity {
  BasisKind kind = BasisKind::Trig;
  Eigen::VectorXd coeffs;

  int dim() const { return static_cast<int>(coeffs.size()); }
  double norm() const { return coeffs.norm(); }
  CoefficientDensity truncated(int M) const;
  double value(const Basis& basis, double y) const;
};

/// Euclidean distance after zero-padding the shorter vector.
double l2_distance(const Eigen::Ref<const Eigen::VectorXd>& a,
                   const Eigen::Ref<const Eigen::VectorXd>& b);
double l2_distance(const CoefficientDensity& a, const CoefficientDensity& b);

/// Closed-form upper bound 32 m^2 M of eta_3^2(m, M) for the trig basis.
double eta3_bound(int m, int M);

}  // namespace nphmm
