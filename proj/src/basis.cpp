#include "nphmm/basis.hpp"

#include <cmath>
#include <numbers>

#include "nphmm/errors.hpp"

namespace nphmm {

std::string to_string(BasisKind kind) {
  return kind == BasisKind::Trig ? "trig" : "dirac_trig";
}

BasisKind basis_kind_from_string(const std::string& name) {
  if (name == "trig") return BasisKind::Trig;
  if (name == "dirac_trig") return BasisKind::DiracTrig;
  fail(ErrorKind::InvalidArgument, "unknown basis kind '" + name + "'");
}

Basis::Basis(BasisKind kind, int max_dim) : kind_(kind), max_dim_(max_dim) {
  require(max_dim >= 1, ErrorKind::InvalidArgument, "basis max_dim must be >= 1");
}

Basis make_basis(BasisKind kind, int max_dim) { return Basis(kind, max_dim); }

namespace {

// Trig values phi_1..phi_count at y, via the angle-addition recurrence.
void trig_values(double y, double* out, int count) {
  if (count <= 0) return;
  out[0] = 1.0;
  if (count == 1) return;
  const double theta = 2.0 * std::numbers::pi * y;
  const double c1 = std::cos(theta);
  const double s1 = std::sin(theta);
  double c = c1;
  double s = s1;
  for (int a = 1; a < count; a += 2) {
    out[a] = std::numbers::sqrt2 * c;
    if (a + 1 < count) out[a + 1] = std::numbers::sqrt2 * s;
    const double cn = c * c1 - s * s1;
    s = s * c1 + c * s1;
    c = cn;
  }
}

}  // namespace

void Basis::evaluate_into(double y, std::span<double> out) const {
  if (!(y >= 0.0 && y <= 1.0)) {
    fail(ErrorKind::Domain, "observation " + std::to_string(y) + " outside [0, 1]");
  }
  const int count = static_cast<int>(out.size());
  if (kind_ == BasisKind::Trig) {
    trig_values(y, out.data(), count);
    return;
  }
  if (count == 0) return;
  if (y == 0.0) {
    out[0] = 1.0;
    for (int a = 1; a < count; ++a) out[a] = 0.0;
    return;
  }
  out[0] = 0.0;
  trig_values(y, out.data() + 1, count - 1);
}

Eigen::VectorXd Basis::evaluate(int M, double y) const {
  require(M >= 1 && M <= max_dim_, ErrorKind::InvalidArgument,
          "model dimension " + std::to_string(M) + " outside [1, max_dim]");
  Eigen::VectorXd out(M);
  evaluate_into(y, std::span<double>(out.data(), M));
  return out;
}

Eigen::VectorXd Basis::unit_mass(int M) const {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(M);
  if (M == 0) return w;
  w(0) = 1.0;
  if (kind_ == BasisKind::DiracTrig && M > 1) w(1) = 1.0;
  return w;
}

CoefficientDensity CoefficientDensity::truncated(int M) const {
  require(M >= 0 && M <= dim(), ErrorKind::InvalidArgument, "truncation beyond dimension");
  return {kind, coeffs.head(M)};
}

double CoefficientDensity::value(const Basis& basis, double y) const {
  require(basis.kind() == kind, ErrorKind::InvalidArgument, "basis kind mismatch");
  Eigen::VectorXd phi(dim());
  basis.evaluate_into(y, std::span<double>(phi.data(), dim()));
  return phi.dot(coeffs);
}

double l2_distance(const Eigen::Ref<const Eigen::VectorXd>& a,
                   const Eigen::Ref<const Eigen::VectorXd>& b) {
  const Eigen::Index common = std::min(a.size(), b.size());
  double sum = (a.head(common) - b.head(common)).squaredNorm();
  sum += a.tail(a.size() - common).squaredNorm();
  sum += b.tail(b.size() - common).squaredNorm();
  return std::sqrt(sum);
}

double l2_distance(const CoefficientDensity& a, const CoefficientDensity& b) {
  require(a.kind == b.kind, ErrorKind::InvalidArgument, "l2_distance: mismatched basis kinds");
  return l2_distance(a.coeffs, b.coeffs);
}

double eta3_bound(int m, int M) {
  require(m >= 1 && M >= 1, ErrorKind::InvalidArgument, "eta3_bound: dimensions must be >= 1");
  require(m <= M, ErrorKind::InvalidArgument, "eta3_bound: requires m <= M");
  return 32.0 * static_cast<double>(m) * m * M;
}

}  // namespace nphmm
