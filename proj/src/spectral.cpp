#include "nphmm/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <vector>

#include "nphmm/errors.hpp"
#include "nphmm/rng.hpp"
#include "nphmm/simplex.hpp"

namespace nphmm {

Eigen::MatrixXd haar_orthogonal(int K, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd gauss(K, K);
  for (int j = 0; j < K; ++j) {
    for (int i = 0; i < K; ++i) gauss(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(K, K);
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < K; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

int default_retries(std::int64_t n, int M) {
  require(n >= 1 && M >= 1, ErrorKind::InvalidArgument, "default_retries needs n, M >= 1");
  return std::max(1, static_cast<int>(std::ceil(2.0 * std::log(static_cast<double>(n)) +
                                                2.0 * std::log(static_cast<double>(M)))));
}

Eigen::VectorXd singular_spectrum(const MomentTensors& tensors) {
  if (tensors.N.size() == 0) return {};
  Eigen::BDCSVD<Eigen::MatrixXd> svd(tensors.N);
  return svd.singularValues();
}

int elbow_order(const Eigen::Ref<const Eigen::VectorXd>& spectrum, int max_order) {
  const int limit = std::min<int>(max_order, static_cast<int>(spectrum.size()) - 1);
  int best = 1;
  double best_ratio = -1.0;
  // Values at rounding level count as exact zeros.
  const double floor = spectrum.size() > 0 ? 1e-12 * spectrum(0) : 0.0;
  for (int k = 1; k <= limit; ++k) {
    const double next = spectrum(k);
    if (spectrum(k - 1) <= floor) break;
    const double ratio = next > floor ? spectrum(k - 1) / next : std::numeric_limits<double>::infinity();
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = k;
    }
    if (next <= floor) break;
  }
  return best;
}

namespace {

struct Attempt {
  double score = -std::numeric_limits<double>::infinity();
  Eigen::MatrixXd rotated_v;  // V * Theta
  Eigen::MatrixXd lambda;     // Lambda(k, k')
};

Attempt run_attempt(const Eigen::MatrixXd& V, const Eigen::MatrixXd& b_stack, int K,
                    std::uint64_t seed) {
  Attempt out;
  out.rotated_v = V * haar_orthogonal(K, seed);
  // Column k of `combos` is vec(C(k)) = sum_b (V Theta)(b, k) vec(B(b)).
  const Eigen::MatrixXd combos = b_stack * out.rotated_v;
  const Eigen::Map<const Eigen::MatrixXd> first(combos.col(0).data(), K, K);

  Eigen::EigenSolver<Eigen::MatrixXd> eig(first);
  if (eig.info() != Eigen::Success) return out;
  const Eigen::VectorXcd values = eig.eigenvalues();
  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
  if (values.imag().cwiseAbs().maxCoeff() > 1e-8 * scale) return out;

  Eigen::MatrixXd R = eig.eigenvectors().real();
  for (int j = 0; j < K; ++j) {
    const double norm = R.col(j).norm();
    if (!(norm > 0.0)) return out;
    R.col(j) /= norm;
    Eigen::Index arg;
    R.col(j).cwiseAbs().maxCoeff(&arg);
    if (R(arg, j) < 0.0) R.col(j) *= -1.0;
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(R);
  if (!lu.isInvertible()) return out;

  out.lambda.resize(K, K);
  for (int k = 0; k < K; ++k) {
    const Eigen::Map<const Eigen::MatrixXd> ck(combos.col(k).data(), K, K);
    const Eigen::MatrixXd conj = lu.solve(ck * R);
    out.lambda.row(k) = conj.diagonal().transpose();
  }
  if (!out.lambda.allFinite()) return out;

  double score = std::numeric_limits<double>::infinity();
  for (int k = 0; k < K; ++k) {
    for (int k1 = 0; k1 < K; ++k1) {
      for (int k2 = k1 + 1; k2 < K; ++k2) {
        score = std::min(score, std::abs(out.lambda(k, k1) - out.lambda(k, k2)));
      }
    }
  }
  out.score = score;
  return out;
}

}  // namespace

SpectralEstimate spectral_estimate(const MomentTensors& tensors, const Basis& basis, int K,
                                   int retries, std::uint64_t seed,
                                   const SpectralOptions& options) {
  const int m = tensors.m;
  const int M = tensors.M;
  require(K >= 1 && K <= m && m <= M, ErrorKind::InvalidArgument,
          "spectral_estimate requires K <= m <= M");
  require(retries >= 1, ErrorKind::InvalidArgument, "spectral_estimate requires retries >= 1");
  require(tensors.kind == basis.kind() && M <= basis.max_dim(), ErrorKind::InvalidArgument,
          "moment tensors do not match the basis");
  require(tensors.all_finite(), ErrorKind::Numerical, "moment tensors contain non-finite entries");

  // Top-K singular spaces of N.
  Eigen::BDCSVD<Eigen::MatrixXd> svd(tensors.N, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::MatrixXd U = svd.matrixU().leftCols(K);
  const Eigen::MatrixXd V = svd.matrixV().leftCols(K);

  // Whitened lag-2 matrix with a conditioning guard.
  const Eigen::MatrixXd W = U.transpose() * tensors.P * U;
  Eigen::JacobiSVD<Eigen::MatrixXd> w_svd(W);
  const auto& w_sv = w_svd.singularValues();
  if (!(w_sv(0) > 0.0) || w_sv(K - 1) < 1e-12 * w_sv(0)) {
    fail(ErrorKind::IllConditionedMoments, "U^T P U is numerically singular");
  }
  const Eigen::PartialPivLU<Eigen::MatrixXd> w_lu(W);

  // vec(U^T T(., b, .) U) for all b in one product, then B(b) = W^{-1} (...).
  Eigen::MatrixXd kron(static_cast<Eigen::Index>(K) * K, static_cast<Eigen::Index>(m) * m);
  for (int j = 0; j < K; ++j) {
    for (int i = 0; i < K; ++i) {
      for (int c = 0; c < m; ++c) {
        for (int a = 0; a < m; ++a) kron(i + K * j, a + m * c) = U(a, i) * U(c, j);
      }
    }
  }
  const Eigen::MatrixXd projected = kron * tensors.T;  // K^2 x M
  Eigen::MatrixXd b_stack(static_cast<Eigen::Index>(K) * K, M);
  for (int b = 0; b < M; ++b) {
    const Eigen::Map<const Eigen::MatrixXd> slice(projected.col(b).data(), K, K);
    Eigen::Map<Eigen::MatrixXd>(b_stack.col(b).data(), K, K) = w_lu.solve(slice);
  }

  Attempt best;
  int best_index = -1;
  for (int i = 0; i < retries; ++i) {
    Attempt attempt = run_attempt(V, b_stack, K, derive_seed(seed, static_cast<std::uint64_t>(i)));
    if (attempt.score > best.score) {
      best = std::move(attempt);
      best_index = i;
    }
  }
  if (best_index < 0 || !(best.score > 0.0)) {
    fail(ErrorKind::DiagonalizationFailure,
         "no attempt produced real, separated eigenvalues");
  }

  SpectralEstimate est;
  est.separation_score = best.score;
  est.attempt_index = best_index;
  est.singular_values = svd.singularValues().head(std::min<Eigen::Index>(svd.singularValues().size(), std::max(K + 5, 10)));

  HmmParams& params = est.params;
  params.kind = tensors.kind;
  params.O = best.rotated_v * best.lambda;  // M x K

  if (options.clip_alpha) {
    const double bound = std::pow(static_cast<double>(tensors.n), *options.clip_alpha);
    for (int k = 0; k < K; ++k) {
      params.O.col(k) = clip_density(basis, params.emission(k), bound, options.clip_grid).coeffs;
    }
  }

  const Eigen::MatrixXd uo = U.transpose() * params.O.topRows(m);  // K x K
  const Eigen::FullPivLU<Eigen::MatrixXd> uo_lu(uo);
  const Eigen::VectorXd pi_raw = uo_lu.solve(U.transpose() * tensors.L);
  params.pi = pi_raw.allFinite() ? simplex_project(pi_raw)
                                 : Eigen::VectorXd::Constant(K, 1.0 / K);

  const Eigen::MatrixXd ov = params.O.transpose() * V;  // K x K
  const Eigen::MatrixXd middle = U.transpose() * tensors.N * V;
  const Eigen::MatrixXd right = Eigen::FullPivLU<Eigen::MatrixXd>(ov.transpose())
                                    .solve(middle.transpose())
                                    .transpose();  // middle * ov^{-1}
  Eigen::MatrixXd q_raw = uo_lu.solve(right);
  for (int k = 0; k < K; ++k) q_raw.row(k) /= std::max(params.pi(k), 1e-12);
  params.Q = q_raw.allFinite() ? transition_project(q_raw)
                               : Eigen::MatrixXd::Constant(K, K, 1.0 / K);
  return est;
}

CoefficientDensity project_density_to_simplex(const Basis& basis, const CoefficientDensity& f,
                                              int grid_size) {
  require(grid_size >= 128, ErrorKind::InvalidArgument, "project_density_to_simplex needs grid_size >= 128");
  require(f.kind == basis.kind() && f.dim() <= basis.max_dim(), ErrorKind::InvalidArgument,
          "density does not match the basis");
  const int M = f.dim();
  const bool atom = basis.kind() == BasisKind::DiracTrig;
  const int offset = atom ? 1 : 0;
  const double root = std::sqrt(static_cast<double>(grid_size));

  // Scaled so that Euclidean geometry on z matches L2 geometry of the function.
  Eigen::VectorXd z(grid_size + offset);
  Eigen::VectorXd w(grid_size + offset);
  Eigen::MatrixXd phi(M, grid_size);
  for (int i = 0; i < grid_size; ++i) {
    const double y = (i + 0.5) / grid_size;
    basis.evaluate_into(y, std::span<double>(phi.col(i).data(), M));
    z(i + offset) = phi.col(i).dot(f.coeffs) / root;
    w(i + offset) = 1.0 / root;
  }
  if (atom) {
    z(0) = f.coeffs(0);
    w(0) = 1.0;
  }
  const Eigen::VectorXd projected = weighted_simplex_project(z, w);
  CoefficientDensity out{basis.kind(), Eigen::VectorXd::Zero(M)};
  out.coeffs = phi * projected.tail(grid_size) / root;
  if (atom) out.coeffs(0) = projected(0);
  return out;
}

CoefficientDensity clip_density(const Basis& basis, const CoefficientDensity& f, double bound,
                                int grid_size) {
  require(bound > 0.0 && grid_size >= 1, ErrorKind::InvalidArgument, "clip_density arguments");
  const int M = f.dim();
  const bool atom = basis.kind() == BasisKind::DiracTrig;
  Eigen::VectorXd phi(M);
  CoefficientDensity out{f.kind, Eigen::VectorXd::Zero(M)};
  for (int i = 0; i < grid_size; ++i) {
    const double y = (i + 0.5) / grid_size;
    basis.evaluate_into(y, std::span<double>(phi.data(), M));
    const double v = std::clamp(phi.dot(f.coeffs), -bound, bound);
    out.coeffs += (v / grid_size) * phi;
  }
  if (atom) out.coeffs(0) = std::clamp(f.coeffs(0), -bound, bound);
  return out;
}

}  // namespace nphmm
