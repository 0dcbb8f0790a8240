#include "nphmm/moments.hpp"

#include <algorithm>

#include "nphmm/errors.hpp"
#include "nphmm/parallel.hpp"

namespace nphmm {

MomentTensors MomentTensors::zeros(BasisKind kind, int m, int M) {
  MomentTensors t;
  t.kind = kind;
  t.m = m;
  t.M = M;
  t.n = 0;
  t.L = Eigen::VectorXd::Zero(m);
  t.N = Eigen::MatrixXd::Zero(m, M);
  t.P = Eigen::MatrixXd::Zero(m, m);
  t.T = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m) * m, M);
  return t;
}

MomentTensors MomentTensors::restricted(int m2, int M2) const {
  require(m2 >= 1 && m2 <= m && M2 >= 1 && M2 <= M, ErrorKind::InvalidArgument,
          "restricted moments must be nested in the accumulated ones");
  MomentTensors out;
  out.kind = kind;
  out.m = m2;
  out.M = M2;
  out.n = n;
  out.L = L.head(m2);
  out.N = N.topLeftCorner(m2, M2);
  out.P = P.topLeftCorner(m2, m2);
  out.T.resize(static_cast<Eigen::Index>(m2) * m2, M2);
  for (int b = 0; b < M2; ++b) {
    Eigen::Map<Eigen::MatrixXd>(out.T.col(b).data(), m2, m2) = slice(b).topLeftCorner(m2, m2);
  }
  return out;
}

bool MomentTensors::all_finite() const {
  return L.allFinite() && N.allFinite() && P.allFinite() && T.allFinite();
}

namespace {

constexpr std::size_t kChunk = 2048;

// Raw sums (not yet divided by n) over triples [first, first + count).
void add_sums(std::span<const double> obs, const Basis& basis, int m, int M, std::size_t first,
              std::size_t count, MomentTensors& sums) {
  const int width = std::max(m, M);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> phi;
  Eigen::MatrixXd outer;
  for (std::size_t start = first; start < first + count; start += kChunk) {
    const std::size_t rows = std::min(kChunk, first + count - start);
    // Basis values for observations start .. start + rows + 1.
    phi.resize(static_cast<Eigen::Index>(rows + 2), width);
    for (std::size_t i = 0; i < rows + 2; ++i) {
      basis.evaluate_into(obs[start + i], std::span<double>(phi.row(i).data(), width));
    }
    const auto r = static_cast<Eigen::Index>(rows);
    const auto first_obs = phi.topLeftCorner(r, m);
    const auto mid_obs = phi.block(1, 0, r, M);
    const auto last_obs = phi.block(2, 0, r, m);

    sums.L.noalias() += first_obs.colwise().sum().transpose();
    sums.N.noalias() += first_obs.transpose() * mid_obs;
    sums.P.noalias() += first_obs.transpose() * last_obs;

    // Row s of `outer` is vec(phi_m(Y_s) phi_m(Y_{s+2})^T), column-major (a + m c).
    outer.resize(r, static_cast<Eigen::Index>(m) * m);
    for (int c = 0; c < m; ++c) {
      for (int a = 0; a < m; ++a) {
        outer.col(a + m * c) = first_obs.col(a).cwiseProduct(last_obs.col(c));
      }
    }
    sums.T.noalias() += outer.transpose() * mid_obs;
  }
  sums.n += static_cast<std::int64_t>(count);
}

void finish(MomentTensors& t) {
  if (t.n == 0) return;
  const double inv = 1.0 / static_cast<double>(t.n);
  t.L *= inv;
  t.N *= inv;
  t.P *= inv;
  t.T *= inv;
}

void check_request(const Basis& basis, int m, int M) {
  require(m >= 1 && M >= 1, ErrorKind::InvalidArgument, "moment dimensions must be >= 1");
  require(m <= basis.max_dim() && M <= basis.max_dim(), ErrorKind::InvalidArgument,
          "moment dimensions exceed the basis");
}

}  // namespace

MomentTensors accumulate_moments_range(std::span<const double> observations, const Basis& basis,
                                       int m, int M, std::size_t first, std::size_t count) {
  check_request(basis, m, M);
  require(first + count + 2 <= observations.size() || count == 0, ErrorKind::InvalidArgument,
          "triple range exceeds the observation sequence");
  auto sums = MomentTensors::zeros(basis.kind(), m, M);
  if (count > 0) add_sums(observations, basis, m, M, first, count, sums);
  finish(sums);
  return sums;
}

MomentTensors accumulate_moments(std::span<const double> observations, const Basis& basis, int m,
                                 int M, int threads) {
  check_request(basis, m, M);
  require(observations.size() >= 3, ErrorKind::InsufficientData,
          "at least three observations are needed to form a triple");
  const std::size_t n = observations.size() - 2;
  const std::size_t parts = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(1, n / kChunk));
  if (parts <= 1) return accumulate_moments_range(observations, basis, m, M, 0, n);

  // Disjoint triple ranges read overlapping observations, so no triple is lost.
  std::vector<MomentTensors> partial(parts);
  parallel_for(parts, threads, [&](std::size_t p) {
    const std::size_t lo = n * p / parts;
    const std::size_t hi = n * (p + 1) / parts;
    partial[p] = accumulate_moments_range(observations, basis, m, M, lo, hi - lo);
  });
  MomentTensors out = partial[0];
  for (std::size_t p = 1; p < parts; ++p) out = merge_moments(out, partial[p]);
  return out;
}

MomentTensors accumulate_moments_runs(std::span<const double> observations, const Basis& basis,
                                      int m, int M,
                                      const std::vector<std::pair<std::size_t, std::size_t>>& runs) {
  check_request(basis, m, M);
  auto out = MomentTensors::zeros(basis.kind(), m, M);
  for (const auto& [begin, end] : runs) {
    require(begin <= end && end <= observations.size(), ErrorKind::InvalidArgument,
            "observation run out of range");
    if (end - begin < 3) continue;
    out = merge_moments(out, accumulate_moments_range(observations, basis, m, M, begin,
                                                      end - begin - 2));
  }
  require(out.n >= 1, ErrorKind::InsufficientData, "no complete triple in the given runs");
  return out;
}

MomentTensors merge_moments(const MomentTensors& a, const MomentTensors& b) {
  require(a.kind == b.kind && a.m == b.m && a.M == b.M, ErrorKind::InvalidArgument,
          "merge_moments: shape mismatch");
  if (b.n == 0) return a;
  if (a.n == 0) return b;
  const double total = static_cast<double>(a.n) + static_cast<double>(b.n);
  const double wa = static_cast<double>(a.n) / total;
  const double wb = static_cast<double>(b.n) / total;
  MomentTensors out;
  out.kind = a.kind;
  out.m = a.m;
  out.M = a.M;
  out.n = a.n + b.n;
  out.L = wa * a.L + wb * b.L;
  out.N = wa * a.N + wb * b.N;
  out.P = wa * a.P + wb * b.P;
  out.T = wa * a.T + wb * b.T;
  return out;
}

MomentTensors population_moments(const HmmParams& params, int m, int M) {
  params.check_shapes();
  require(m >= 1 && M >= 1 && m <= params.dim() && M <= params.dim(), ErrorKind::InvalidArgument,
          "population_moments: dimensions exceed the emission coefficients");
  const Eigen::RowVectorXd drift = params.pi.transpose() * params.Q - params.pi.transpose();
  require(drift.cwiseAbs().maxCoeff() <= 1e-10, ErrorKind::InvalidArgument,
          "population_moments: pi is not stationary for Q");

  const Eigen::MatrixXd Om = params.O.topRows(m);
  const Eigen::MatrixXd OM = params.O.topRows(M);
  const Eigen::MatrixXd left = Om * params.pi.asDiagonal() * params.Q;  // m x K
  const Eigen::MatrixXd right = params.Q * Om.transpose();              // K x m

  auto out = MomentTensors::zeros(params.kind, m, M);
  out.n = 1;
  out.L = Om * params.pi;
  out.N = left * OM.transpose();
  out.P = left * right;
  for (int b = 0; b < M; ++b) {
    Eigen::Map<Eigen::MatrixXd>(out.T.col(b).data(), m, m) =
        left * OM.row(b).transpose().asDiagonal() * right;
  }
  return out;
}

}  // namespace nphmm
