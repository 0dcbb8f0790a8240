#include "nphmm/params.hpp"

#include <algorithm>
#include <numeric>

#include "nphmm/errors.hpp"

namespace nphmm {

void HmmParams::check_shapes() const {
  const auto K = pi.size();
  require(K >= 1, ErrorKind::InvalidArgument, "HMM needs at least one state");
  require(Q.rows() == K && Q.cols() == K, ErrorKind::InvalidArgument, "Q must be K x K");
  require(O.cols() == K && O.rows() >= 1, ErrorKind::InvalidArgument, "O must be M x K");
}

void HmmParams::check_valid(double tol) const {
  check_shapes();
  require(pi.allFinite() && Q.allFinite() && O.allFinite(), ErrorKind::InvalidArgument,
          "HMM parameters must be finite");
  require(pi.minCoeff() >= -tol && std::abs(pi.sum() - 1.0) <= tol, ErrorKind::InvalidArgument,
          "pi must be a probability vector");
  for (Eigen::Index k = 0; k < Q.rows(); ++k) {
    require(Q.row(k).minCoeff() >= -tol && std::abs(Q.row(k).sum() - 1.0) <= tol,
            ErrorKind::InvalidArgument, "rows of Q must be probability vectors");
  }
}

HmmParams permute_states(const HmmParams& params, const std::vector<int>& perm) {
  const int K = params.K();
  require(static_cast<int>(perm.size()) == K, ErrorKind::InvalidArgument, "permutation size");
  HmmParams out = params;
  for (int i = 0; i < K; ++i) {
    out.pi(i) = params.pi(perm[i]);
    out.O.col(i) = params.O.col(perm[i]);
    for (int j = 0; j < K; ++j) out.Q(i, j) = params.Q(perm[i], perm[j]);
  }
  return out;
}

std::vector<std::vector<int>> all_permutations(int K) {
  std::vector<int> p(K);
  std::iota(p.begin(), p.end(), 0);
  std::vector<std::vector<int>> out;
  do {
    out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

}  // namespace nphmm
