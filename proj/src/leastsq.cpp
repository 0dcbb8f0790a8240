#include "nphmm/leastsq.hpp"

#include <cmath>
#include <limits>

#include "nphmm/rng.hpp"
#include "nphmm/simplex.hpp"
#include "nphmm/spectral.hpp"

namespace nphmm {

int LsProblem::dim() const { return static_cast<int>(T_full.cols()); }

TripleTensor build_ls_tensor(std::span<const double> observations, const Basis& basis, int M) {
  return accumulate_moments(observations, basis, M, M).T;
}

namespace {

// D(x, y, z) = pi_x Q_xy Q_yz, stored as K matrices D_y(x, z).
std::vector<Eigen::MatrixXd> core(const Eigen::VectorXd& pi, const Eigen::MatrixXd& Q) {
  const int K = static_cast<int>(pi.size());
  std::vector<Eigen::MatrixXd> d(K);
  for (int y = 0; y < K; ++y) {
    d[y] = (pi.cwiseProduct(Q.col(y))) * Q.row(y);
  }
  return d;
}

// Column y holds vec(O D_y O^T).
Eigen::MatrixXd outer_slices(const Eigen::MatrixXd& O, const std::vector<Eigen::MatrixXd>& d) {
  const auto M = O.rows();
  const int K = static_cast<int>(d.size());
  Eigen::MatrixXd e(M * M, K);
  for (int y = 0; y < K; ++y) {
    Eigen::Map<Eigen::MatrixXd>(e.col(y).data(), M, M) = O * d[y] * O.transpose();
  }
  return e;
}

void check_shapes(const Eigen::VectorXd& pi, const Eigen::MatrixXd& Q, const Eigen::MatrixXd& O) {
  const auto K = pi.size();
  require(K >= 1 && Q.rows() == K && Q.cols() == K && O.cols() == K && O.rows() >= 1,
          ErrorKind::InvalidArgument, "inconsistent (pi, Q, O) shapes");
}

struct Gradient {
  Eigen::VectorXd pi;
  Eigen::MatrixXd Q;
  Eigen::MatrixXd O;
};

class Objective {
 public:
  explicit Objective(const TripleTensor& T) : T_(T), t_norm2_(T.squaredNorm()) {}

  double value(const Eigen::VectorXd& pi, const Eigen::MatrixXd& Q, const Eigen::MatrixXd& O) const {
    const Eigen::MatrixXd e = outer_slices(O, core(pi, Q));
    return (e * O.transpose() - T_).squaredNorm() - t_norm2_;
  }

  Gradient gradient(const Eigen::VectorXd& pi, const Eigen::MatrixXd& Q,
                    const Eigen::MatrixXd& O) const {
    const int K = static_cast<int>(pi.size());
    const auto M = O.rows();
    const auto d = core(pi, Q);
    const Eigen::MatrixXd e = outer_slices(O, d);
    const Eigen::MatrixXd residual = e * O.transpose() - T_;
    const Eigen::MatrixXd ro = residual * O;  // column y: vec(R_y), R_y(a, c) = sum_b R(a,b,c) O(b,y)

    // W(x, y, z) = O^T R_y O.
    std::vector<Eigen::MatrixXd> w(K);
    Gradient g;
    g.O = 2.0 * residual.transpose() * e;  // middle slot
    for (int y = 0; y < K; ++y) {
      const Eigen::Map<const Eigen::MatrixXd> ry(ro.col(y).data(), M, M);
      w[y] = O.transpose() * ry * O;
      g.O.noalias() += 2.0 * ry * (O * d[y].transpose());  // first slot
      g.O.noalias() += 2.0 * ry.transpose() * (O * d[y]);  // last slot
    }

    g.pi = Eigen::VectorXd::Zero(K);
    g.Q = Eigen::MatrixXd::Zero(K, K);
    for (int x = 0; x < K; ++x) {
      for (int y = 0; y < K; ++y) {
        for (int z = 0; z < K; ++z) {
          const double wxyz = 2.0 * w[y](x, z);
          g.pi(x) += wxyz * Q(x, y) * Q(y, z);
          g.Q(x, y) += wxyz * pi(x) * Q(y, z);
          g.Q(y, z) += wxyz * pi(x) * Q(x, y);
        }
      }
    }
    return g;
  }

 private:
  const TripleTensor& T_;
  double t_norm2_;
};

struct Iterate {
  Eigen::VectorXd pi;
  Eigen::MatrixXd Q;
  Eigen::MatrixXd O;
  double value = 0.0;
};

enum class Block { Pi, Transition, Emission };

}  // namespace

TripleTensor candidate_tensor(const Eigen::VectorXd& pi, const Eigen::MatrixXd& Q,
                              const Eigen::MatrixXd& O) {
  check_shapes(pi, Q, O);
  return outer_slices(O, core(pi, Q)) * O.transpose();
}

double ls_criterion(const Eigen::VectorXd& pi, const Eigen::MatrixXd& Q, const Eigen::MatrixXd& O,
                    const TripleTensor& T_emp) {
  check_shapes(pi, Q, O);
  require(T_emp.rows() == O.rows() * O.rows() && T_emp.cols() == O.rows(),
          ErrorKind::InvalidArgument, "ls_criterion: tensor shape does not match O");
  return Objective(T_emp).value(pi, Q, O);
}

MomentTensors moments_from_triple(const TripleTensor& T, const Basis& basis, std::int64_t n) {
  const int M = static_cast<int>(T.cols());
  require(T.rows() == static_cast<Eigen::Index>(M) * M, ErrorKind::InvalidArgument,
          "triple tensor must be (M*M) x M");
  const Eigen::VectorXd w = basis.unit_mass(M);
  auto out = MomentTensors::zeros(basis.kind(), M, M);
  out.n = n;
  out.T = T;
  for (int b = 0; b < M; ++b) {
    const auto slice = out.slice(b);
    out.N.col(b) = slice * w;
    out.P.noalias() += w(b) * slice;
  }
  out.L = out.P * w;
  return out;
}

Eigen::VectorXd project_emission(const Eigen::Ref<const Eigen::VectorXd>& c,
                                 const Eigen::Ref<const Eigen::VectorXd>& w, double bound) {
  const double ww = w.squaredNorm();
  const Eigen::VectorXd center = w / ww;  // closest point of the hyperplane to 0
  Eigen::VectorXd x = c - ((w.dot(c) - 1.0) / ww) * w;
  const double radius2 = bound * bound - center.squaredNorm();
  require(radius2 >= 0.0, ErrorKind::InvalidArgument, "coefficient bound too small for unit mass");
  if (x.squaredNorm() > bound * bound) {
    const Eigen::VectorXd offset = x - center;
    x = center + offset * (std::sqrt(radius2) / offset.norm());
  }
  return x;
}

LsResult ls_estimate(const LsProblem& problem, const std::optional<HmmParams>& init,
                     const LsOptions& options) {
  const int M = problem.dim();
  const int K = problem.K;
  require(M >= 1 && problem.T_full.rows() == static_cast<Eigen::Index>(M) * M,
          ErrorKind::InvalidArgument, "LsProblem tensor must be (M*M) x M");
  require(K >= 1 && K <= M, ErrorKind::InvalidArgument, "ls_estimate requires K <= M");
  require(problem.coeff_norm_bound >= 1.0, ErrorKind::InvalidArgument, "coeff_norm_bound must be >= 1");
  require(problem.T_full.allFinite(), ErrorKind::Numerical, "LS tensor contains non-finite entries");
  require(M <= problem.basis.max_dim(), ErrorKind::InvalidArgument, "LS dimension exceeds the basis");

  HmmParams start;
  if (init) {
    start = *init;
    start.check_shapes();
    require(start.K() == K && start.dim() == M, ErrorKind::InvalidArgument,
            "initial parameters do not match the problem");
  } else {
    const auto tensors = moments_from_triple(problem.T_full, problem.basis, problem.n);
    start = spectral_estimate(tensors, problem.basis, K, default_retries(problem.n, M),
                              options.seed)
                .params;
  }

  const Eigen::VectorXd unit = problem.basis.unit_mass(M);
  const double bound = problem.coeff_norm_bound;
  auto project_o = [&](const Eigen::MatrixXd& O) {
    Eigen::MatrixXd out(O.rows(), O.cols());
    for (int k = 0; k < K; ++k) out.col(k) = project_emission(O.col(k), unit, bound);
    return out;
  };

  const Objective objective(problem.T_full);
  Iterate x{simplex_project(start.pi), transition_project(start.Q), project_o(start.O), 0.0};
  x.value = objective.value(x.pi, x.Q, x.O);

  LsResult result;
  result.initial_criterion = x.value;
  double steps[3] = {1.0, 1.0, 1.0};

  // One projected-gradient step on a block. Returns true when the criterion decreased.
  auto block_step = [&](Iterate& it, Block block, double& step, double& move) {
    const Gradient g = objective.gradient(it.pi, it.Q, it.O);
    step *= 2.0;
    for (int tries = 0; tries < 60; ++tries, step *= 0.5) {
      Iterate cand = it;
      double lin = 0.0, dist2 = 0.0;
      switch (block) {
        case Block::Pi:
          cand.pi = simplex_project(it.pi - step * g.pi);
          lin = g.pi.dot(cand.pi - it.pi);
          dist2 = (cand.pi - it.pi).squaredNorm();
          break;
        case Block::Transition:
          cand.Q = transition_project(it.Q - step * g.Q);
          lin = (g.Q.array() * (cand.Q - it.Q).array()).sum();
          dist2 = (cand.Q - it.Q).squaredNorm();
          break;
        case Block::Emission:
          cand.O = project_o(it.O - step * g.O);
          lin = (g.O.array() * (cand.O - it.O).array()).sum();
          dist2 = (cand.O - it.O).squaredNorm();
          break;
      }
      if (tries == 0) move = std::sqrt(dist2) / step;
      if (dist2 == 0.0) return false;
      cand.value = objective.value(cand.pi, cand.Q, cand.O);
      if (cand.value <= it.value + lin + 0.5 * dist2 / step && cand.value < it.value) {
        it = std::move(cand);
        return true;
      }
    }
    step = 1.0;
    return false;
  };

  auto descend = [&](Iterate& it, int max_iters, int& iters, bool& stalled, double& stationarity) {
    stalled = false;
    for (; iters < max_iters; ++iters) {
      const double before = it.value;
      bool any = false;
      stationarity = 0.0;
      const Block blocks[3] = {Block::Pi, Block::Transition, Block::Emission};
      for (int b = 0; b < 3; ++b) {
        double move = 0.0;
        any = block_step(it, blocks[b], steps[b], move) || any;
        stationarity = std::max(stationarity, move);
      }
      if (!any) {
        stalled = stationarity > 1e-8 * std::max(1.0, std::abs(it.value));
        return !stalled;
      }
      const double decrease = before - it.value;
      if (decrease <= options.tol * std::max(std::abs(before), 1e-300)) {
        ++iters;
        return true;
      }
    }
    return false;
  };

  int iters = 0;
  bool stalled = false;
  double stationarity = 0.0;
  bool converged = descend(x, options.max_iters, iters, stalled, stationarity);

  if (stalled) {
    Rng rng(derive_seed(options.seed, 0x15));
    bool recovered = false;
    for (int r = 0; r < options.restarts && !recovered; ++r) {
      Iterate trial = x;
      Eigen::MatrixXd noise_o(M, K);
      for (int j = 0; j < K; ++j)
        for (int i = 0; i < M; ++i) noise_o(i, j) = 1e-3 * rng.normal();
      trial.O = project_o(trial.O + noise_o);
      Eigen::MatrixXd noise_q(K, K);
      for (int j = 0; j < K; ++j)
        for (int i = 0; i < K; ++i) noise_q(i, j) = 1e-3 * rng.normal();
      trial.Q = transition_project(trial.Q + noise_q);
      trial.value = objective.value(trial.pi, trial.Q, trial.O);
      bool trial_stalled = false;
      double trial_stationarity = 0.0;
      const bool ok = descend(trial, options.max_iters, iters, trial_stalled, trial_stationarity);
      if (trial.value < x.value) {
        x = std::move(trial);
        converged = ok;
        recovered = !trial_stalled;
      }
    }
    if (!recovered) {
      HmmParams best{problem.basis.kind(), x.pi, x.Q, x.O};
      throw OptimizationStalled("least-squares descent stalled away from a stationary point",
                                std::move(best), x.value);
    }
  }

  result.params = HmmParams{problem.basis.kind(), x.pi, x.Q, x.O};
  result.criterion = x.value;
  result.iterations = iters;
  result.converged = converged;
  return result;
}

}  // namespace nphmm
