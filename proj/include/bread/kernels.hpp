#pragma once

#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include "bread/grid.hpp"
#include "bread/path.hpp"
#include "bread/rng.hpp"

namespace bread {

enum class KernelKind { grid_neighbor_mh, gaussian_random_walk_mh, hmc };

inline const char* kernel_kind_name(KernelKind k) {
  switch (k) {
    case KernelKind::grid_neighbor_mh: return "grid-neighbor-mh";
    case KernelKind::gaussian_random_walk_mh: return "gaussian-random-walk-mh";
    case KernelKind::hmc: return "hmc";
  }
  return "?";
}

// Declarative description of a transition operator; every run records one so
// results are reproducible from the persisted configuration alone.
struct KernelSpec {
  KernelKind kind = KernelKind::gaussian_random_walk_mh;
  double proposal_scale = 0.5;  // random-walk MH, standardized parameter space
  double hmc_step_size = 0.05;
  int hmc_leapfrog = 10;
  int steps_per_stage = 1;

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

// One Metropolis-Hastings step with a symmetric proposal. The proposal may
// return nullopt (e.g. an off-grid move), which counts as a rejection rather
// than being redrawn; that is what keeps the kernel reversible.
template <class State, class LogF, class Proposal>
State mh_step(const State& x, LogF&& log_f, Proposal&& propose, RngStream& rng) {
  const double current = sanitize_log_density(log_f(x));
  if (is_log_zero(current))
    throw std::domain_error("mh_step: chain is in a zero-probability state");
  std::optional<State> prop = propose(x, rng);
  if (!prop) return x;
  const double proposed = sanitize_log_density(log_f(*prop));
  if (is_log_zero(proposed)) return x;
  const double log_ratio = proposed - current;
  if (log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio) return *prop;
  return x;
}

// Uniform proposal over the four coordinate directions; off-grid moves come
// back as nullopt and the chain stays put.
inline std::optional<int> grid_neighbor_proposal(const GridDistribution& grid, int x,
                                                 RngStream& rng) {
  const auto nbrs = grid.neighbors(x);
  const int pick = static_cast<int>(rng.uniform_int(4));
  const int target = nbrs[static_cast<std::size_t>(pick)];
  if (target < 0) return std::nullopt;
  return target;
}

// Leapfrog HMC with standard Gaussian momentum. A non-finite gradient or
// position mid-trajectory rejects the whole trajectory and bumps the
// divergence counter.
inline Eigen::VectorXd hmc_step(const Eigen::VectorXd& x,
                                const std::function<double(const Eigen::VectorXd&)>& log_f,
                                const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad_log_f,
                                double step_size, int leapfrog_steps, RngStream& rng,
                                long* divergences = nullptr, bool* accepted = nullptr) {
  if (leapfrog_steps < 1) throw std::invalid_argument("hmc_step: leapfrog_steps must be >= 1");
  if (step_size <= 0.0) throw std::invalid_argument("hmc_step: step size must be positive");
  if (accepted) *accepted = false;
  const auto diverge = [&]() {
    if (divergences) ++*divergences;
    return x;
  };

  Eigen::VectorXd g = grad_log_f(x);
  if (!g.allFinite()) return diverge();

  Eigen::VectorXd p0(x.size());
  for (Eigen::Index i = 0; i < p0.size(); ++i) p0[i] = rng.normal();

  Eigen::VectorXd q = x;
  Eigen::VectorXd p = p0 + 0.5 * step_size * g;
  for (int l = 0; l < leapfrog_steps; ++l) {
    q += step_size * p;
    if (!q.allFinite()) return diverge();
    if (l + 1 < leapfrog_steps) {
      g = grad_log_f(q);
      if (!g.allFinite()) return diverge();
      p += step_size * g;
    }
  }
  g = grad_log_f(q);
  if (!g.allFinite()) return diverge();
  p += 0.5 * step_size * g;

  const double h0 = sanitize_log_density(log_f(x)) - 0.5 * p0.squaredNorm();
  const double h1 = sanitize_log_density(log_f(q)) - 0.5 * p.squaredNorm();
  if (std::isnan(h1 - h0)) return diverge();
  if (h1 - h0 >= 0.0 || std::log(rng.uniform()) < h1 - h0) {
    if (accepted) *accepted = true;
    return q;
  }
  return x;
}

// ---------------------------------------------------------------------------
// Stage kernels used by the AIS engine. A kernel application updates the
// chain state in place together with its cached endpoint log-densities and
// returns the number of divergences encountered (HMC only).

template <class State>
struct AnnealedState {
  State x;
  double log_initial = 0.0;  // log f_1(x)
  double log_target = 0.0;   // log f_T(x)

  double log_f(double beta) const { return combine_log_endpoints(log_initial, log_target, beta); }
};

template <class State>
AnnealedState<State> make_annealed(const GeometricPath<State>& path, State x) {
  AnnealedState<State> s;
  s.log_initial = sanitize_log_density(path.log_f_initial(x));
  s.log_target = sanitize_log_density(path.log_f_target(x));
  s.x = std::move(x);
  return s;
}

struct GridNeighborMhKernel {
  GridDistribution grid;
  int steps_per_stage = 1;

  long operator()(const GeometricPath<int>& path, double beta, AnnealedState<int>& s,
                  RngStream& rng) const {
    for (int step = 0; step < steps_per_stage; ++step) {
      std::optional<int> prop = grid_neighbor_proposal(grid, s.x, rng);
      if (!prop) continue;
      AnnealedState<int> cand = make_annealed(path, *prop);
      const double log_ratio = cand.log_f(beta) - s.log_f(beta);
      if (log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio) s = cand;
    }
    return 0;
  }
};

struct RandomWalkMhKernel {
  double scale = 0.5;
  int steps_per_stage = 1;

  long operator()(const GeometricPath<Eigen::VectorXd>& path, double beta,
                  AnnealedState<Eigen::VectorXd>& s, RngStream& rng) const {
    for (int step = 0; step < steps_per_stage; ++step) {
      Eigen::VectorXd prop = s.x;
      for (Eigen::Index i = 0; i < prop.size(); ++i) prop[i] += scale * rng.normal();
      AnnealedState<Eigen::VectorXd> cand = make_annealed(path, std::move(prop));
      const double cur = s.log_f(beta);
      const double alt = cand.log_f(beta);
      if (is_log_zero(alt)) continue;
      if (alt - cur >= 0.0 || std::log(rng.uniform()) < alt - cur) s = std::move(cand);
    }
    return 0;
  }
};

struct HmcKernel {
  double step_size = 0.05;
  int leapfrog_steps = 10;
  int steps_per_stage = 1;

  long operator()(const GeometricPath<Eigen::VectorXd>& path, double beta,
                  AnnealedState<Eigen::VectorXd>& s, RngStream& rng) const {
    if (!path.has_gradients())
      throw std::invalid_argument("hmc kernel requires a path with gradients");
    long divergences = 0;
    auto log_f = [&](const Eigen::VectorXd& q) { return log_f_at(path, beta, q); };
    auto grad = [&](const Eigen::VectorXd& q) { return grad_log_f_at(path, beta, q); };
    for (int step = 0; step < steps_per_stage; ++step) {
      bool accepted = false;
      Eigen::VectorXd next =
          hmc_step(s.x, log_f, grad, step_size, leapfrog_steps, rng, &divergences, &accepted);
      if (accepted) s = make_annealed(path, std::move(next));
    }
    return divergences;
  }
};

// ---------------------------------------------------------------------------
// Exact MH kernel matrix on a grid at inverse temperature beta. Row i holds
// the probabilities of moving from cell i; the diagonal absorbs both off-grid
// proposals and MH rejections, so every row sums to one exactly.

inline Eigen::MatrixXd transition_matrix(const GridDistribution& grid, double beta,
                                         int sweeps = 1) {
  if (beta < 0.0 || beta > 1.0) throw std::invalid_argument("transition_matrix: beta outside [0,1]");
  if (sweeps < 1) throw std::invalid_argument("transition_matrix: sweeps must be >= 1");
  const int n = grid.size();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double stay = 0.0;
    for (int j : grid.neighbors(i)) {
      if (j < 0) {
        stay += 0.25;  // off-grid proposal, rejected
        continue;
      }
      const double lr = beta * (grid.log_potential[static_cast<std::size_t>(j)] -
                                grid.log_potential[static_cast<std::size_t>(i)]);
      const double accept = lr >= 0.0 ? 1.0 : std::exp(lr);
      m(i, j) = 0.25 * accept;
      stay += 0.25 * (1.0 - accept);
    }
    m(i, i) = stay;
  }
  if (sweeps > 1) {
    Eigen::MatrixXd acc = m;
    for (int s = 1; s < sweeps; ++s) acc = acc * m;
    return acc;
  }
  return m;
}

}  // namespace bread
