#pragma once

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <vector>

#include "bread/direction.hpp"
#include "bread/grid.hpp"
#include "bread/kernels.hpp"
#include "bread/schedule.hpp"

// Exact computation of the divergences an annealing run incurs on a small
// finite grid. Both the forward chain (start flat, anneal up) and its
// time-reversal (start at the exact target, apply the same kernels in
// reverse order) are Markov chains, so every single-site and adjacent-pair
// marginal is computable by one forward-backward style pass. From those
// marginals we obtain
//   J  -- Jeffreys divergence between the target and the distribution of the
//         chain's final state (what a user of approximate samples cares
//         about), and
//   B  -- Jeffreys divergence between the laws of the two whole chains,
//         which equals the expected gap between the paired stochastic bounds
//         and upper-bounds J.

namespace bread {

namespace detail {

// Sparse MH kernel at one inverse temperature: per-cell neighbor move
// probabilities plus the stay mass (off-grid proposals and MH rejections).
struct GridStageKernel {
  std::vector<std::array<double, 4>> move;
  std::vector<double> stay;

  void build(const GridDistribution& grid, double beta) {
    const int n = grid.size();
    move.assign(static_cast<std::size_t>(n), {0.0, 0.0, 0.0, 0.0});
    stay.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      const auto nbrs = grid.neighbors(i);
      for (int k = 0; k < 4; ++k) {
        const int j = nbrs[static_cast<std::size_t>(k)];
        if (j < 0) {
          s += 0.25;
          continue;
        }
        const double lr = beta * (grid.log_potential[static_cast<std::size_t>(j)] -
                                  grid.log_potential[static_cast<std::size_t>(i)]);
        const double accept = lr >= 0.0 ? 1.0 : std::exp(lr);
        move[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = 0.25 * accept;
        s += 0.25 * (1.0 - accept);
      }
      stay[static_cast<std::size_t>(i)] = s;
    }
  }

  // out = in * K (row vector times kernel matrix)
  void propagate(const GridDistribution& grid, const Eigen::VectorXd& in,
                 Eigen::VectorXd& out) const {
    out.setZero();
    const int n = grid.size();
    for (int i = 0; i < n; ++i) {
      const double mass = in[i];
      if (mass == 0.0) continue;
      out[i] += mass * stay[static_cast<std::size_t>(i)];
      const auto nbrs = grid.neighbors(i);
      for (int k = 0; k < 4; ++k) {
        const int j = nbrs[static_cast<std::size_t>(k)];
        if (j >= 0) out[j] += mass * move[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
      }
    }
  }
};

inline double kl_discrete(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) acc += p[i] * (std::log(p[i]) - std::log(q[i]));
  return acc;
}

}  // namespace detail

// Per-stage marginals of one chain law in forward time: single_site[t] is the
// distribution of the chain position t (0-based), pairwise(t) the joint of
// positions (t, t+1). Pairwise marginals are formed on demand so a long
// schedule only ever holds the single-site vectors.
struct ChainMarginals {
  Direction direction;
  GridDistribution grid;
  AnnealingSchedule schedule;
  int sweeps = 1;
  std::vector<Eigen::VectorXd> single_site;

  Eigen::MatrixXd pairwise(int t) const {
    const int stages = schedule.stages();
    if (t < 0 || t + 1 >= stages) throw std::invalid_argument("pairwise: stage out of range");
    const Eigen::MatrixXd k = transition_matrix(grid, schedule[t + 1], sweeps);
    const auto& a = single_site[static_cast<std::size_t>(t)];
    const auto& b = single_site[static_cast<std::size_t>(t + 1)];
    if (direction == Direction::forward) return a.asDiagonal() * k;
    // reverse chain joint: q(x_t = i, x_{t+1} = j) = r_{t+1}(j) K(j -> i)
    return k.transpose() * b.asDiagonal();
  }
};

inline Eigen::VectorXd flat_distribution(const GridDistribution& grid) {
  return Eigen::VectorXd::Constant(grid.size(), 1.0 / static_cast<double>(grid.size()));
}

inline Eigen::VectorXd target_distribution(const GridDistribution& grid) {
  const auto p = grid.target_probabilities();
  return Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
}

// Marginals of the forward chain: position 0 is exactly p_1 (flat, since the
// beta = 0 endpoint of the geometric path is uniform), and each transition to
// position t targets beta_t.
inline ChainMarginals forward_chain_marginals(const GridDistribution& grid,
                                              const AnnealingSchedule& schedule, int sweeps = 1) {
  ChainMarginals out{Direction::forward, grid, schedule, sweeps, {}};
  const int stages = schedule.stages();
  out.single_site.reserve(static_cast<std::size_t>(stages));
  Eigen::VectorXd m = flat_distribution(grid);
  Eigen::VectorXd next(grid.size());
  out.single_site.push_back(m);
  detail::GridStageKernel kernel;
  for (int t = 1; t < stages; ++t) {
    if (sweeps == 1) {
      kernel.build(grid, schedule[t]);
      kernel.propagate(grid, m, next);
      m = next;
    } else {
      m = (transition_matrix(grid, schedule[t], sweeps).transpose() * m).eval();
    }
    m /= m.sum();
    out.single_site.push_back(m);
  }
  return out;
}

// Marginals of the reversed chain: position T-1 is the exact target, and the
// same kernels are applied in reverse chain order, so position t-1 arises
// from position t through the kernel targeting beta_t.
inline ChainMarginals reverse_chain_marginals(const GridDistribution& grid,
                                              const AnnealingSchedule& schedule, int sweeps = 1) {
  ChainMarginals out{Direction::reverse, grid, schedule, sweeps, {}};
  const int stages = schedule.stages();
  out.single_site.assign(static_cast<std::size_t>(stages), Eigen::VectorXd());
  Eigen::VectorXd r = target_distribution(grid);
  Eigen::VectorXd next(grid.size());
  out.single_site[static_cast<std::size_t>(stages - 1)] = r;
  detail::GridStageKernel kernel;
  for (int t = stages - 1; t >= 1; --t) {
    if (sweeps == 1) {
      kernel.build(grid, schedule[t]);
      kernel.propagate(grid, r, next);
      r = next;
    } else {
      r = (transition_matrix(grid, schedule[t], sweeps).transpose() * r).eval();
    }
    r /= r.sum();
    out.single_site[static_cast<std::size_t>(t - 1)] = r;
  }
  return out;
}

// Everything the exact pass produces. log_partition_gap is
// log Z_T - log Z_1 for the flat-to-target path (Z_1 = number of cells).
struct GridOracleResult {
  double final_jeffreys = 0.0;       // J
  double chain_jeffreys = 0.0;       // B
  double kl_forward_reverse = 0.0;   // D_KL(q_fwd || q_rev)
  double kl_reverse_forward = 0.0;   // D_KL(q_rev || q_fwd)
  double kl_target_final = 0.0;      // D_KL(p_T || q_fwd(x_T))
  double kl_final_target = 0.0;      // D_KL(q_fwd(x_T) || p_T)
  double expected_logw_forward = 0.0;
  double expected_logw_reverse = 0.0;
  double log_partition_gap = 0.0;
};

// One pass over the schedule computing J, B, both one-sided chain KLs and the
// exact expected log-weights. Reverse marginals are computed and stored
// first (49 doubles per stage); the forward marginals stream.
inline GridOracleResult grid_oracle_summary(const GridDistribution& grid,
                                            const AnnealingSchedule& schedule, int sweeps = 1) {
  GridOracleResult res;
  const int stages = schedule.stages();
  const int n = grid.size();
  const Eigen::VectorXd target = target_distribution(grid);
  const Eigen::Map<const Eigen::VectorXd> g(grid.log_potential.data(), n);

  // backward pass: r[t] = reverse-chain marginal at position t
  std::vector<Eigen::VectorXd> r(static_cast<std::size_t>(stages));
  {
    Eigen::VectorXd cur = target;
    Eigen::VectorXd next(n);
    r[static_cast<std::size_t>(stages - 1)] = cur;
    detail::GridStageKernel kernel;
    for (int t = stages - 1; t >= 1; --t) {
      if (sweeps == 1) {
        kernel.build(grid, schedule[t]);
        kernel.propagate(grid, cur, next);
        cur = next;
      } else {
        cur = (transition_matrix(grid, schedule[t], sweeps).transpose() * cur).eval();
      }
      cur /= cur.sum();
      r[static_cast<std::size_t>(t - 1)] = cur;
    }
  }

  // forward pass, accumulating the chain KLs stage by stage
  Eigen::VectorXd m = flat_distribution(grid);
  Eigen::VectorXd next(n);
  double kl_fr = detail::kl_discrete(m, r[0]);
  double kl_rf = detail::kl_discrete(r[0], m);
  detail::GridStageKernel kernel;
  Eigen::MatrixXd dense;
  for (int t = 0; t + 1 < stages; ++t) {
    const double dbeta = schedule[t + 1] - schedule[t];
    const auto& rt = r[static_cast<std::size_t>(t)];
    const auto& rt1 = r[static_cast<std::size_t>(t + 1)];
    res.expected_logw_forward += dbeta * m.dot(g);
    res.expected_logw_reverse -= dbeta * rt.dot(g);

    // Adjacent-pair expectations of the log conditional ratios. The forward
    // conditional is the kernel entry itself; the reverse conditional in
    // forward time is r_{t+1}(j) K(j->i) / r_t(i). Terms are only accumulated
    // where the corresponding joint puts mass, and MH kernels give the two
    // joints identical support.
    const auto add_pair = [&](int i, int j, double kij, double kji) {
      const double qf = m[i] * kij;
      const double qr = rt1[j] * kji;
      if (qf > 0.0 && kji <= 0.0) {
        // forward mass on a transition the reverse chain cannot make; the
        // divergence is genuinely infinite (never the case for MH kernels
        // with shared support)
        std::fprintf(stderr, "[bread] chain KL is infinite at pair (%d,%d)\n", i, j);
        kl_fr = std::numeric_limits<double>::infinity();
        return;
      }
      if (qf > 0.0)
        kl_fr += qf * (std::log(kij) - std::log(rt1[j]) - std::log(kji) + std::log(rt[i]));
      if (qr > 0.0)
        kl_rf += qr * (std::log(rt1[j]) + std::log(kji) - std::log(rt[i]) - std::log(kij));
    };

    if (sweeps == 1) {
      kernel.build(grid, schedule[t + 1]);
      for (int i = 0; i < n; ++i) {
        add_pair(i, i, kernel.stay[static_cast<std::size_t>(i)],
                 kernel.stay[static_cast<std::size_t>(i)]);
        const auto nbrs = grid.neighbors(i);
        for (int k = 0; k < 4; ++k) {
          const int j = nbrs[static_cast<std::size_t>(k)];
          if (j < 0) continue;
          const double kij = kernel.move[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
          // locate the reverse entry j -> i
          const auto back = grid.neighbors(j);
          double kji = 0.0;
          for (int k2 = 0; k2 < 4; ++k2)
            if (back[static_cast<std::size_t>(k2)] == i)
              kji = kernel.move[static_cast<std::size_t>(j)][static_cast<std::size_t>(k2)];
          add_pair(i, j, kij, kji);
        }
      }
      kernel.propagate(grid, m, next);
      m = next;
    } else {
      dense = transition_matrix(grid, schedule[t + 1], sweeps);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          if (dense(i, j) <= 0.0 && dense(j, i) <= 0.0) continue;
          add_pair(i, j, dense(i, j), dense(j, i));
        }
      m = (dense.transpose() * m).eval();
    }
    m /= m.sum();
  }

  res.kl_forward_reverse = kl_fr;
  res.kl_reverse_forward = kl_rf;
  res.chain_jeffreys = kl_fr + kl_rf;
  res.kl_target_final = detail::kl_discrete(target, m);
  res.kl_final_target = detail::kl_discrete(m, target);
  res.final_jeffreys = res.kl_target_final + res.kl_final_target;
  res.log_partition_gap = grid.log_partition() - std::log(static_cast<double>(n));
  return res;
}

// Jeffreys divergence between the target and the law of the final chain
// state.
inline double exact_final_jeffreys(const GridDistribution& grid, const AnnealingSchedule& schedule,
                                   int sweeps = 1) {
  const int stages = schedule.stages();
  Eigen::VectorXd m = flat_distribution(grid);
  Eigen::VectorXd next(grid.size());
  detail::GridStageKernel kernel;
  for (int t = 1; t < stages; ++t) {
    if (sweeps == 1) {
      kernel.build(grid, schedule[t]);
      kernel.propagate(grid, m, next);
      m = next;
    } else {
      m = (transition_matrix(grid, schedule[t], sweeps).transpose() * m).eval();
    }
    m /= m.sum();
  }
  const Eigen::VectorXd target = target_distribution(grid);
  return detail::kl_discrete(target, m) + detail::kl_discrete(m, target);
}

// Jeffreys divergence between the laws of the whole forward and reversed
// chains; the expected gap of a paired bound run, and an upper bound on the
// final-state divergence.
inline double exact_chain_jeffreys(const GridDistribution& grid, const AnnealingSchedule& schedule,
                                   int sweeps = 1) {
  return grid_oracle_summary(grid, schedule, sweeps).chain_jeffreys;
}

// E[log w] under the exact chain law, from single-site marginals.
inline double exact_expected_logw(const GridDistribution& grid, const AnnealingSchedule& schedule,
                                  Direction direction, int sweeps = 1) {
  const int stages = schedule.stages();
  const int n = grid.size();
  const Eigen::Map<const Eigen::VectorXd> g(grid.log_potential.data(), n);
  double acc = 0.0;
  detail::GridStageKernel kernel;
  Eigen::VectorXd next(n);
  if (direction == Direction::forward) {
    Eigen::VectorXd m = flat_distribution(grid);
    for (int t = 0; t + 1 < stages; ++t) {
      acc += (schedule[t + 1] - schedule[t]) * m.dot(g);
      if (sweeps == 1) {
        kernel.build(grid, schedule[t + 1]);
        kernel.propagate(grid, m, next);
        m = next;
      } else {
        m = (transition_matrix(grid, schedule[t + 1], sweeps).transpose() * m).eval();
      }
      m /= m.sum();
    }
  } else {
    Eigen::VectorXd r = target_distribution(grid);
    for (int t = stages - 1; t >= 1; --t) {
      if (sweeps == 1) {
        kernel.build(grid, schedule[t]);
        kernel.propagate(grid, r, next);
        r = next;
      } else {
        r = (transition_matrix(grid, schedule[t], sweeps).transpose() * r).eval();
      }
      r /= r.sum();
      acc += (schedule[t - 1] - schedule[t]) * r.dot(g);
    }
  }
  return acc;
}

inline double total_variation(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  return 0.5 * (p - q).cwiseAbs().sum();
}

}  // namespace bread
