#pragma once

#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "bread/direction.hpp"
#include "bread/kernels.hpp"
#include "bread/logspace.hpp"
#include "bread/path.hpp"
#include "bread/rng.hpp"
#include "bread/schedule.hpp"

// Annealed importance sampling in both directions, and the paired-bound (gap)
// estimators built on top.
//
// Forward run over beta_1 ... beta_T: draw x_1 exactly from p_1, and for each
// stage t >= 2 first multiply the weight by f_t(x_{t-1}) / f_{t-1}(x_{t-1}),
// then move the state with the kernel that leaves p_t invariant. The mean
// weight is an unbiased estimate of Z_T / Z_1 after every stage.
//
// Reverse run: draw x_T exactly from p_T and run the same procedure
// backwards, which reverses the order of operations within a stage: for each
// stage t from T down to 2, first move with the kernel that leaves p_t
// invariant, then multiply the weight by f_{t-1}(x_{t-1}) / f_t(x_{t-1})
// evaluated at the state the kernel just produced. This makes the reverse
// chain law exactly the time-reversal of the forward one, so the mean reverse
// weight is an unbiased estimate of Z_1 / Z_T and the expected gap between
// the two log estimates equals the Jeffreys divergence between the chain
// laws. (Reversing the stage loop without also swapping the update order
// shifts every kernel by one stage and breaks that identity.)

namespace bread {

// Per-chain, per-stage record of one AIS run. log_weights[k][t] is the
// cumulative log weight of chain k after the stage-t update; column 0 is
// identically zero (w_1 = 1).
template <class State>
struct AisRun {
  Direction direction = Direction::forward;
  int chains = 0;
  AnnealingSchedule schedule{std::vector<double>{0.0, 1.0}};
  KernelSpec kernel;
  std::uint64_t seed = 0;
  std::vector<std::vector<double>> log_weights;
  std::vector<State> final_states;
  long divergences = 0;
  // reverse runs only: chains were seeded from one shared target sample
  // (refreshed per chain) instead of independent exact draws
  bool shared_target_sample = false;

  int stages() const { return schedule.stages(); }

  std::vector<double> final_chain_log_weights() const {
    std::vector<double> out(static_cast<std::size_t>(chains));
    for (int k = 0; k < chains; ++k)
      out[static_cast<std::size_t>(k)] = log_weights[static_cast<std::size_t>(k)].back();
    return out;
  }

  // log of the chain-averaged weight estimate at the final stage
  double log_mean_weight() const {
    const auto w = final_chain_log_weights();
    return log_mean_exp(std::span<const double>(w));
  }
};

namespace detail {

// Weight increment log f_to(x) - log f_from(x) with the -inf cases resolved:
// a state outside the support of the destination density kills the weight.
inline double weight_increment(double log_initial, double log_target, double beta_from,
                               double beta_to) {
  if (std::isfinite(log_initial) && std::isfinite(log_target))
    return (beta_to - beta_from) * (log_target - log_initial);
  const double to = combine_log_endpoints(log_initial, log_target, beta_to);
  const double from = combine_log_endpoints(log_initial, log_target, beta_from);
  if (is_log_zero(to)) return log_zero;
  if (is_log_zero(from)) return std::numeric_limits<double>::infinity();
  return to - from;
}

inline void run_chains(int chains, int threads, const std::function<void(int)>& body) {
  if (threads <= 1 || chains <= 1) {
    for (int k = 0; k < chains; ++k) body(k);
    return;
  }
  const int workers = std::min(threads, chains);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w]() {
      try {
        for (int k = w; k < chains; k += workers) body(k);
      } catch (...) {
        std::scoped_lock lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

// Forward AIS. init_sampler(rng) must draw exact samples from p_1.
template <class State, class Kernel, class InitSampler>
AisRun<State> forward_ais(const GeometricPath<State>& path, const AnnealingSchedule& schedule,
                          const Kernel& kernel, InitSampler&& init_sampler, int chains,
                          std::uint64_t seed, const KernelSpec& spec = {}, int threads = 1) {
  if (chains < 1) throw std::invalid_argument("forward_ais: need at least one chain");
  const int stages = schedule.stages();
  AisRun<State> run;
  run.direction = Direction::forward;
  run.chains = chains;
  run.schedule = schedule;
  run.kernel = spec;
  run.seed = seed;
  run.log_weights.assign(static_cast<std::size_t>(chains),
                         std::vector<double>(static_cast<std::size_t>(stages), 0.0));
  run.final_states.resize(static_cast<std::size_t>(chains));
  std::vector<long> divergences(static_cast<std::size_t>(chains), 0);

  detail::run_chains(chains, threads, [&](int k) {
    RngStream rng = RngStream::substream(seed, static_cast<std::uint64_t>(k));
    AnnealedState<State> s = make_annealed(path, init_sampler(rng));
    if (is_log_zero(s.log_f(schedule[0])))
      throw std::domain_error("forward_ais: initial state has zero density under p_1");
    auto& lw = run.log_weights[static_cast<std::size_t>(k)];
    long divs = 0;
    double acc = 0.0;
    for (int t = 1; t < stages; ++t) {
      acc += detail::weight_increment(s.log_initial, s.log_target, schedule[t - 1], schedule[t]);
      lw[static_cast<std::size_t>(t)] = acc;
      divs += kernel(path, schedule[t], s, rng);
    }
    run.final_states[static_cast<std::size_t>(k)] = s.x;
    divergences[static_cast<std::size_t>(k)] = divs;
  });

  for (long d : divergences) run.divergences += d;
  return run;
}

// Reverse AIS with independent exact target samples, one per chain.
// target_sampler(rng) must draw from p_T.
template <class State, class Kernel, class TargetSampler>
AisRun<State> reverse_ais(const GeometricPath<State>& path, const AnnealingSchedule& schedule,
                          const Kernel& kernel, TargetSampler&& target_sampler, int chains,
                          std::uint64_t seed, const KernelSpec& spec = {}, int threads = 1) {
  if (chains < 1) throw std::invalid_argument("reverse_ais: need at least one chain");
  if constexpr (requires { static_cast<bool>(target_sampler); }) {
    if (!static_cast<bool>(target_sampler))
      throw std::invalid_argument("reverse_ais: missing target sample source");
  }
  const int stages = schedule.stages();
  AisRun<State> run;
  run.direction = Direction::reverse;
  run.chains = chains;
  run.schedule = schedule;
  run.kernel = spec;
  run.seed = seed;
  run.log_weights.assign(static_cast<std::size_t>(chains),
                         std::vector<double>(static_cast<std::size_t>(stages), 0.0));
  run.final_states.resize(static_cast<std::size_t>(chains));
  std::vector<long> divergences(static_cast<std::size_t>(chains), 0);

  detail::run_chains(chains, threads, [&](int k) {
    RngStream rng = RngStream::substream(seed, static_cast<std::uint64_t>(k));
    AnnealedState<State> s = make_annealed(path, target_sampler(rng));
    if (is_log_zero(s.log_f(schedule[stages - 1])))
      throw std::domain_error("reverse_ais: target sample has zero density under p_T");
    auto& lw = run.log_weights[static_cast<std::size_t>(k)];
    long divs = 0;
    double acc = 0.0;
    int idx = 1;
    for (int t = stages - 1; t >= 1; --t, ++idx) {
      divs += kernel(path, schedule[t], s, rng);
      acc += detail::weight_increment(s.log_initial, s.log_target, schedule[t], schedule[t - 1]);
      lw[static_cast<std::size_t>(idx)] = acc;
    }
    run.final_states[static_cast<std::size_t>(k)] = s.x;
    divergences[static_cast<std::size_t>(k)] = divs;
  });

  for (long d : divergences) run.divergences += d;
  return run;
}

// Reverse AIS when only a single exact target sample exists (the simulated
// data setting). Every chain starts from the same sample after refresh_steps
// applications of the target-invariant kernel with its private stream; the
// run is flagged so reports can tell the two regimes apart.
template <class State, class Kernel>
AisRun<State> reverse_ais_shared(const GeometricPath<State>& path,
                                 const AnnealingSchedule& schedule, const Kernel& kernel,
                                 const State& target_sample, int refresh_steps, int chains,
                                 std::uint64_t seed, const KernelSpec& spec = {},
                                 int threads = 1) {
  if (refresh_steps < 0) throw std::invalid_argument("reverse_ais_shared: negative refresh steps");
  auto sampler = [&](RngStream& rng) {
    AnnealedState<State> s = make_annealed(path, target_sample);
    for (int i = 0; i < refresh_steps; ++i) kernel(path, 1.0, s, rng);
    return s.x;
  };
  AisRun<State> run =
      reverse_ais(path, schedule, kernel, sampler, chains, seed, spec, threads);
  run.shared_target_sample = true;
  return run;
}

// ---------------------------------------------------------------------------
// Paired bounds.

struct BdmcResult {
  double lower = 0.0;  // log of the mean forward weight
  double upper = 0.0;  // minus the log of the mean reverse weight
  double gap = 0.0;    // upper - lower
  std::vector<double> chain_lower;  // per-chain forward log weights
  std::vector<double> chain_upper;  // per-chain negated reverse log weights
  long forward_divergences = 0;
  long reverse_divergences = 0;
  bool shared_target_sample = false;
  // configuration fingerprints used to reject mismatched pairings
  std::vector<double> forward_betas, reverse_betas;
  KernelSpec forward_kernel, reverse_kernel;
};

template <class State>
BdmcResult make_bdmc_result(const AisRun<State>& forward, const AisRun<State>& reverse) {
  if (forward.direction != Direction::forward || reverse.direction != Direction::reverse)
    throw std::invalid_argument("make_bdmc_result: need one forward and one reverse run");
  BdmcResult res;
  res.lower = forward.log_mean_weight();
  res.upper = -reverse.log_mean_weight();
  res.gap = res.upper - res.lower;
  res.chain_lower = forward.final_chain_log_weights();
  res.chain_upper = reverse.final_chain_log_weights();
  for (auto& v : res.chain_upper) v = -v;
  res.forward_divergences = forward.divergences;
  res.reverse_divergences = reverse.divergences;
  res.shared_target_sample = reverse.shared_target_sample;
  res.forward_betas = forward.schedule.betas;
  res.reverse_betas = reverse.schedule.betas;
  res.forward_kernel = forward.kernel;
  res.reverse_kernel = reverse.kernel;
  return res;
}

// Run both directions with seeds derived from one master seed.
template <class State, class Kernel, class InitSampler, class TargetSampler>
BdmcResult bdmc(const GeometricPath<State>& path, const AnnealingSchedule& schedule,
                const Kernel& kernel, InitSampler&& init_sampler, TargetSampler&& target_sampler,
                int chains, std::uint64_t seed, const KernelSpec& spec = {}, int threads = 1) {
  const auto fwd = forward_ais(path, schedule, kernel, init_sampler, chains,
                               detail::mix64(seed ^ 0x666f7277ull), spec, threads);
  const auto rev = reverse_ais(path, schedule, kernel, target_sampler, chains,
                               detail::mix64(seed ^ 0x72657665ull), spec, threads);
  return make_bdmc_result(fwd, rev);
}

// The gap estimator whose expectation upper-bounds the Jeffreys divergence
// between the target and the distribution of forward final states. Refuses
// results assembled from runs with different schedules or kernels.
inline double jeffreys_gap(const BdmcResult& result) {
  if (result.forward_betas != result.reverse_betas)
    throw std::invalid_argument("jeffreys_gap: forward/reverse schedules differ");
  if (!(result.forward_kernel == result.reverse_kernel))
    throw std::invalid_argument("jeffreys_gap: forward/reverse kernels differ");
  return result.gap;
}

// One point of a bound-versus-effort curve.
struct CurvePoint {
  int stages = 0;
  double bound = 0.0;
  Direction direction = Direction::forward;
  double wall_seconds = 0.0;  // diagnostics only; never serialized to artifacts
};

struct BoundCurve {
  std::vector<CurvePoint> points;
};

// Per-stage bound trajectory of a single run: the log mean cumulative weight
// at every stage, shifted by the known log normalizer of the run's initial
// distribution, negated for reverse runs.
template <class State>
BoundCurve stochastic_bounds(const AisRun<State>& run, double known_log_z1) {
  if (run.chains < 1) throw std::invalid_argument("stochastic_bounds: empty run");
  BoundCurve curve;
  const int stages = run.stages();
  curve.points.reserve(static_cast<std::size_t>(stages));
  std::vector<double> column(static_cast<std::size_t>(run.chains));
  for (int t = 0; t < stages; ++t) {
    for (int k = 0; k < run.chains; ++k)
      column[static_cast<std::size_t>(k)] =
          run.log_weights[static_cast<std::size_t>(k)][static_cast<std::size_t>(t)];
    const double lme = log_mean_exp(std::span<const double>(column));
    const double value =
        run.direction == Direction::forward ? lme + known_log_z1 : -lme + known_log_z1;
    curve.points.push_back({t + 1, value, run.direction, 0.0});
  }
  return curve;
}

// One-sided KL bound from a single run plus a trusted bound on log(Z_T/Z_1)
// from elsewhere: a forward run with an upper reference bounds
// D_KL(q_fwd(x_T) || p_T) in expectation; a reverse run with a lower
// reference bounds D_KL(p_T || q_fwd(x_T)).
enum class BoundSide { lower, upper };

template <class State>
double one_sided_kl_bound(const AisRun<State>& run, double reference_bound, BoundSide side) {
  if (run.direction == Direction::forward) {
    if (side != BoundSide::upper)
      throw std::invalid_argument("one_sided_kl_bound: forward run needs an upper reference");
    return reference_bound - run.log_mean_weight();
  }
  if (side != BoundSide::lower)
    throw std::invalid_argument("one_sided_kl_bound: reverse run needs a lower reference");
  return -run.log_mean_weight() - reference_bound;
}

}  // namespace bread
