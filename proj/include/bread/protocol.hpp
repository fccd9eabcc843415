#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bread/ais.hpp"
#include "bread/models.hpp"
#include "bread/path.hpp"

// The end-to-end procedure for transferring simulated-data conclusions to a
// real dataset: estimate hyperparameters on the real data, simulate a matched
// dataset, bound the sampler's divergence with paired runs on the simulation
// (where an exact posterior sample exists), and check that forward bounds
// behave consistently across the two datasets.

namespace bread {

struct ProtocolConfig {
  std::vector<int> stage_sweep = {100, 1000, 10000};
  int chains = 16;
  std::vector<int> refresh_steps = {10, 100, 1000, 10000};
  int hyper_budget = 2000;  // MCMC steps for hyperparameter estimation
  double fix_hyper_value = 0.0;  // >0: simulate at this scale instead of the estimate
  KernelSpec kernel;
  std::uint64_t seed = 0;
  int threads = 1;
  double consistency_threshold = 0.25;  // fraction of the simulated curve's rise

  void validate() const {
    if (stage_sweep.empty()) throw std::invalid_argument("protocol: empty stage sweep");
    for (int t : stage_sweep)
      if (t < 2) throw std::invalid_argument("protocol: stage counts must be >= 2");
    if (chains < 1) throw std::invalid_argument("protocol: chains must be positive");
    if (refresh_steps.empty()) throw std::invalid_argument("protocol: empty refresh list");
    for (int l : refresh_steps)
      if (l < 0) throw std::invalid_argument("protocol: negative refresh steps");
    if (hyper_budget < 1) throw std::invalid_argument("protocol: budget must be positive");
  }
};

namespace detail {

// Stage kernel for the regression family chosen by the spec.
inline RandomWalkMhKernel protocol_rw_kernel(const KernelSpec& spec) {
  return RandomWalkMhKernel{spec.proposal_scale, spec.steps_per_stage};
}

}  // namespace detail

// Posterior inference for the noise-scale hyperparameter on the real data:
// run the kernel on the joint posterior over (weights, log scale) and return
// the posterior mean of the scale over the second half of the chain.
inline double estimate_hyperparameters(const LinRegModel& model, const Eigen::VectorXd& y,
                                       int budget, std::uint64_t seed,
                                       const KernelSpec& spec = {}) {
  if (budget < 1) throw std::invalid_argument("estimate_hyperparameters: budget must be positive");
  if (y.size() == 0) throw std::invalid_argument("estimate_hyperparameters: empty dataset");
  if (!model.has_free_noise()) return model.fixed_noise_scale();

  const auto path = posterior_path(model, y);
  const auto kernel = detail::protocol_rw_kernel(spec);
  RngStream rng = RngStream::substream(seed, 0xe7a);
  AnnealedState<Eigen::VectorXd> s =
      make_annealed(path, Eigen::VectorXd::Zero(model.param_dim()).eval());
  double acc = 0.0;
  int count = 0;
  for (int step = 0; step < budget; ++step) {
    kernel(path, 1.0, s, rng);
    if (!s.x.allFinite())
      throw std::runtime_error("estimate_hyperparameters: chain diverged to a non-finite state");
    if (step >= budget / 2) {
      acc += model.noise_scale_of(s.x);
      ++count;
    }
  }
  return acc / static_cast<double>(count);
}

// Ancestral simulation at fixed hyperparameters; the simulated dataset has
// the same shape as the real one by construction (same design matrix).
struct MatchedSimulation {
  Eigen::VectorXd params;  // full parameter vector, log scale included if free
  Eigen::VectorXd data;
  double eta;
};

inline MatchedSimulation simulate_matched(const LinRegModel& model, double eta_real,
                                          std::uint64_t seed) {
  if (eta_real <= 0.0) throw std::invalid_argument("simulate_matched: non-positive scale");
  RngStream rng(seed);
  const LinRegModel fixed = model.with_fixed_noise(eta_real);
  Eigen::VectorXd w = fixed.sample_params(rng);
  Eigen::VectorXd y = fixed.sample_data(w, rng);
  MatchedSimulation out;
  out.eta = eta_real;
  out.data = std::move(y);
  if (model.has_free_noise()) {
    out.params.resize(model.param_dim());
    out.params.head(model.weights()) = w;
    out.params[model.weights()] = std::log(eta_real);
  } else {
    out.params = std::move(w);
  }
  return out;
}

// Approximate posterior sample for the reverse chain: start from the
// simulation's parameters (hyperparameters at their data-generating values,
// which the posterior has no reason to concentrate away from) and apply L
// posterior-preserving kernel steps.
inline Eigen::VectorXd refresh_posterior_sample(const LinRegModel& model,
                                                const Eigen::VectorXd& data,
                                                const Eigen::VectorXd& start, int steps,
                                                std::uint64_t seed, const KernelSpec& spec = {}) {
  if (steps < 0) throw std::invalid_argument("refresh_posterior_sample: negative step count");
  const auto path = posterior_path(model, data);
  AnnealedState<Eigen::VectorXd> s = make_annealed(path, start);
  if (is_log_zero(s.log_f(1.0)))
    throw std::domain_error("refresh_posterior_sample: start state has zero posterior density");
  if (steps == 0) return start;
  const auto kernel = detail::protocol_rw_kernel(spec);
  RngStream rng = RngStream::substream(seed, 0x5e5);
  for (int i = 0; i < steps; ++i) kernel(path, 1.0, s, rng);
  return s.x;
}

struct ConsistencyMetrics {
  std::vector<int> stages;
  std::vector<double> residuals;        // aligned real minus aligned simulated
  double max_abs_residual = 0.0;
  std::vector<double> remaining_real;   // nats below the curve's own plateau
  std::vector<double> remaining_sim;
  double threshold_nats = 0.0;
  bool pass = true;
};

// Curves level off to different values (different datasets have different
// marginal likelihoods), so each is anchored at its largest-stage value
// before comparing. The threshold is a heuristic: a fraction of the
// simulated curve's total rise.
inline ConsistencyMetrics consistency_report(const BoundCurve& real, const BoundCurve& sim,
                                             double threshold_fraction = 0.25) {
  if (real.points.size() != sim.points.size() || real.points.empty())
    throw std::invalid_argument("consistency_report: curves need matching stage grids");
  for (std::size_t i = 0; i < real.points.size(); ++i)
    if (real.points[i].stages != sim.points[i].stages)
      throw std::invalid_argument("consistency_report: curves need matching stage grids");

  ConsistencyMetrics m;
  const double real_anchor = real.points.back().bound;
  const double sim_anchor = sim.points.back().bound;
  for (std::size_t i = 0; i < real.points.size(); ++i) {
    const double a = real.points[i].bound - real_anchor;
    const double b = sim.points[i].bound - sim_anchor;
    m.stages.push_back(real.points[i].stages);
    m.residuals.push_back(a - b);
    m.remaining_real.push_back(-a);
    m.remaining_sim.push_back(-b);
    m.max_abs_residual = std::max(m.max_abs_residual, std::abs(a - b));
  }
  const double rise = std::abs(sim.points.back().bound - sim.points.front().bound);
  m.threshold_nats = threshold_fraction * rise;
  m.pass = m.max_abs_residual <= m.threshold_nats;
  return m;
}

struct BreadReport {
  double eta_real = 0.0;
  double eta_simulated = 0.0;  // the value actually used to simulate
  BoundCurve real_forward;
  BoundCurve sim_forward;
  BoundCurve sim_reverse;                         // upper bounds per stage count
  std::vector<std::pair<int, double>> gaps;       // (stages, upper - lower) on simulated data
  std::vector<std::pair<int, double>> refresh_upper;  // (refresh steps, upper) at largest T
  ConsistencyMetrics consistency;
  ProtocolConfig config;
  bool shared_target_sample = true;
};

// The full pipeline. Deterministic given (model, data, config): every random
// stream derives from config.seed.
inline BreadReport run_bread(const LinRegModel& model, const Eigen::VectorXd& real_data,
                             const ProtocolConfig& config) {
  config.validate();
  if (real_data.size() != model.observations())
    throw std::invalid_argument("run_bread: dataset does not match the design matrix");

  BreadReport report;
  report.config = config;

  // 1. hyperparameters from the real data (identity for fixed-noise models)
  report.eta_real = model.has_free_noise()
                        ? estimate_hyperparameters(model, real_data, config.hyper_budget,
                                                   detail::mix64(config.seed ^ 0x01), config.kernel)
                        : model.fixed_noise_scale();
  report.eta_simulated = config.fix_hyper_value > 0.0 ? config.fix_hyper_value : report.eta_real;

  // 2. matched simulation
  const MatchedSimulation sim =
      simulate_matched(model, report.eta_simulated, detail::mix64(config.seed ^ 0x02));

  // 3. refreshed initializer for the reverse chains
  const int headline_refresh = config.refresh_steps.back();
  const Eigen::VectorXd refreshed =
      refresh_posterior_sample(model, sim.data, sim.params, headline_refresh,
                               detail::mix64(config.seed ^ 0x03), config.kernel);

  const auto kernel = detail::protocol_rw_kernel(config.kernel);
  const auto real_path = posterior_path(model, real_data);
  const auto sim_path = posterior_path(model, sim.data);
  auto prior_draw = [&](RngStream& rng) { return model.sample_params(rng); };

  // 4. bound curves over the stage sweep
  int sweep_index = 0;
  for (int stages : config.stage_sweep) {
    const AnnealingSchedule schedule = linear_schedule(stages);
    const std::uint64_t run_seed = detail::mix64(config.seed ^ (0x100ull + static_cast<std::uint64_t>(sweep_index)));
    ++sweep_index;

    const auto t0 = std::chrono::steady_clock::now();
    const auto fwd_real =
        forward_ais(real_path, schedule, kernel, prior_draw, config.chains,
                    detail::mix64(run_seed ^ 0x11), config.kernel, config.threads);
    const auto t1 = std::chrono::steady_clock::now();
    const auto fwd_sim =
        forward_ais(sim_path, schedule, kernel, prior_draw, config.chains,
                    detail::mix64(run_seed ^ 0x12), config.kernel, config.threads);
    const auto t2 = std::chrono::steady_clock::now();
    const auto rev_sim = reverse_ais_shared(sim_path, schedule, kernel, refreshed,
                                            config.kernel.steps_per_stage, config.chains,
                                            detail::mix64(run_seed ^ 0x13), config.kernel,
                                            config.threads);
    const auto t3 = std::chrono::steady_clock::now();
    const auto secs = [](auto a, auto b) {
      return std::chrono::duration<double>(b - a).count();
    };

    report.real_forward.points.push_back(
        {stages, fwd_real.log_mean_weight(), Direction::forward, secs(t0, t1)});
    report.sim_forward.points.push_back(
        {stages, fwd_sim.log_mean_weight(), Direction::forward, secs(t1, t2)});
    report.sim_reverse.points.push_back(
        {stages, -rev_sim.log_mean_weight(), Direction::reverse, secs(t2, t3)});
    report.gaps.emplace_back(stages,
                             -rev_sim.log_mean_weight() - fwd_sim.log_mean_weight());
  }

  // 5. sensitivity of the upper bound to the refresh length, at the largest T
  const int largest = config.stage_sweep.back();
  const AnnealingSchedule schedule = linear_schedule(largest);
  int refresh_index = 0;
  for (int steps : config.refresh_steps) {
    const Eigen::VectorXd init = refresh_posterior_sample(
        model, sim.data, sim.params, steps,
        detail::mix64(config.seed ^ (0x200ull + static_cast<std::uint64_t>(refresh_index))),
        config.kernel);
    const auto rev = reverse_ais_shared(sim_path, schedule, kernel, init,
                                        config.kernel.steps_per_stage, config.chains,
                                        detail::mix64(config.seed ^ (0x300ull + static_cast<std::uint64_t>(refresh_index))),
                                        config.kernel, config.threads);
    report.refresh_upper.emplace_back(steps, -rev.log_mean_weight());
    ++refresh_index;
  }

  // 6. real-vs-simulated consistency of the forward curves
  report.consistency =
      consistency_report(report.real_forward, report.sim_forward, config.consistency_threshold);
  return report;
}

}  // namespace bread
