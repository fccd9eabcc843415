#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "bread/io.hpp"
#include "bread/models.hpp"
#include "bread/protocol.hpp"

using namespace bread;

namespace {

Eigen::MatrixXd standardized_design(int n, int d, std::uint64_t seed) {
  RngStream rng(seed);
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  for (int c = 0; c < d; ++c) {
    const double mean = x.col(c).mean();
    const double sd = std::sqrt((x.col(c).array() - mean).square().sum() / n);
    x.col(c) = (x.col(c).array() - mean) / sd;
  }
  return x;
}

}  // namespace

TEST_CASE("hyperparameter estimation recovers the generating scale") {
  const auto model = LinRegModel::half_cauchy_noise(standardized_design(200, 3, 7));
  // simulate at noise scale 1
  const auto sim = simulate_matched(model, 1.0, 99);
  KernelSpec spec;
  spec.proposal_scale = 0.15;
  const double eta = estimate_hyperparameters(model, sim.data, 6000, 12, spec);
  CHECK_THAT(eta, Catch::Matchers::WithinAbs(1.0, 0.2));
  // determinism
  CHECK(estimate_hyperparameters(model, sim.data, 6000, 12, spec) == eta);
}

TEST_CASE("hyperparameter estimation rejects an empty budget") {
  const auto model = LinRegModel::half_cauchy_noise(standardized_design(10, 2, 3));
  const Eigen::VectorXd y = Eigen::VectorXd::Ones(10);
  CHECK_THROWS_AS(estimate_hyperparameters(model, y, 0, 1), std::invalid_argument);
}

TEST_CASE("matched simulation is deterministic with matching shapes") {
  const auto model = LinRegModel::half_cauchy_noise(standardized_design(40, 4, 5));
  const auto a = simulate_matched(model, 0.9, 424);
  const auto b = simulate_matched(model, 0.9, 424);
  CHECK(a.data == b.data);
  CHECK(a.params == b.params);
  CHECK(a.data.size() == 40);
  CHECK(a.params.size() == model.param_dim());
  CHECK_THAT(model.noise_scale_of(a.params), Catch::Matchers::WithinRel(0.9, 1e-12));
  // scale smoke test: simulated response dispersion comparable to target scale
  const double sd = std::sqrt((a.data.array() - a.data.mean()).square().sum() / 40.0);
  CHECK(sd > 0.9 / 3.0);
  CHECK(sd < 3.0 * (0.9 + static_cast<double>(model.weights())));
  CHECK_THROWS_AS(simulate_matched(model, 0.0, 1), std::invalid_argument);
}

TEST_CASE("refresh keeps the start for zero steps and stays deterministic") {
  const auto model = LinRegModel::half_cauchy_noise(standardized_design(20, 2, 9));
  const auto sim = simulate_matched(model, 1.0, 5);
  CHECK(refresh_posterior_sample(model, sim.data, sim.params, 0, 3) == sim.params);
  const auto a = refresh_posterior_sample(model, sim.data, sim.params, 25, 3);
  const auto b = refresh_posterior_sample(model, sim.data, sim.params, 25, 3);
  CHECK(a == b);
  CHECK(a != sim.params);
  CHECK_THROWS_AS(refresh_posterior_sample(model, sim.data, sim.params, -1, 3),
                  std::invalid_argument);
}

TEST_CASE("consistency metrics vanish for identical and shifted curves") {
  BoundCurve real, shifted;
  for (int i = 0; i < 4; ++i) {
    const int t = 10 * (i + 1);
    const double v = -50.0 + 10.0 * i;
    real.points.push_back({t, v, Direction::forward, 0.0});
    shifted.points.push_back({t, v + 17.5, Direction::forward, 0.0});
  }
  const auto same = consistency_report(real, real);
  for (double r : same.residuals) CHECK(r == 0.0);
  CHECK(same.pass);
  const auto off = consistency_report(real, shifted);
  CHECK_THAT(off.max_abs_residual, Catch::Matchers::WithinAbs(0.0, 1e-12));
  CHECK(off.pass);
}

TEST_CASE("consistency metrics flag genuinely different shapes") {
  BoundCurve real, sim;
  real.points = {{10, -40.0, Direction::forward, 0.0},
                 {100, -12.0, Direction::forward, 0.0},
                 {1000, -10.0, Direction::forward, 0.0}};
  sim.points = {{10, -40.0, Direction::forward, 0.0},
                {100, -38.0, Direction::forward, 0.0},
                {1000, -10.0, Direction::forward, 0.0}};
  const auto m = consistency_report(real, sim, 0.25);
  CHECK_FALSE(m.pass);
  CHECK(m.max_abs_residual > 5.0);
  BoundCurve mismatched;
  mismatched.points = {{10, -40.0, Direction::forward, 0.0}};
  CHECK_THROWS_AS(consistency_report(real, mismatched), std::invalid_argument);
}

TEST_CASE("the full protocol emits a structurally complete, reproducible report") {
  const auto model = LinRegModel::fixed_noise(standardized_design(20, 2, 21), 0.8);
  const auto sim = simulate_dataset(model, 77);

  ProtocolConfig pc;
  pc.stage_sweep = {32, 256};
  pc.chains = 8;
  pc.refresh_steps = {5};
  pc.hyper_budget = 100;
  pc.seed = 2020;
  pc.kernel.proposal_scale = 0.5;

  const auto report = run_bread(model, sim.data, pc);
  CHECK(report.eta_real == 0.8);  // fixed-noise models skip estimation
  CHECK(report.real_forward.points.size() == 2);
  CHECK(report.sim_forward.points.size() == 2);
  CHECK(report.sim_reverse.points.size() == 2);
  CHECK(report.gaps.size() == 2);
  CHECK(report.refresh_upper.size() == 1);
  CHECK(report.consistency.stages.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(report.sim_reverse.points[i].direction == Direction::reverse);
    CHECK(report.gaps[i].second ==
          report.sim_reverse.points[i].bound - report.sim_forward.points[i].bound);
  }

  const auto again = run_bread(model, sim.data, pc);
  CHECK(to_json(report) == to_json(again));

  CHECK_THROWS_AS(run_bread(model, Eigen::VectorXd::Ones(3), pc), std::invalid_argument);
  ProtocolConfig bad = pc;
  bad.stage_sweep = {};
  CHECK_THROWS_AS(run_bread(model, sim.data, bad), std::invalid_argument);
}

TEST_CASE("protocol gaps shrink from the smallest to the largest stage count") {
  const auto model = LinRegModel::fixed_noise(standardized_design(20, 2, 31), 0.8);
  ProtocolConfig pc;
  pc.stage_sweep = {32, 512};
  pc.chains = 8;
  pc.refresh_steps = {5};
  pc.hyper_budget = 100;
  int improved = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto sim = simulate_dataset(model, 1000 + seed);
    pc.seed = seed;
    const auto report = run_bread(model, sim.data, pc);
    if (report.gaps.back().second <= report.gaps.front().second) ++improved;
  }
  CHECK(improved >= 9);
}
