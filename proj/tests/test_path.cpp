#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "bread/logspace.hpp"
#include "bread/models.hpp"
#include "bread/path.hpp"
#include "bread/schedule.hpp"

using namespace bread;

namespace {

// Tiny discrete model for contract tests: uniform prior over six states.
struct DieModel {
  using State = int;
  using Data = int;
  double log_prior(const State&) const { return -std::log(6.0); }
  double log_likelihood(const State& x, const Data& y) const {
    return x == y ? std::log(0.7) : std::log(0.06);
  }
};

// Simpson's rule on [-a, a]
template <class F>
double integrate(F&& f, double a, int points) {
  const double h = 2.0 * a / (points - 1);
  double acc = 0.0;
  for (int i = 0; i < points; ++i) {
    const double x = -a + h * i;
    const double w = (i == 0 || i == points - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    acc += w * f(x);
  }
  return acc * h / 3.0;
}

}  // namespace

TEST_CASE("linear_schedule endpoints and spacing") {
  const auto two = linear_schedule(2);
  CHECK(two.betas == std::vector<double>{0.0, 1.0});
  const auto five = linear_schedule(5);
  CHECK(five.betas == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
  const auto hundred = linear_schedule(100);
  CHECK_THAT(hundred[50], Catch::Matchers::WithinAbs(50.0 / 99.0, 1e-15));
  CHECK_THROWS_AS(linear_schedule(1), std::invalid_argument);
}

TEST_CASE("schedule validation") {
  CHECK_THROWS_AS(AnnealingSchedule({0.0, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(AnnealingSchedule({0.1, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(AnnealingSchedule({0.0, 0.6, 0.4, 1.0}), std::invalid_argument);
  CHECK_NOTHROW(AnnealingSchedule({0.0, 0.3, 0.3, 1.0}));
}

TEST_CASE("log_f_at endpoints are exact and beta is validated") {
  GeometricPath<double> path;
  path.log_f_initial = [](const double& x) { return -0.5 * x * x; };
  path.log_f_target = [](const double& x) { return -2.0 * std::abs(x) + 1.0; };
  const double x = 1.7;
  CHECK(log_f_at(path, 0.0, x) == path.log_f_initial(x));
  CHECK(log_f_at(path, 1.0, x) == path.log_f_target(x));
  CHECK_THROWS_AS(log_f_at(path, -0.01, x), std::invalid_argument);
  CHECK_THROWS_AS(log_f_at(path, 1.01, x), std::invalid_argument);
}

TEST_CASE("log_f_at is linear in beta") {
  GeometricPath<double> path;
  path.log_f_initial = [](const double& x) { return -0.5 * x * x + 0.3; };
  path.log_f_target = [](const double& x) { return -1.3 * x * x - 2.0 * x; };
  for (double x : {-2.0, 0.4, 3.1}) {
    const double a = log_f_at(path, 0.2, x);
    const double b = log_f_at(path, 0.5, x);
    const double c = log_f_at(path, 0.8, x);
    CHECK_THAT(b, Catch::Matchers::WithinAbs(0.5 * (a + c), 1e-12));
  }
}

TEST_CASE("log_f_at matches the hand-expanded Gaussian bridge") {
  // f_1 the standard normal density, f_T = f_1 * exp(-x^2): at beta the
  // exponent is -(0.5 + beta) x^2 - 0.5 log 2 pi.
  GeometricPath<double> path;
  path.log_f_initial = [](const double& x) { return -0.5 * x * x - 0.5 * log_two_pi; };
  path.log_f_target = [](const double& x) { return -1.5 * x * x - 0.5 * log_two_pi; };
  for (double x : {-1.5, 0.0, 0.9, 2.4}) {
    CHECK_THAT(log_f_at(path, 0.5, x),
               Catch::Matchers::WithinAbs(-x * x - 0.5 * log_two_pi, 1e-13));
  }
}

TEST_CASE("log_f_at handles zero-density endpoints") {
  GeometricPath<double> path;
  path.log_f_initial = [](const double& x) { return x > 0 ? 0.0 : log_zero; };
  path.log_f_target = [](const double&) { return 0.0; };
  CHECK(is_log_zero(log_f_at(path, 0.5, -1.0)));
  CHECK(log_f_at(path, 1.0, -1.0) == 0.0);  // zero coefficient ignores the endpoint
  GeometricPath<double> nan_path;
  nan_path.log_f_initial = [](const double&) { return std::nan(""); };
  nan_path.log_f_target = [](const double&) { return 0.0; };
  CHECK(is_log_zero(log_f_at(nan_path, 0.5, 0.0)));
}

TEST_CASE("posterior_path on a discrete model is normalized at beta zero") {
  DieModel model;
  const auto path = posterior_path(model, 3);
  double total = 0.0;
  for (int x = 0; x < 6; ++x) total += std::exp(log_f_at(path, 0.0, x));
  CHECK_THAT(total, Catch::Matchers::WithinAbs(1.0, 1e-10));
  CHECK_FALSE(path.has_gradients());
}

TEST_CASE("posterior_path target normalizer matches the conjugate closed form") {
  GaussianMeanModel model(1.3, 0.8, 5);
  RngStream rng(3);
  const auto sim = simulate_dataset(model, 99);
  const auto path = posterior_path(model, sim.data);
  // quadrature over the 1-D parameter as an independent route to Z_T
  const double z = integrate(
      [&](double t) {
        Eigen::VectorXd theta(1);
        theta[0] = t;
        return std::exp(log_f_at(path, 1.0, theta));
      },
      12.0, 4001);
  CHECK_THAT(std::log(z),
             Catch::Matchers::WithinAbs(model.log_marginal_likelihood(sim.data), 1e-8));
}

TEST_CASE("posterior_path with no observations collapses to the prior") {
  Eigen::MatrixXd x(0, 3);
  const auto model = LinRegModel::fixed_noise(x, 1.0);
  Eigen::VectorXd empty(0);
  const auto path = posterior_path(model, empty);
  Eigen::VectorXd theta(3);
  theta << 0.2, -0.7, 1.1;
  CHECK(model.log_likelihood(theta, empty) == 0.0);
  CHECK_THAT(log_f_at(path, 1.0, theta),
             Catch::Matchers::WithinAbs(log_f_at(path, 0.0, theta), 1e-14));
}

TEST_CASE("gradients combine linearly along the path") {
  Eigen::MatrixXd x(4, 2);
  x << 1.0, -0.5, 0.3, 0.8, -1.2, 0.1, 0.4, -0.9;
  const auto model = LinRegModel::fixed_noise(x, 0.7);
  Eigen::VectorXd y(4);
  y << 0.5, -0.2, 0.9, 0.0;
  const auto path = posterior_path(model, y);
  REQUIRE(path.has_gradients());
  Eigen::VectorXd theta(2);
  theta << 0.3, -0.4;
  const Eigen::VectorXd g0 = grad_log_f_at(path, 0.0, theta);
  const Eigen::VectorXd g1 = grad_log_f_at(path, 1.0, theta);
  const Eigen::VectorXd gh = grad_log_f_at(path, 0.25, theta);
  CHECK((gh - (0.75 * g0 + 0.25 * g1)).norm() < 1e-12);
}
