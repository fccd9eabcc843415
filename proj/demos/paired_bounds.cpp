// Sandwich the marginal likelihood of a conjugate regression model between
// the paired stochastic bounds and compare against the closed form.

#include <cstdio>

#include "bread/ais.hpp"
#include "bread/models.hpp"
#include "bread/path.hpp"

int main() {
  bread::RngStream rng(7);
  const int n = 40, d = 4;
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  const auto model = bread::LinRegModel::fixed_noise(x, 1.0);
  const auto sim = bread::simulate_dataset(model, 11);
  const double truth = model.log_marginal_likelihood(sim.data);

  const auto path = bread::posterior_path(model, sim.data);
  const bread::RandomWalkMhKernel kernel{0.5, 1};
  auto prior_draw = [&](bread::RngStream& r) { return model.sample_params(r); };
  auto posterior_draw = [&](bread::RngStream& r) { return model.sample_posterior(sim.data, r); };

  std::printf("true log p(y) = %.4f\n", truth);
  std::printf("%8s %12s %12s %10s\n", "T", "lower", "upper", "gap");
  for (int t : {30, 100, 300, 1000, 3000}) {
    const auto schedule = bread::linear_schedule(t);
    const auto res = bread::bdmc(path, schedule, kernel, prior_draw, posterior_draw,
                                 /*chains=*/16, /*seed=*/1234u + static_cast<unsigned>(t));
    std::printf("%8d %12.4f %12.4f %10.4f\n", t, res.lower, res.upper, res.gap);
  }
  return 0;
}
