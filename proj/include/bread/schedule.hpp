#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace bread {

// Inverse-temperature schedule beta_1 = 0 <= ... <= beta_T = 1 defining the
// sequence of intermediate distributions.
struct AnnealingSchedule {
  std::vector<double> betas;

  explicit AnnealingSchedule(std::vector<double> b) : betas(std::move(b)) {
    if (betas.size() < 2) throw std::invalid_argument("schedule needs at least two stages");
    if (betas.front() != 0.0 || betas.back() != 1.0)
      throw std::invalid_argument("schedule must start at beta=0 and end at beta=1");
    for (std::size_t i = 1; i < betas.size(); ++i)
      if (betas[i] < betas[i - 1]) throw std::invalid_argument("schedule must be non-decreasing");
  }

  int stages() const { return static_cast<int>(betas.size()); }
  double operator[](int t) const { return betas[static_cast<std::size_t>(t)]; }
};

// beta_t = (t-1)/(T-1); the endpoints come out exact.
inline AnnealingSchedule linear_schedule(int stages) {
  if (stages < 2) throw std::invalid_argument("linear_schedule: need at least two stages");
  std::vector<double> b(static_cast<std::size_t>(stages));
  for (int t = 0; t < stages; ++t)
    b[static_cast<std::size_t>(t)] = static_cast<double>(t) / static_cast<double>(stages - 1);
  b.front() = 0.0;
  b.back() = 1.0;
  return AnnealingSchedule(std::move(b));
}

}  // namespace bread
