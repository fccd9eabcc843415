// How tight is the chain-level bound B on the final-state divergence J?
// Sweep the stage count on the barrier target and print both, exactly.

#include <cstdio>

#include "bread/grid_oracle.hpp"

int main() {
  const auto grid = bread::barrier_target();
  std::printf("%8s %12s %12s %8s\n", "T", "J", "B", "B/J");
  for (int t : {10, 100, 1000, 10000}) {
    const auto res = bread::grid_oracle_summary(grid, bread::linear_schedule(t));
    std::printf("%8d %12.5f %12.5f %8.3f\n", t, res.final_jeffreys, res.chain_jeffreys,
                res.chain_jeffreys / res.final_jeffreys);
  }
  return 0;
}
