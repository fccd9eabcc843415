#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bread/logspace.hpp"
#include "bread/path.hpp"
#include "bread/rng.hpp"

namespace bread {

// Unnormalized distribution f(x) = exp(g(x)) over a small finite grid.
// Cells are indexed row-major; all log-potential entries are finite, so the
// exact partition function and marginals are always computable.
struct GridDistribution {
  int width = 7;
  int height = 7;
  std::vector<double> log_potential;  // row-major, height*width entries

  GridDistribution(int w, int h, std::vector<double> g)
      : width(w), height(h), log_potential(std::move(g)) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("grid: non-positive dimensions");
    if (log_potential.size() != static_cast<std::size_t>(width * height))
      throw std::invalid_argument("grid: log-potential size mismatch");
    for (double v : log_potential)
      if (!std::isfinite(v)) throw std::invalid_argument("grid: log-potential must be finite");
  }

  int size() const { return width * height; }
  int cell(int row, int col) const { return row * width + col; }
  int row(int i) const { return i / width; }
  int col(int i) const { return i % width; }
  bool inside(int r, int c) const { return r >= 0 && r < height && c >= 0 && c < width; }

  // The four coordinate-direction neighbors; -1 marks an off-grid move.
  std::array<int, 4> neighbors(int i) const {
    const int r = row(i), c = col(i);
    std::array<int, 4> out{};
    const int dr[4] = {-1, 1, 0, 0};
    const int dc[4] = {0, 0, -1, 1};
    for (int k = 0; k < 4; ++k)
      out[static_cast<std::size_t>(k)] =
          inside(r + dr[k], c + dc[k]) ? cell(r + dr[k], c + dc[k]) : -1;
    return out;
  }

  double log_partition() const {
    return log_sum_exp(std::span<const double>(log_potential));
  }

  // Exact normalized target probabilities.
  std::vector<double> target_probabilities() const {
    const double lz = log_partition();
    std::vector<double> p(log_potential.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::exp(log_potential[i] - lz);
    return p;
  }

  // Annealing path from the flat distribution (beta = 0) to the target:
  // log f_beta(x) = beta * g(x).
  GeometricPath<int> path() const {
    GeometricPath<int> p;
    p.log_f_initial = [](int) { return 0.0; };
    auto g = log_potential;
    p.log_f_target = [g](int i) { return g[static_cast<std::size_t>(i)]; };
    return p;
  }
};

// Four equal modes separated by a deep energy barrier: the center row and
// column carry log-potential -10, the 3x3 upper-right quadrant +3, and the
// remaining three quadrants 0. The +3 quadrant holds about 87% of the mass.
inline GridDistribution barrier_target() {
  const int w = 7, h = 7;
  std::vector<double> g(static_cast<std::size_t>(w * h), 0.0);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      double v = 0.0;
      if (r == 3 || c == 3)
        v = -10.0;
      else if (r < 3 && c > 3)
        v = 3.0;
      g[static_cast<std::size_t>(r * w + c)] = v;
    }
  return GridDistribution(w, h, std::move(g));
}

// Random target with i.i.d. N(0, sigma^2) log-potential entries. sigma = 2
// gives an easy, well-connected target; sigma = 10 fragments the mass into
// separated modes that a local sampler crosses slowly.
inline GridDistribution random_grid_target(double sigma, std::uint64_t seed, int width = 7,
                                           int height = 7) {
  if (sigma <= 0.0) throw std::invalid_argument("random_grid_target: sigma must be positive");
  RngStream rng(seed);
  std::vector<double> g(static_cast<std::size_t>(width * height));
  for (double& v : g) v = sigma * rng.normal();
  return GridDistribution(width, height, std::move(g));
}

}  // namespace bread
