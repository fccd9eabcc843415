#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

namespace bread {

namespace detail {

// SplitMix64 finalizer, used to spread seed material before feeding the engine.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace detail

// A seeded random stream. Chains derive private substreams from
// (master seed, chain index) so results are independent of execution order.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(detail::mix64(seed)) {}

  static RngStream substream(std::uint64_t master, std::uint64_t index) {
    return RngStream(detail::mix64(master ^ detail::mix64(index + 0x51ed2701ull)));
  }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }

  // integer in [0, n)
  std::uint64_t uniform_int(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
  }

  // draw an index with the given (normalized) probabilities
  int categorical(std::span<const double> probs) {
    double u = uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace bread
