#pragma once

#include "wrl/types.hpp"

#include <cstdint>
#include <random>

namespace wrl {

// Deterministic random stream. The engine is a std::mt19937_64 (whose output
// sequence is pinned by the standard); all distribution mappings are done by
// hand so that a given seed produces the same draws on every platform and
// compiler. Every stochastic operation in the library takes one of these
// explicitly -- there is no hidden global state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1).
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller. Uncached: exactly two uniforms per draw,
  // so stream consumption is independent of call history.
  double normal() {
    double u1 = 1.0 - uniform01();  // (0, 1], keeps log finite
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
  }

  // Uniform integer in [0, n).
  int uniform_int(int n) {
    int k = static_cast<int>(uniform01() * static_cast<double>(n));
    return k < n ? k : n - 1;
  }

  // Index sampled with probability proportional to probs (assumed >= 0).
  int categorical(const Vector& probs) {
    double u = uniform01() * probs.sum();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
      acc += probs(i);
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size() - 1);
  }

 private:
  std::mt19937_64 engine_;
};

// SplitMix64 step, used to derive independent stream seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for sub-stream `stream` of master seed `seed`. Trainers use fixed
// stream ids so that, e.g., target-measure sampling never perturbs rollouts.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ (stream * 0xd6e8feb86659fd93ULL));
}

}  // namespace wrl
