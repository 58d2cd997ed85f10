#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "ksf/errors.hpp"

namespace ksf {

// Deterministic random source. std::mt19937_64 output is pinned by the
// standard; the distributions here are written out explicitly because the
// standard library distribution objects are not bit-portable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller transform; the sine branch is discarded to keep the
  // generator stateless between calls.
  double gaussian() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

  // Samples an index from a discrete distribution given by nonnegative
  // weights summing to ~1.
  std::size_t categorical(const std::vector<double>& probs) {
    if (probs.empty()) throw Error(errc::invalid_input, "categorical: empty distribution");
    const double u = uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return i;
    }
    return probs.size() - 1;
  }

  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ksf
