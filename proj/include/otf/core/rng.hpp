#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace otf {

// Portable deterministic generator. std::mt19937_64's output sequence is fixed
// by the standard but the std distributions are not, so the draws are built
// here directly on top of the raw engine.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1).
  double uniform_open() {
    double u;
    do u = uniform();
    while (u == 0.0);
    return u;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = n == 0 ? 0 : (~std::uint64_t{0} - n + 1) % n;
    std::uint64_t r;
    do r = engine_();
    while (r < limit);
    return r % n;
  }

  // Standard normal (Box-Muller, one draw per pair of uniforms).
  double normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  template <class Range>
  void shuffle(Range& r) {
    const auto n = std::size(r);
    for (std::size_t i = n; i > 1; --i) {
      const auto j = below(i);
      using std::swap;
      swap(r[i - 1], r[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace otf
