#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace rgbd {

// splitmix64. All randomness in the library flows through keyed streams of
// this generator, so results are reproducible across runs and independent of
// thread count (streams are derived per work item, never shared).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller. Hand-rolled because the distribution
  // classes in <random> are not bit-portable across standard libraries.
  double gauss() {
    double u1 = 1.0 - u01();  // (0, 1]
    double u2 = u01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // Uniform integer in [0, n), unbiased (rejection sampling).
  std::uint32_t below(std::uint32_t n) {
    std::uint64_t rem = (0 - static_cast<std::uint64_t>(n)) % n;
    for (;;) {
      std::uint64_t r = next();
      if (r >= rem) return static_cast<std::uint32_t>(r % n);
    }
  }

 private:
  std::uint64_t state_;
};

// Derives an independent stream key from a base seed and a stream index.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  SplitMix64 s(seed ^ (0x9e3779b97f4a7c15ull * (stream + 1)));
  return s.next();
}

}  // namespace rgbd
