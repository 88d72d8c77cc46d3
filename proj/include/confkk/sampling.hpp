#pragma once

// Deterministic point sampling. The generator is splitmix64: starting from a
// 64-bit seed, each draw advances the state by 0x9E3779B97F4A7C15 and mixes
// with two xor-shift-multiply rounds; doubles take the top 53 bits. The
// sequence is documented in the README so point sets can be reproduced
// outside this codebase.

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace confkk {

struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
};

// axis-aligned sampling box with an optional rejection predicate
struct SampleBox {
  std::vector<std::pair<double, double>> ranges;
  std::function<bool(std::span<const double>)> accept;  // empty = accept all
};

inline std::vector<std::vector<double>> sample_points(const SampleBox& box, int count,
                                                      std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<std::vector<double>> pts;
  pts.reserve(static_cast<std::size_t>(count));
  const int max_tries = 10000 * count + 10000;
  int tries = 0;
  while (static_cast<int>(pts.size()) < count) {
    if (++tries > max_tries)
      throw std::runtime_error("sampling box rejected too many points");
    std::vector<double> p(box.ranges.size());
    for (std::size_t i = 0; i < box.ranges.size(); ++i)
      p[i] = rng.uniform(box.ranges[i].first, box.ranges[i].second);
    if (box.accept && !box.accept(p)) continue;
    pts.push_back(std::move(p));
  }
  return pts;
}

}  // namespace confkk
