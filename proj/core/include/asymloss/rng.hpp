#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace asymloss {

/// Deterministic generator used for every random decision in the library.
///
/// Algorithm (pinned so ports can reproduce streams bit-for-bit):
///   state += 0x9E3779B97F4A7C15
///   z = state
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   return z ^ (z >> 31)
/// i.e. SplitMix64. Derived conversions:
///   uniform()        = (next() >> 11) * 2^-53                 (1 draw)
///   uniform_index(n) = high 64 bits of next() * n             (1 draw)
///   normal()         = Box-Muller cosine branch of two uniforms (2 draws)
/// Substreams for (seed, index) start from state = mix(seed) ^ mix(index + 1),
/// where mix is one SplitMix64 output step applied to the value.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

  static Rng substream(std::uint64_t seed, std::uint64_t index) noexcept;

  std::uint64_t next() noexcept;
  double uniform() noexcept;
  std::size_t uniform_index(std::size_t n) noexcept;
  double normal() noexcept;
  double normal(double mean, double stddev) noexcept { return mean + stddev * normal(); }

  // Fisher-Yates, consuming one uniform_index draw per position from the back.
  template <typename T>
  void shuffle(std::vector<T>& items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t state_;
};

std::uint64_t splitmix_mix(std::uint64_t value) noexcept;

}  // namespace asymloss
