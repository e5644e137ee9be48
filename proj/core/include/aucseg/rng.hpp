#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>

namespace aucseg {

/// SplitMix64 step (Steele, Lea & Flood). Used for seeding and for deriving
/// independent sub-streams.
///   z += 0x9E3779B97F4A7C15
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   return z ^ (z >> 31)
std::uint64_t splitmix64(std::uint64_t& state) noexcept;

/// xoshiro256** 1.0 (Blackman & Vigna), state filled by four SplitMix64
/// outputs from the seed. Every stochastic routine in the library draws from
/// this generator, and every derived quantity below is defined in terms of
/// next() alone, so streams are reproducible on any platform:
///   uniform()   = (next() >> 11) * 2^-53
///   below(n)    = Lemire multiply-shift with rejection
///   normal()    = Box-Muller, cos branch, u1 = 1 - uniform(), u2 = uniform()
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) noexcept;

  /// Generator for stream `stream` of `seed`; distinct streams are
  /// statistically independent.
  static Rng derived(std::uint64_t seed, std::uint64_t stream) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() noexcept { return next(); }

  std::uint64_t next() noexcept;
  double uniform() noexcept;
  std::uint64_t below(std::uint64_t n) noexcept;
  double normal() noexcept;
  bool bernoulli(double p) noexcept { return uniform() < p; }

  friend bool operator==(const Rng&, const Rng&) = default;

 private:
  std::array<std::uint64_t, 4> s_{};
};

/// Fisher-Yates, walking from the back.
template <typename T>
void shuffle(std::span<T> items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace aucseg
