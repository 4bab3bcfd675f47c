#pragma once

#include <cstdint>
#include <limits>

namespace irt {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Derives an independent 64-bit key for a named substream of a seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix64(seed ^ mix64(stream + 0x632BE59BD9B4E019ull));
}

/// Counter-based generator: output i is mix64(key + i * golden). Any element
/// of any substream can be produced without touching the others, which keeps
/// generated data independent of scheduling.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key = 0) noexcept : key_(key) {}
  CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept : key_(derive_seed(seed, stream)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return at(counter_++); }

  /// Random-access draw that does not advance the counter.
  result_type at(std::uint64_t index) const noexcept {
    return mix64(key_ + index * 0x9E3779B97F4A7C15ull);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return to_unit(operator()()); }

  static double to_unit(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace irt
