#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace adaflow {

/// SplitMix64 finalizer. Bijective on 64-bit words.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed of the stream owned by run `run_index` of a Monte-Carlo batch:
/// mix64(mix64(master + c) + (run_index + 1) * golden). Injective in
/// run_index for a fixed master; a symmetric xor of two mixes is not safe
/// here because mix64(0) = 0.
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t master,
                                                  std::uint64_t run_index) noexcept {
  return mix64(mix64(master + 0x632BE59BD9B4E019ULL) + (run_index + 1) * 0x9E3779B97F4A7C15ULL);
}

/// Counter-based random stream: draw k is mix64(key + k * golden).
///
/// The k-th output depends only on (key, k), so a run's draws do not depend
/// on how runs are scheduled across threads. Satisfies
/// UniformRandomBitGenerator.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
  }

  /// Uniform draw in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Standard normal draw.
  double normal() { return normal_(*this); }

  /// Uniform index in [0, n).
  std::uint64_t below(std::uint64_t n);

  [[nodiscard]] std::uint64_t key() const noexcept { return key_; }
  [[nodiscard]] std::uint64_t draws() const noexcept { return counter_; }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace adaflow
