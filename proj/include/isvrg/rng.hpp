#ifndef ISVRG_RNG_HPP
#define ISVRG_RNG_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace isvrg {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Counter-based generator: draw k is a pure function of (seed, k).
///
/// Satisfies UniformRandomBitGenerator. Distributions are implemented here
/// rather than taken from <random> because the standard distributions are
/// not bit-reproducible across library implementations.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed, std::uint64_t counter = 0)
      : seed_(seed), counter_(counter) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return at(counter_++); }

  result_type at(std::uint64_t k) const { return mix64(seed_ + (k + 1) * 0x9E3779B97F4A7C15ULL); }

  std::uint64_t position() const { return counter_; }
  void seek(std::uint64_t k) { counter_ = k; }

  /// Independent stream keyed by `key`.
  CounterRng substream(std::uint64_t key) const {
    return CounterRng(mix64(seed_ ^ mix64(key + 0xD1B54A32D192ED03ULL)));
  }

  /// Uniform integer in [0, n) by multiply-shift.
  std::uint64_t index(std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>((*this)()) * n) >> 64);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (one output per two draws).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

}  // namespace isvrg

#endif  // ISVRG_RNG_HPP
