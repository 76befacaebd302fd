#pragma once

#include <cmath>
#include <cstdint>
#include <optional>

namespace phasefilter {

/// Counter-based generator: output k is a SplitMix64 finalizer applied to
/// key + k * golden-gamma. The integer stream depends only on (seed, stream),
/// so it is identical on every platform. Not thread-safe; derive a stream per
/// worker instead of sharing a handle.
class RngHandle {
 public:
  explicit RngHandle(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream), key_(mix(seed ^ mix(stream + 0x632BE59BD9B4E019ull))) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }
  std::uint64_t counter() const noexcept { return counter_; }

  /// Independent handle for sub-stream `index`, a pure function of this
  /// handle's identity and current position.
  RngHandle derive(std::uint64_t index) {
    return RngHandle(mix(key_ ^ mix(index + 1)) ^ next_u64(), index);
  }

  std::uint64_t next_u64() {
    ++counter_;
    return mix(key_ + counter_ * kGamma);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi] for integers; rejection sampling keeps it unbiased.
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
    const std::uint64_t span = hi - lo;
    if (span == ~0ull) return next_u64();
    const std::uint64_t range = span + 1;
    const std::uint64_t limit = ~0ull - (~0ull % range);
    std::uint64_t x = 0;
    do {
      x = next_u64();
    } while (x >= limit);
    return lo + x % range;
  }

  /// Standard normal via the Marsaglia polar method.
  double normal() {
    if (spare_) {
      const double s = *spare_;
      spare_.reset();
      return s;
    }
    double u = 0.0, v = 0.0, s = 0.0;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    return u * f;
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::optional<double> spare_;
};

}  // namespace phasefilter
