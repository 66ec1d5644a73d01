#pragma once

#include <cstdint>

namespace schro {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Random stream keyed by (master seed, index, lane).
///
/// Every replicate of an experiment owns its own stream derived from the
/// master seed and the replicate index, so results never depend on how work
/// is split across threads. The generator is SplitMix64, whose output is a
/// bijective hash of a counter.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t index = 0, std::uint64_t lane = 0) noexcept
      : state_(mix64(mix64(seed ^ 0x5851f42d4c957f2dULL) ^ mix64(index + 0x14057b7ef767814fULL)) ^
               mix64(lane * 0xda942042e4dd58b5ULL + 1)) {}

  std::uint64_t next_u64() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via the Marsaglia polar method (one output per call).
  double normal() noexcept;

 private:
  std::uint64_t state_;
};

}  // namespace schro
