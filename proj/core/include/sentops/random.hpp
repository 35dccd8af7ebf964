#pragma once

#include <cstdint>
#include <string_view>

namespace sentops {

/// Platform-stable pseudo random generator.
///
/// The state update is SplitMix64 (Steele, Lea & Flood 2014): a 64-bit
/// counter advanced by the golden-ratio increment and passed through a
/// fixed avalanche mix. Normal variates use the Box-Muller transform over
/// 53-bit uniforms. None of the <random> distributions are used because
/// their output is implementation-defined. Integer and uniform streams are
/// bit-identical everywhere; normal variates additionally go through the
/// platform libm (log, sin, cos).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next_u64() noexcept;

  /// Uniform in [0, 1).
  double uniform() noexcept;

  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound) noexcept;

  double normal() noexcept;

 private:
  std::uint64_t state_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// Deterministically derives an independent seed for sub-stream `stream`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;

}  // namespace sentops
