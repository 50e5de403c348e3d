#pragma once

// Counter-based random numbers: Philox4x32-10 (Salmon et al., "Parallel random
// numbers: as easy as 1, 2, 3", SC'11) driving Box-Muller Gaussians.
//
// A stream is addressed by (seed, stream id). Block i of a stream is
// philox(counter = {lo32(i), hi32(i), lo32(stream), hi32(stream)},
//        key = {lo32(seed), hi32(seed)}).
// Each block yields four 32-bit words, consumed in order. A 64-bit draw joins
// two consecutive words as (w0 << 32) | w1. Uniform doubles in (0, 1] are
// ((u64 >> 11) + 1) * 2^-53; Gaussians use the Box-Muller pair
// sqrt(-2 ln u1) * (cos 2 pi u2, sin 2 pi u2), returned in that order.

#include <array>
#include <cstdint>

namespace rgcinit {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// One Philox4x32 bijection with 10 rounds.
PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key) noexcept;

class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream) noexcept;

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;
  /// Uniform on (0, 1].
  double uniform() noexcept;
  /// Standard normal via Box-Muller.
  double normal() noexcept;
  /// Unbiased integer in [0, bound) by rejection; bound must be > 0.
  std::uint64_t uniform_index(std::uint64_t bound) noexcept;

 private:
  void refill() noexcept;

  PhiloxKey key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  PhiloxCounter buffer_{};
  int position_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace rgcinit
