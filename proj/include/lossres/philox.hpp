#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace lossres {

/// Philox4x32-10 counter-based generator.
///
/// A stream is identified by a 64-bit key (the user seed) and a 64-bit stream
/// id; the remaining 64 counter bits index successive blocks inside the
/// stream. Two engines with different (seed, stream) pairs never share
/// output, so replicate b can draw from stream b on any thread.
///
/// Satisfies UniformRandomBitGenerator with 64-bit output.
class Philox4x32 {
 public:
  using result_type = std::uint64_t;
  using block_type = std::array<std::uint32_t, 4>;
  using key_type = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t seed, std::uint64_t stream) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept;

  /// The raw bijection: ten rounds applied to `counter` under `key`.
  static block_type encrypt(block_type counter, key_type key) noexcept;

 private:
  void refill() noexcept;

  key_type key_{};
  block_type counter_{};
  block_type buffer_{};
  int used_ = 4;
};

}  // namespace lossres
