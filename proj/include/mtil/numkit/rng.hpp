#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace mtil {

/// Seedable pseudo-random stream.
///
/// The generator is xoshiro256** whose 256-bit state is expanded from the
/// 64-bit seed with splitmix64. Integer draws are bit-identical on every
/// platform. Gaussian draws use the Marsaglia polar method (one std::log and
/// one std::sqrt per accepted pair), so they are reproducible wherever libm's
/// log is; glibc on x86-64 and aarch64 agree.
///
/// `fork(label, index)` derives a child stream from the seed key alone, not
/// from the current position, so children are independent of how many draws
/// the parent has made and of the order in which siblings are created.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random mantissa bits.
  double uniform();
  /// Uniform integer on [0, n); n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);
  /// Standard normal.
  double gaussian();
  /// Fair coin in {-1, +1}.
  int sign();

  Rng fork(std::string_view label, std::uint64_t index = 0) const;

  std::uint64_t key() const noexcept { return key_; }

 private:
  std::uint64_t key_;
  std::array<std::uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mtil
