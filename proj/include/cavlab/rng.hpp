#pragma once
// xoshiro256** seeded through splitmix64, with Box-Muller normals.
//
// Uniforms take the top 53 bits: u = (x >> 11) * 2^-53 in [0, 1).
// Normals are generated in pairs from (u1, u2) with r = sqrt(-2 ln(1 - u1)),
// z0 = r cos(2 pi u2), z1 = r sin(2 pi u2); z0 is returned first and z1 is
// cached for the next call.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace cavlab {

inline constexpr std::string_view kRngAlgorithm = "xoshiro256**+splitmix64/box-muller/v1";

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept;

  std::uint64_t next_u64() noexcept;
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  double normal() noexcept;
  /// Uniform integer in [0, bound) by rejection (bound > 0).
  std::uint64_t below(std::uint64_t bound) noexcept;

 private:
  std::uint64_t s_[4];
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

/// Seed for an independent stream derived from (seed, index).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept;

}  // namespace cavlab
