#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace momsand {

/// Identifies one independent random stream. Replication r of a Monte Carlo
/// run uses stream_id = r.
struct RandomSource {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  [[nodiscard]] RandomSource with_stream(std::uint64_t id) const noexcept { return {seed, id}; }
  friend bool operator==(const RandomSource&, const RandomSource&) = default;
};

namespace detail {
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}
}  // namespace detail

/// Engine bound to a RandomSource. The 64-bit engine seed is a bijective mix
/// of stream_id xor-ed with the seed, so distinct stream ids never share state.
/// Conversions to doubles are done here rather than through std distributions
/// so sample sequences are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(RandomSource src)
      : engine_(src.seed ^ detail::splitmix64(src.stream_id ^ 0x6A09E667F3BCC909ull)) {}

  /// Uniform on [0, 1).
  double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1).
  double uniform_open() noexcept {
    return (static_cast<double>(engine_() >> 12) + 0.5) * 0x1.0p-52;
  }

  bool coin() noexcept { return (engine_() >> 63) != 0; }

  /// Standard normal by Box-Muller; one variate per call.
  double normal() noexcept {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t next_u64() noexcept { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace momsand
