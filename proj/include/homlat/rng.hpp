#pragma once
// Counter-based random number generation. Every consumer derives its own
// stream from (seed, index) pairs, so results are independent of execution
// order and thread count by construction.

#include <cstdint>

namespace homlat {

// Finalizer of the splitmix64 generator. Bijective on 64-bit words.
inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Deterministic child-seed derivation. Mixing both arguments keeps distinct
// (seed, index) pairs from colliding even for small sequential seeds.
inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return mix64(mix64(seed) + 0x9E3779B97F4A7C15ull * index + 0x632BE59BD9B4E019ull);
}

// Minimal splitmix64 stream. Cheap to construct, no warm-up needed.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next_u64() noexcept {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_unit() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo, hi).
  double next_in(double lo, double hi) noexcept {
    return lo + (hi - lo) * next_unit();
  }

 private:
  std::uint64_t state_;
};

}  // namespace homlat
