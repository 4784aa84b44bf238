#pragma once

#include <cstdint>

namespace gear {

// SplitMix64. Counter-based streams keyed by (seed, step, group, member)
// make rollouts schedule-independent: every trajectory draws from its own
// stream regardless of which thread runs it.

constexpr std::uint64_t kMixGamma = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += kMixGamma;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_key(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ (b * kMixGamma + 0x632be59bd9b4e019ULL));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(splitmix64(seed)) {}

  std::uint64_t next_u64() {
    state_ = state_ * 6364136223846793005ULL + 1442695040888963407ULL;
    return splitmix64(state_);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [0, n).
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

 private:
  std::uint64_t state_;
};

// Stream for one trajectory of one group at one training step.
inline Rng substream(std::uint64_t seed, std::uint64_t step,
                     std::uint64_t group, std::uint64_t member) {
  return Rng(mix_key(mix_key(mix_key(seed, step), group), member));
}

}  // namespace gear
