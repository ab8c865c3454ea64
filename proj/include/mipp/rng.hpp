#pragma once

#include <array>
#include <cstdint>

namespace mipp {

// xoshiro256++ with splitmix64 state initialization.  Streams for different
// (seed, trial) pairs are derived by hashing both values through splitmix64,
// which keeps every trial reproducible independently of scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) { seed_from(seed, 0x9e3779b97f4a7c15ull); }

  static Rng for_trial(std::uint64_t seed, std::uint64_t trial_index) {
    Rng r(0);
    r.seed_from(seed, trial_index);
    return r;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform double in [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  static std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  void seed_from(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t x = seed;
    std::uint64_t a = splitmix64(x);
    x ^= 0xd1b54a32d192ed03ull * (stream + 1);
    for (auto& w : s_) w = splitmix64(x);
    s_[0] ^= a;
    // All-zero state is invalid for xoshiro; nudge if it ever happens.
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
  }

  std::array<std::uint64_t, 4> s_{};
};

}  // namespace mipp
