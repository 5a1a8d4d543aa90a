// Deterministic seeded random streams for the simulator and learners.
#pragma once

#include <cstdint>

namespace mecoff {

// splitmix64 step; also used as the mixing function for substream derivation.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Small counter-based PRNG. Every consumer owns its own stream so adding a
// policy or an extra draw site never perturbs unrelated sequences.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix64(state_);
  }

  // Uniform double in [0, 1), 53 mantissa bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). Fixed-point multiply keeps the draw
  // platform-independent (no std::uniform_int_distribution).
  std::uint64_t uniform_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

 private:
  std::uint64_t state_;
};

// Purpose tags for substream derivation.
enum class Stream : std::uint64_t {
  arrivals = 1,   // task arrival process
  policy = 2,     // baseline policy draws
  explore = 3,    // epsilon-greedy exploration
  replay = 4,     // minibatch sampling
  weights = 5,    // network initialization
  instance = 6,   // randomized test-instance generation
};

// Derives the seed of the (purpose, episode, device) substream of a master
// seed. Chained mixing, so any field change decorrelates the whole stream.
inline std::uint64_t substream_seed(std::uint64_t master_seed, Stream purpose,
                                    std::uint64_t episode = 0,
                                    std::uint64_t device = 0) {
  std::uint64_t h = mix64(master_seed ^ 0x243f6a8885a308d3ull);
  h = mix64(h ^ static_cast<std::uint64_t>(purpose) * 0x9e3779b97f4a7c15ull);
  h = mix64(h ^ episode * 0xc2b2ae3d27d4eb4full);
  h = mix64(h ^ device * 0x165667b19e3779f9ull);
  return h;
}

inline Rng substream(std::uint64_t master_seed, Stream purpose,
                     std::uint64_t episode = 0, std::uint64_t device = 0) {
  return Rng(substream_seed(master_seed, purpose, episode, device));
}

}  // namespace mecoff
