#pragma once

#include <cstdint>
#include <random>

namespace ptcure {

// splitmix64; used to derive independent named streams from one user seed so
// that subsystems (split/init/shuffle/dropout/...) never share state.
inline std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix_seed(mix_seed(seed) ^ mix_seed(stream));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return derive_seed(derive_seed(seed, a), b);
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

namespace streams {
inline constexpr std::uint64_t kValidationSplit = 0xA1;
inline constexpr std::uint64_t kInit = 0x11;
inline constexpr std::uint64_t kShuffle = 0x5F;
inline constexpr std::uint64_t kDropout = 0xD0;
inline constexpr std::uint64_t kSearch = 0x5E;
inline constexpr std::uint64_t kBootstrap = 0xB0;
inline constexpr std::uint64_t kSimulate = 0x51;
inline constexpr std::uint64_t kReplication = 0x4E;
}  // namespace streams

}  // namespace ptcure
