#ifndef MIXSEP_RANDOM_HPP
#define MIXSEP_RANDOM_HPP

#include <cstdint>
#include <random>

namespace mixsep {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based seed derivation: seed = mix(mix(mix(master) ^ a) ^ b).
/// Each (master, a, b) triple yields an independent stream regardless of
/// the order in which streams are requested, so parallel trial execution
/// cannot change results.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) noexcept {
  return mix64(mix64(mix64(master) ^ a) ^ (b * 0xd1b54a32d192ed03ULL));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

// Stream labels used inside one trial.
namespace stream {
inline constexpr std::uint64_t source = 1;
inline constexpr std::uint64_t matrix_a = 2;
inline constexpr std::uint64_t matrix_b = 3;
}  // namespace stream

}  // namespace mixsep

#endif  // MIXSEP_RANDOM_HPP
