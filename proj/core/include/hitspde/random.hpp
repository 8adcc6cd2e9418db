#pragma once

#include <cstdint>
#include <random>

#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace hitspde {

// std::mt19937_64 has a standard-mandated output sequence and the Boost.Random
// distributions have a fixed algorithm, so seeded streams reproduce across
// toolchains, which std::normal_distribution does not guarantee.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based seed for replica `index` of an experiment seeded with
/// `master`. For a fixed master this is injective in the index, and it does
/// not depend on how many replicas are run.
constexpr std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix64(mix64(master) ^ mix64(index ^ 0x6a09e667f3bcc909ULL));
}

/// Independent sub-stream of a replica seed (noise, initial data, ...).
constexpr std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix64(seed ^ mix64(stream + 0x3c6ef372fe94f82bULL));
}

inline double standard_normal(Rng& rng) {
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  return normal(rng);
}

/// Uniform on the open interval (0, 1).
inline double open_uniform(Rng& rng) {
  for (;;) {
    const double u = boost::random::uniform_01<double>{}(rng);
    if (u > 0.0) return u;
  }
}

}  // namespace hitspde
