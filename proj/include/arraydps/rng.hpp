#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "arraydps/types.hpp"

namespace arraydps {

// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent stream seed from a root seed and a counter path, so
// every (purpose, step, source) gets its own generator regardless of the order
// in which streams are consumed.
inline std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(root);
  for (std::uint64_t p : path) s = mix64(s ^ mix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

using Rng = std::mt19937_64;

inline RealVector gaussian_vector(Index n, Rng& rng, double stddev = 1.0) {
  std::normal_distribution<double> dist(0.0, 1.0);
  RealVector v(n);
  for (Index i = 0; i < n; ++i) v[i] = stddev * dist(rng);
  return v;
}

// Stream tags used with derive_seed.
namespace stream {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kChurn = 2;
inline constexpr std::uint64_t kSample = 3;
inline constexpr std::uint64_t kRir = 4;
inline constexpr std::uint64_t kSource = 5;
inline constexpr std::uint64_t kNoise = 6;
inline constexpr std::uint64_t kProbe = 7;
}  // namespace stream

}  // namespace arraydps
