#pragma once

#include <cstdint>
#include <random>

namespace koopmpc::util {

/// splitmix64 mixing step; a solid stateless hash for seed derivation.
constexpr uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Derives an independent per-stream seed from a root seed, so trajectories
/// (or retry attempts) get decorrelated generators in a reproducible way.
constexpr uint64_t derive_seed(uint64_t root, uint64_t stream) {
  return splitmix64(splitmix64(root) ^ splitmix64(stream + 0x632BE59BD9B4E019ull));
}

/// The project-wide generator type; construct one per logical stream.
using Rng = std::mt19937_64;

}  // namespace koopmpc::util
