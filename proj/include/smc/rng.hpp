#pragma once

#include <cstdint>
#include <random>

namespace smc {

// Deterministic 64-bit generator. All draws go through next_u64() so streams
// are reproducible across standard library implementations.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [0, bound) without modulo bias.
  std::uint64_t below(std::uint64_t bound);

  // Child stream for an independent consumer identified by (a, b).
  SeededRng split(std::uint64_t a, std::uint64_t b = 0) { return SeededRng(derive_seed(next_u64(), a, b)); }

  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

 private:
  std::mt19937_64 engine_;
};

}  // namespace smc
