#pragma once

#include <cstdint>
#include <random>

namespace psgkit {

// Seedable generator with portable output: mt19937_64 seeded through
// std::seed_seq from (seed, stream), with integer and real mappings done
// here instead of by the implementation-defined std distributions.
// Distinct stream ids give independent sequences from one master seed.
class Rng {
 public:
  static constexpr const char* kName = "mt19937_64/seed_seq(seed_lo,seed_hi,stream_lo,stream_hi)";

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    engine_.seed(seq);
  }

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Unbiased integer in [0, n); n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % n;
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace psgkit
