#pragma once

#include <cstdint>
#include <random>

namespace cpcp {

// SplitMix64 step (Steele, Lea, Flood 2014). Used only to derive engine seeds,
// so nearby user seeds still give unrelated streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Hashes a base seed with two indices into an independent seed. Used for
// per-component, per-cell and per-trial streams.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t s = base;
  std::uint64_t h = splitmix64(s);
  s = h ^ (a + 0x632BE59BD9B4E019ULL);
  h = splitmix64(s);
  s = h ^ (b + 0x85157AF5ULL);
  return splitmix64(s);
}

// std::mt19937_64 seeded through SplitMix64 of (seed, stream). Variates come
// from the standard library distributions, so bit-level reproducibility holds
// within one standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : engine_(mix_seed(seed, stream)) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  bool bernoulli(double p) { return uniform() < p; }
  double sign() { return uniform() < 0.5 ? -1.0 : 1.0; }
  std::uint64_t next_u64() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace cpcp
