#pragma once

#include <cstdint>
#include <random>

namespace oamtomo {

/// Child seed for stream `index` of a run seeded with `master`:
/// splitmix64(master + (index + 1)·0x9E3779B97F4A7C15). Counter based, so
/// streams can be generated in any order or in parallel.
std::uint64_t child_seed(std::uint64_t master, std::uint64_t index);

/// Deterministic random stream. Every draw is derived from mt19937_64 with
/// explicitly specified conversions, so results are identical across
/// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  bool bernoulli(double p) { return uniform() < p; }
  /// Standard normal (Box-Muller, one value per call).
  double normal();

 private:
  std::mt19937_64 engine_;
};

}  // namespace oamtomo
