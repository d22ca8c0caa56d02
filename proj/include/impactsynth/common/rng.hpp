#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace impactsynth {

// Seeded generator whose output is identical on every platform: the
// mt19937_64 engine is fully specified, and the normal/uniform transforms
// are done here rather than through the implementation-defined
// std::*_distribution classes.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1).
  double uniform();

  /// Uniform integer in [0, n). n must be positive.
  std::size_t below(std::size_t n);

  /// Standard normal deviate (Box-Muller, second value cached).
  double normal();

  void fill_normal(std::span<double> out);

  /// Derive an independent child seed (splitmix64 of the next output).
  std::uint64_t split();

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace impactsynth
