#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace dsp {

/// Seeded random stream. All draws are computed from raw 64-bit engine output
/// so sequences do not depend on the standard library's distribution classes.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Independent stream derived from a global seed and a fixed label, so that
  /// adding a consumer never perturbs another consumer's draws.
  static Rng stream(std::uint64_t seed, std::string_view label);

  std::uint64_t next_u64() { return engine_(); }
  double uniform();  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t index(std::size_t n);  // uniform in [0, n)
  double normal();

 private:
  std::mt19937_64 engine_;
};

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);

}  // namespace dsp
