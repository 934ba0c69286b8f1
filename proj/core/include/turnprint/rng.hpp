#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace turnprint {

/// Derives a child seed from a root seed and a component tag.
///
/// splitmix64(root ^ fnv1a64(tag)), optionally mixed with an index. Adding a
/// new tag never shifts the stream of an existing one.
std::uint64_t derive_seed(std::uint64_t root, std::string_view tag, std::uint64_t index = 0);

/// Portable random stream.
///
/// Wraps std::mt19937_64, whose output sequence is fixed by the standard, and
/// implements the transforms itself so results do not depend on the standard
/// library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n). n must be positive.
  std::size_t below(std::size_t n);
  /// Standard normal (Marsaglia polar method).
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace turnprint
