#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace steamflow {

/// Invalid parameters, malformed files, or unsatisfiable metric preconditions.
/// Maps to CLI exit code 1.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Identification or controller training failed (divergence, degenerate model).
/// Maps to CLI exit code 2.
struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A controller produced a non-finite command mid-run.
/// Maps to CLI exit code 3.
struct ControllerFault : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Deterministic, platform-independent PRNG (SplitMix64).  The standard
/// <random> distributions are implementation-defined, which would break the
/// byte-identical-report guarantee across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::uint64_t state_;
};

}  // namespace steamflow
