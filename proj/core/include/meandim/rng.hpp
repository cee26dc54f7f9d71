#pragma once

#include <cstdint>
#include <random>

namespace meandim {

/// Seedable generator with platform-independent variates.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. Distributions are implemented here instead of using the
/// <random> distribution classes, whose algorithms are implementation-defined,
/// so that every draw is bit-identical across standard libraries.
class Rng {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64/u53/lemire/polar";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01();

  /// Uniform on [low, high).
  double uniform(double low, double high);

  /// Uniform integer on [0, bound); bound must be positive.
  std::uint64_t below(std::uint64_t bound);

  /// Standard normal (Marsaglia polar method).
  double normal();

  /// Derive an independent child seed from this generator's seed stream.
  std::uint64_t split() { return next_u64(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace meandim
