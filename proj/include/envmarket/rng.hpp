#pragma once

#include <cstdint>

// Deterministic counter-style random streams. A (seed, stream) pair fully
// determines the sequence, so work split across scenario or path indices is
// reproducible regardless of how it is partitioned.

namespace envmarket {

class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();

  /// Uniform draw in (0, 1).
  double next_uniform();

  /// Standard normal draw via the inverse CDF.
  double next_normal();

  /// Inverse-Gaussian draw with the given mean and shape (Michael-Schucany-Haas).
  double next_inverse_gaussian(double mean, double shape);

 private:
  std::uint64_t state_;
};

}  // namespace envmarket
