#pragma once

// Seeded Monte-Carlo ensembles and their estimates.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "mplab/hamiltonian.hpp"

namespace mplab {

/// Realization seeds base_seed, base_seed + 1, ..., base_seed + count - 1.
struct Ensemble {
  std::uint64_t base_seed = 1;
  std::size_t count = 400;

  std::uint64_t seed(std::size_t i) const { return base_seed + i; }
};

/// Everything needed to draw and assemble one realization.
struct Model {
  OperatorSpec op;
  DensitySpec density;
  Norm norm = Norm::l1;
};

/// Sample mean with standard error (sample standard deviation / sqrt(count)).
/// `std_error` rather than `stderr`, which is a macro.
struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t count = 0;
  std::uint64_t first_seed = 0;

  /// Welford updates in sample order, so the result depends only on that
  /// order and identical samples give exactly zero spread.
  static Estimate from_samples(std::span<const double> samples, std::uint64_t first_seed) {
    if (samples.size() < 2) throw std::invalid_argument("Estimate: need at least two samples");
    double mean = 0.0, ss = 0.0;
    double k = 0.0;
    for (double v : samples) {
      k += 1.0;
      const double delta = v - mean;
      mean += delta / k;
      ss += delta * (v - mean);
    }
    const double sd = std::sqrt(ss / static_cast<double>(samples.size() - 1));
    return {mean, sd / std::sqrt(static_cast<double>(samples.size())), samples.size(), first_seed};
  }
};

}  // namespace mplab
