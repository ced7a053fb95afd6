#pragma once

#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

namespace mplab {

struct DecayPoint {
  double distance;
  double value;
};

/// Fit of value ~ A exp(-distance / xi).
struct DecayFit {
  double xi = std::numeric_limits<double>::infinity();
  double A = 0.0;
  double r2 = 0.0;
  double slope = 0.0;
  std::vector<DecayPoint> pairs;

  /// false for a non-negative slope; xi is then +infinity.
  bool decaying() const { return std::isfinite(xi); }
};

/// Least squares line through (distance, log value).
inline DecayFit decay_fit(std::vector<DecayPoint> pairs) {
  std::set<double> distinct;
  for (const auto& p : pairs) {
    if (!(p.value > 0) || !std::isfinite(p.value))
      throw std::invalid_argument("decay_fit: values must be positive and finite");
    distinct.insert(p.distance);
  }
  if (distinct.size() < 3) throw std::invalid_argument("decay_fit: need at least three distinct distances");

  const double n = static_cast<double>(pairs.size());
  double sx = 0, sy = 0;
  for (const auto& p : pairs) {
    sx += p.distance;
    sy += std::log(p.value);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& p : pairs) {
    const double dx = p.distance - mx, dy = std::log(p.value) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }

  DecayFit fit;
  fit.slope = sxy / sxx;
  const double intercept = my - fit.slope * mx;
  fit.A = std::exp(intercept);
  double ss_res = 0;
  for (const auto& p : pairs) {
    const double r = std::log(p.value) - (intercept + fit.slope * p.distance);
    ss_res += r * r;
  }
  // a flat profile explains nothing exponentially
  fit.r2 = syy > 0 ? 1.0 - ss_res / syy : 0.0;
  fit.xi = fit.slope < 0 ? -1.0 / fit.slope : std::numeric_limits<double>::infinity();
  fit.pairs = std::move(pairs);
  return fit;
}

}  // namespace mplab
