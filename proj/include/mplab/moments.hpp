#pragma once

// Disorder-averaged fractional moments of the Green function and the
// eigenfunction correlator.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <iostream>
#include <optional>
#include <set>
#include <vector>

#include "mplab/decay_fit.hpp"
#include "mplab/estimate.hpp"
#include "mplab/parallel.hpp"
#include "mplab/spectral.hpp"

namespace mplab {

inline constexpr double kSingularNudge = 1e-10;

inline void check_moment_exponent(double s) {
  if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("fractional moment exponent s must lie in (0,1)");
}

inline SparseHamiltonian assemble_realization(const Model& model, std::uint64_t seed) {
  return assemble(model.op, sample(model.op.box, model.density, seed));
}

/// Green function with the singularity fallback: z numerically in the
/// spectrum is moved off the axis by kSingularNudge (logged).
inline Complex green_nudged(const SparseMatrix& h, std::size_t x, std::size_t y, Complex z) {
  try {
    return green(h, x, y, z);
  } catch (const SingularEnergyError& e) {
    std::clog << "mplab: " << e.what() << "; retrying at Im z + " << kSingularNudge << '\n';
    return green(h, x, y, z + Complex(0.0, kSingularNudge));
  }
}

/// E |G(x, y; z)|^s over the ensemble.
inline Estimate fractional_moment(const Model& model, const Ensemble& ensemble, const Configuration& x,
                                  const Configuration& y, Complex z, double s, int workers = 1) {
  check_moment_exponent(s);
  const ConfigIndex index = model.op.index();
  const std::size_t ix = index.index(x), iy = index.index(y);
  const auto samples = parallel_map(ensemble.count, workers, [&](std::size_t i) {
    const auto h = assemble_realization(model, ensemble.seed(i));
    return std::pow(std::abs(green_nudged(h.matrix(), ix, iy, z)), s);
  });
  return Estimate::from_samples(samples, ensemble.base_seed);
}

// ---------------------------------------------------------------------------
// Conditional (Wegner-type) bound

struct WegnerReport {
  std::vector<Complex> z_grid;
  std::vector<Estimate> conditional;  // E(|G|^s | background) per z
  std::size_t worst = 0;              // argmax over z
  double c_emp = 0.0;                 // sup_z lambda^s E(|G|^s | background)
};

/// Energies spread over the spectral enclosure, each approached with
/// Im z = 1, 1e-1, ..., 10^{-(levels-1)}.
inline std::vector<Complex> wegner_z_grid(const Model& model, int energies = 20, int levels = 10) {
  const auto b = energy_bounds(model.op, model.density);
  std::vector<Complex> grid;
  for (int level = 0; level < levels; ++level) {
    const double eta = std::pow(10.0, -level);
    for (int e = 0; e < energies; ++e) {
      const double t = energies == 1 ? 0.5 : static_cast<double>(e) / (energies - 1);
      grid.emplace_back(b.lo + t * (b.hi - b.lo), eta);
    }
  }
  return grid;
}

/// Conditional fractional moment with the background potential frozen at
/// base_seed and fresh draws at {u1, u2}. x needs a particle at u1 and y a
/// particle at u2.
inline WegnerReport wegner_check(const Model& model, std::uint64_t base_seed, const Configuration& x,
                                 const Configuration& y, const Site& u1, const Site& u2,
                                 const std::vector<Complex>& z_grid, double s, std::size_t subsamples,
                                 int workers = 1) {
  check_moment_exponent(s);
  if (model.op.lambda == 0.0) throw std::invalid_argument("wegner_check: lambda must be non-zero");
  if (occupation(x, u1) < 1) throw std::invalid_argument("wegner_check: x has no particle at u1");
  if (occupation(y, u2) < 1) throw std::invalid_argument("wegner_check: y has no particle at u2");
  if (z_grid.empty()) throw std::invalid_argument("wegner_check: empty z grid");

  const ConfigIndex index = model.op.index();
  const std::size_t ix = index.index(x), iy = index.index(y);
  const auto background = sample(model.op.box, model.density, base_seed);
  std::vector<Site> marked{u1};
  if (!(u2 == u1)) marked.push_back(u2);

  const auto rows = parallel_map(subsamples, workers, [&](std::size_t j) {
    const auto h = assemble(model.op, resample_at(background, marked, j));
    std::vector<double> out(z_grid.size());
    if (h.dim() <= 2000) {
      const auto spec = diagonalize(h);
      for (std::size_t q = 0; q < z_grid.size(); ++q) {
        Complex z = z_grid[q];
        const double gap = (spec.eigenvalues().array() - z.real()).abs().minCoeff();
        if (z.imag() == 0.0 && gap < 1e-12) z += Complex(0.0, kSingularNudge);
        out[q] = std::pow(std::abs(spectral_green(spec, ix, iy, z)), s);
      }
    } else {
      for (std::size_t q = 0; q < z_grid.size(); ++q)
        out[q] = std::pow(std::abs(green_nudged(h.matrix(), ix, iy, z_grid[q])), s);
    }
    return out;
  });

  WegnerReport report;
  report.z_grid = z_grid;
  std::vector<double> column(subsamples);
  for (std::size_t q = 0; q < z_grid.size(); ++q) {
    for (std::size_t j = 0; j < subsamples; ++j) column[j] = rows[j][q];
    report.conditional.push_back(Estimate::from_samples(column, base_seed));
    const double scaled = std::pow(model.op.lambda, s) * report.conditional.back().mean;
    if (q == 0 || scaled > report.c_emp) {
      report.c_emp = scaled;
      report.worst = q;
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Energy-averaged moments and the correlator

/// Midpoint nodes of an interval.
inline std::vector<double> midpoint_nodes(const EnergyInterval& interval, int points) {
  if (points < 1) throw std::invalid_argument("midpoint_nodes: need at least one node");
  std::vector<double> nodes(static_cast<std::size_t>(points));
  for (int q = 0; q < points; ++q) nodes[static_cast<std::size_t>(q)] = interval.lo() + (q + 0.5) * interval.length() / points;
  return nodes;
}

struct MomentAverage {
  Estimate at_eta;
  Estimate at_2eta;
  /// |mean(2 eta) - mean(eta)| / mean(eta)
  double relative_shift = 0.0;
};

namespace detail {

/// (1/|I|) int_I |G(x, y; E + i eta)|^s dE for one realization, midpoint rule.
inline double interval_moment(const SpectralData& spec, std::size_t x, std::size_t y, std::span<const double> nodes,
                              double eta, double s) {
  double acc = 0.0;
  for (double e : nodes) acc += std::pow(std::abs(spectral_green(spec, x, y, Complex(e, eta))), s);
  return acc / static_cast<double>(nodes.size());
}

inline void check_interval_average(const EnergyInterval& interval, double s, double eta) {
  check_moment_exponent(s);
  if (!(interval.length() >= 1.0) || !std::isfinite(interval.length()))
    throw std::invalid_argument("energy average needs a finite interval with |I| >= 1");
  if (!(eta > 0)) throw std::invalid_argument("energy average needs eta > 0");
}

}  // namespace detail

/// Ê_I[|G(x, y)|^s] = (1/|I|) int_I E|G(x, y; E + i eta)|^s dE, also reported
/// at 2 eta as a limiting-absorption sensitivity probe.
inline MomentAverage energy_averaged_moment(const Model& model, const Ensemble& ensemble, const Configuration& x,
                                            const Configuration& y, const EnergyInterval& interval, double s,
                                            double eta, int quad_points, int workers = 1) {
  detail::check_interval_average(interval, s, eta);
  const ConfigIndex index = model.op.index();
  const std::size_t ix = index.index(x), iy = index.index(y);
  const auto nodes = midpoint_nodes(interval, quad_points);
  const auto rows = parallel_map(ensemble.count, workers, [&](std::size_t i) {
    const auto spec = diagonalize(assemble_realization(model, ensemble.seed(i)));
    return std::pair{detail::interval_moment(spec, ix, iy, nodes, eta, s),
                     detail::interval_moment(spec, ix, iy, nodes, 2 * eta, s)};
  });
  std::vector<double> a, b;
  for (const auto& [u, v] : rows) {
    a.push_back(u);
    b.push_back(v);
  }
  MomentAverage out{Estimate::from_samples(a, ensemble.base_seed), Estimate::from_samples(b, ensemble.base_seed)};
  out.relative_shift = std::abs(out.at_2eta.mean - out.at_eta.mean) / out.at_eta.mean;
  return out;
}

/// E[Q(x, y; I)] over the ensemble.
inline Estimate mean_correlator(const Model& model, const Ensemble& ensemble, const Configuration& x,
                                const Configuration& y, const EnergyInterval& interval, int workers = 1) {
  const ConfigIndex index = model.op.index();
  const std::size_t ix = index.index(x), iy = index.index(y);
  const auto samples = parallel_map(ensemble.count, workers, [&](std::size_t i) {
    return correlator(diagonalize(assemble_realization(model, ensemble.seed(i))), ix, iy, interval);
  });
  return Estimate::from_samples(samples, ensemble.base_seed);
}

// ---------------------------------------------------------------------------
// Both sides of the Q <-> fractional-moment equivalence on one ensemble

struct ConfigPair {
  Configuration x;
  Configuration y;
};

struct EquivalenceRow {
  int dist_h;
  Estimate moment;       // Ê_I[|G(x, y)|^s]
  Estimate correlator;   // E[Q(x, y; R)]
  Estimate moment_2eta;  // Ê_I at twice the broadening
};

struct EquivalenceTable {
  std::vector<EquivalenceRow> rows;
  std::optional<DecayFit> moment_fit;
  std::optional<DecayFit> correlator_fit;

  /// max(xi)/min(xi) of the two fits; infinity if either fit fails.
  double xi_ratio() const {
    if (!moment_fit || !correlator_fit || !moment_fit->decaying() || !correlator_fit->decaying())
      return std::numeric_limits<double>::infinity();
    return std::max(moment_fit->xi, correlator_fit->xi) / std::min(moment_fit->xi, correlator_fit->xi);
  }
};

/// Fit of a column against dist_H over rows with dist_H >= min_distance;
/// empty if fewer than three usable distances.
inline std::optional<DecayFit> fit_column(const std::vector<EquivalenceRow>& rows, bool use_moment,
                                          int min_distance = 0) {
  std::vector<DecayPoint> pts;
  std::set<int> distinct;
  for (const auto& r : rows) {
    const double v = use_moment ? r.moment.mean : r.correlator.mean;
    if (r.dist_h < min_distance || !(v > 0)) continue;
    pts.push_back({static_cast<double>(r.dist_h), v});
    distinct.insert(r.dist_h);
  }
  if (distinct.size() < 3) return std::nullopt;
  return decay_fit(std::move(pts));
}

/// Probe family: x packs the n particles on consecutive sites of the first
/// axis starting one site in from the box corner (or at the corner if the
/// box is too short); y is x translated by r along that axis for every r
/// that keeps it in the box. dist_H(x, y) = r.
inline std::vector<ConfigPair> shift_family(const Box& box, int n, Sector sector) {
  const int start = box.side() >= n + 2 ? 1 : 0;
  if (box.side() < n) throw std::invalid_argument("shift_family: box too short for n particles on one axis");
  auto make = [&](int offset) {
    Configuration c;
    c.sector = sector;
    for (int j = 0; j < n; ++j) {
      Site s = box.origin();
      s.coords[0] += start + offset + j;
      c.sites.push_back(s);
    }
    return c;
  };
  std::vector<ConfigPair> out;
  const Configuration x = make(0);
  for (int r = 0; start + r + n - 1 < box.side(); ++r) out.push_back({x, make(r)});
  return out;
}

inline EquivalenceTable equivalence_probe(const Model& model, const Ensemble& ensemble,
                                          const std::vector<ConfigPair>& pairs, const EnergyInterval& interval,
                                          double s, double eta, int quad_points, int workers = 1,
                                          int fit_min_distance = 0) {
  detail::check_interval_average(interval, s, eta);
  const ConfigIndex index = model.op.index();
  std::vector<std::pair<std::size_t, std::size_t>> idx;
  for (const auto& p : pairs) idx.emplace_back(index.index(p.x), index.index(p.y));
  const auto nodes = midpoint_nodes(interval, quad_points);
  const auto line = EnergyInterval::whole_line();

  const auto rows = parallel_map(ensemble.count, workers, [&](std::size_t i) {
    const auto spec = diagonalize(assemble_realization(model, ensemble.seed(i)));
    std::vector<std::array<double, 3>> out;
    out.reserve(idx.size());
    for (const auto& [ix, iy] : idx)
      out.push_back({detail::interval_moment(spec, ix, iy, nodes, eta, s), correlator(spec, ix, iy, line),
                     detail::interval_moment(spec, ix, iy, nodes, 2 * eta, s)});
    return out;
  });

  EquivalenceTable table;
  std::vector<double> m(ensemble.count), q(ensemble.count), m2(ensemble.count);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    for (std::size_t i = 0; i < ensemble.count; ++i) {
      m[i] = rows[i][p][0];
      q[i] = rows[i][p][1];
      m2[i] = rows[i][p][2];
    }
    table.rows.push_back({hausdorff_dist(pairs[p].x, pairs[p].y, model.norm),
                          Estimate::from_samples(m, ensemble.base_seed), Estimate::from_samples(q, ensemble.base_seed),
                          Estimate::from_samples(m2, ensemble.base_seed)});
  }
  table.moment_fit = fit_column(table.rows, true, fit_min_distance);
  table.correlator_fit = fit_column(table.rows, false, fit_min_distance);
  return table;
}

}  // namespace mplab
