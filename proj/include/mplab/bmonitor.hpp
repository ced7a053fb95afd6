#pragma once

// Clustered-configuration monitor B_s(L) and the rescaling inequality.
//
// Lambda_L = [-L, L]^d (side 2L+1) and its boundary is the set of sites with
// |u|_inf = L.
// C_L(Omega; u) is the set of configurations in Omega with diameter < L/2
// and at least one particle at u. Then
//
//   B_s(L) = sup_I sup_Omega |dLambda_L| sum_{y in dLambda_L}
//            sum_{x in C_L(Omega;0), y' in C_L(Omega;y)} Ê_I[|G_Omega(x, y')|^s]
//
// Both suprema are approximated from below: I runs over unit intervals
// tiling the spectral enclosure widened by 1 on each side, and Omega runs
// over Lambda_L plus a few random sub-boxes that contain the origin and
// touch the boundary.
//
// With half-width L and cluster diameter below L/2, every configuration
// anchored at the origin stays more than L/2 away (in dist_H) from every
// configuration anchored on the boundary.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "mplab/moments.hpp"

namespace mplab {

inline Box centered_box(int d, int L) {
  if (L < 2 || L % 2 != 0) throw std::invalid_argument("centered_box: L must be even and positive");
  return Box(d, 2 * L + 1, Site(std::vector<int>(static_cast<std::size_t>(d), -L)));
}

inline bool on_boundary(const Site& u, int L) {
  int m = 0;
  for (int c : u.coords) m = std::max(m, std::abs(c));
  return m == L;
}

/// Unit intervals [lo - 1 + m, lo + m] covering [lo - 1, hi + 1].
inline std::vector<EnergyInterval> unit_interval_tiling(EnergyBounds bounds) {
  const double start = bounds.lo - 1.0;
  const auto count = static_cast<int>(std::ceil(bounds.hi + 1.0 - start));
  std::vector<EnergyInterval> out;
  for (int m = 0; m < std::max(count, 1); ++m) out.emplace_back(start + m, start + m + 1.0);
  return out;
}

struct BMonitorOptions {
  double s = 0.5;
  double eta = 1e-6;
  int quad_points = 8;
  int omega_samples = 0;
  std::uint64_t omega_seed = 7;
  std::size_t dim_budget = kDenseDimCap;
  int workers = 1;
};

struct OmegaValue {
  Box omega;
  double value;       // |dLambda| max_I mean
  double std_error;   // at the maximizing interval
  std::size_t interval = 0;
  std::size_t pairs = 0;
};

struct BMonitorResult {
  int L = 0;
  std::size_t boundary_sites = 0;
  std::vector<EnergyInterval> intervals;
  std::vector<OmegaValue> omegas;  // [0] is Lambda_L itself

  const OmegaValue& full() const { return omegas.front(); }
  /// Largest value over all sampled Omega, including Lambda_L.
  const OmegaValue& sampled_sup() const {
    return *std::max_element(omegas.begin(), omegas.end(),
                             [](const OmegaValue& a, const OmegaValue& b) { return a.value < b.value; });
  }
};

namespace detail {

/// Random cubes inside Lambda_L that contain the origin and reach the
/// boundary face x_axis = -L.
inline std::vector<Box> sample_subboxes(int d, int L, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Box> out;
  const int h = L;
  auto pick = [&](int lo, int hi) { return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1)); };
  for (int k = 0; k < count; ++k) {
    const int side = pick(h + 1, 2 * h + 1);
    std::vector<int> origin(static_cast<std::size_t>(d));
    for (auto& o : origin) o = pick(std::max(-h, 1 - side), std::min(0, h - side + 1));
    origin[static_cast<std::size_t>(pick(0, d - 1))] = -h;
    out.emplace_back(d, side, Site(origin));
  }
  return out;
}

struct ClusteredPairs {
  Box omega;
  std::vector<std::size_t> xs;       // indices of C_L(Omega; 0)
  std::vector<std::size_t> ys;       // indices of the union of C_L(Omega; y)
  std::vector<double> y_weight;      // number of boundary sites occupied
};

inline ClusteredPairs clustered_pairs(const Model& family, const Box& omega, int L) {
  ClusteredPairs out{omega, {}, {}, {}};
  const ConfigIndex index(omega, family.op.n, family.op.sector);
  const Site origin(std::vector<int>(static_cast<std::size_t>(omega.dim()), 0));
  for (auto it = index.begin(); it != index.end(); ++it) {
    const Configuration c = *it;
    if (2 * diameter(c, family.norm) >= L) continue;
    if (occupation(c, origin) > 0) out.xs.push_back(it.position());
    std::vector<Site> hit;
    for (const auto& u : c.sites)
      if (on_boundary(u, L) && std::find(hit.begin(), hit.end(), u) == hit.end()) hit.push_back(u);
    if (!hit.empty()) {
      out.ys.push_back(it.position());
      out.y_weight.push_back(static_cast<double>(hit.size()));
    }
  }
  return out;
}

}  // namespace detail

/// B_s(L) for the model family (every field except the box is used).
inline BMonitorResult b_monitor(const Model& family, int L, const Ensemble& ensemble,
                                const BMonitorOptions& opt = {}) {
  check_moment_exponent(opt.s);
  const int d = family.op.box.dim();
  const Box full = centered_box(d, L);

  Model at_full = family;
  at_full.op.box = full;
  const std::size_t dim = at_full.op.index().size();
  if (dim > opt.dim_budget)
    throw BudgetError("b_monitor: configuration space of size " + std::to_string(dim) + " exceeds budget " +
                      std::to_string(opt.dim_budget));

  BMonitorResult result;
  result.L = L;
  for (std::size_t i = 0; i < full.volume(); ++i)
    if (on_boundary(full.decode(i), L)) ++result.boundary_sites;
  result.intervals = unit_interval_tiling(energy_bounds(at_full.op, at_full.density));

  std::vector<Box> omegas{full};
  for (auto& b : detail::sample_subboxes(d, L, opt.omega_samples, opt.omega_seed)) omegas.push_back(b);

  const auto nq = static_cast<std::size_t>(opt.quad_points);
  std::vector<double> energies;
  for (const auto& I : result.intervals)
    for (double e : midpoint_nodes(I, opt.quad_points)) energies.push_back(e);
  const auto nz = static_cast<Eigen::Index>(energies.size());

  for (const auto& omega : omegas) {
    Model m = family;
    m.op.box = omega;
    const auto cp = detail::clustered_pairs(family, omega, L);
    const std::size_t pairs = cp.xs.size() * cp.ys.size();

    // per seed: sum over pairs of |G|^s, averaged inside each interval
    const auto rows = parallel_map(ensemble.count, opt.workers, [&](std::size_t i) {
      std::vector<double> per_interval(result.intervals.size(), 0.0);
      if (pairs == 0) return per_interval;
      const auto spec = diagonalize(assemble_realization(m, ensemble.seed(i)));
      const auto& v = spec.eigenvectors();
      const auto& e = spec.eigenvalues();
      const Eigen::Index dimo = e.size();

      Eigen::MatrixXd w(static_cast<Eigen::Index>(pairs), dimo);
      Eigen::Index p = 0;
      for (auto ix : cp.xs)
        for (auto iy : cp.ys) w.row(p++) = v.row(static_cast<Eigen::Index>(ix)).cwiseProduct(v.row(static_cast<Eigen::Index>(iy)));

      Eigen::MatrixXd re(dimo, nz), im(dimo, nz);
      for (Eigen::Index q = 0; q < nz; ++q)
        for (Eigen::Index k = 0; k < dimo; ++k) {
          const Complex r = 1.0 / (e[k] - Complex(energies[static_cast<std::size_t>(q)], opt.eta));
          re(k, q) = r.real();
          im(k, q) = r.imag();
        }
      const Eigen::MatrixXd gr = w * re;
      const Eigen::MatrixXd gi = w * im;

      std::vector<double> weight(pairs);
      p = 0;
      for (std::size_t a = 0; a < cp.xs.size(); ++a)
        for (std::size_t b = 0; b < cp.ys.size(); ++b) weight[static_cast<std::size_t>(p++)] = cp.y_weight[b];

      for (Eigen::Index q = 0; q < nz; ++q) {
        double acc = 0.0;
        for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(pairs); ++r)
          acc += weight[static_cast<std::size_t>(r)] * std::pow(std::hypot(gr(r, q), gi(r, q)), opt.s);
        per_interval[static_cast<std::size_t>(q) / nq] += acc / static_cast<double>(nq);
      }
      return per_interval;
    });

    OmegaValue best{omega, -1.0, 0.0, 0, pairs};
    std::vector<double> column(ensemble.count);
    for (std::size_t k = 0; k < result.intervals.size(); ++k) {
      for (std::size_t i = 0; i < ensemble.count; ++i) column[i] = rows[i][k];
      const auto est = Estimate::from_samples(column, ensemble.base_seed);
      const double scale = static_cast<double>(result.boundary_sites);
      if (scale * est.mean > best.value) best = {omega, scale * est.mean, scale * est.std_error, k, pairs};
    }
    result.omegas.push_back(best);
  }
  return result;
}

// ---------------------------------------------------------------------------

struct RescalingConstants {
  double a = 1.0;
  double A = 0.0;
  double nu = 1.0;
  double p = 1.0;
};

struct RescalingReport {
  bool satisfied = false;  // B(2L) <= (a/lambda^s) B(L)^2 + A L^{2p} e^{-2 nu L}
  double margin = 0.0;     // rhs - lhs
  bool premise = false;    // B(L) > 0 and (a/lambda^s) B(L) < 1/2
  bool contracted = false; // B(2L) < B(L)
  /// The contraction corollary: premise implies contraction.
  bool corollary_holds() const { return !premise || contracted; }
};

inline RescalingReport rescaling_check(double b_l, double b_2l, double lambda, double s, int L,
                                       const RescalingConstants& c = {}) {
  RescalingReport r;
  const double factor = lambda > 0 ? c.a / std::pow(lambda, s) : std::numeric_limits<double>::infinity();
  const double tail = c.A * std::pow(static_cast<double>(L), 2 * c.p) * std::exp(-2 * c.nu * L);
  const double rhs = b_l == 0.0 ? tail : factor * b_l * b_l + tail;
  r.margin = rhs - b_2l;
  r.satisfied = b_2l <= rhs;
  r.premise = b_l > 0.0 && factor * b_l < 0.5;
  r.contracted = b_2l < b_l;
  return r;
}

}  // namespace mplab
