#pragma once

// Empirical scan of the (lambda, alpha) plane for uniform localization.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "mplab/bmonitor.hpp"

namespace mplab {

enum class Verdict { contracting, non_contracting, inconclusive };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::contracting: return "contracting";
    case Verdict::non_contracting: return "non-contracting";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

struct ScanProtocol {
  int d = 1;
  int n = 2;
  int L = 4;
  Sector sector = Sector::distinguishable;
  Norm norm = Norm::l1;
  DensitySpec density = DensitySpec::uniform(-0.5, 0.5);
  Ensemble ensemble{1, 100};
  BMonitorOptions monitor;
  // decay probe on a box of side probe_side (0 means 2L + 4)
  int probe_side = 0;
  // unset: the unit interval at the centre of the spectral enclosure
  std::optional<EnergyInterval> probe_interval;
  int probe_quad_points = 8;
  double r2_min = 0.9;
  double xi_max = 2.0;
  // |B(2L) - B(L)| below noise_factor * (se(L) + se(2L)) is inconclusive
  double noise_factor = 1.0;
  int workers = 1;
};

struct ScanPoint {
  double lambda;
  double alpha;
  Verdict verdict = Verdict::inconclusive;
  OmegaValue b_l;
  OmegaValue b_2l;
  std::optional<DecayFit> fit;
};

struct RegionScanResult {
  std::vector<ScanPoint> points;
};

inline Model scan_model(const ScanProtocol& p, double lambda, double alpha, int side) {
  Model m;
  m.op.box = Box(p.d, side);
  m.op.n = p.n;
  m.op.sector = p.sector;
  m.op.lambda = lambda;
  m.op.interaction = alpha == 0.0 ? InteractionSpec::none() : InteractionSpec::nearest_neighbor_pair(alpha);
  m.op.interaction.norm = p.norm;
  m.density = p.density;
  m.norm = p.norm;
  return m;
}

inline Verdict classify(const OmegaValue& b_l, const OmegaValue& b_2l, const std::optional<DecayFit>& fit,
                        const ScanProtocol& p) {
  if (std::abs(b_2l.value - b_l.value) < p.noise_factor * (b_l.std_error + b_2l.std_error))
    return Verdict::inconclusive;
  const bool decays = fit && fit->decaying() && fit->r2 >= p.r2_min && fit->xi <= p.xi_max;
  return b_2l.value < b_l.value && decays ? Verdict::contracting : Verdict::non_contracting;
}

inline ScanPoint scan_point(const ScanProtocol& p, double lambda, double alpha) {
  ScanPoint pt{lambda, alpha, Verdict::inconclusive, {}, {}, std::nullopt};
  BMonitorOptions opt = p.monitor;
  opt.workers = p.workers;
  const Model family = scan_model(p, lambda, alpha, 1);
  pt.b_l = b_monitor(family, p.L, p.ensemble, opt).full();
  pt.b_2l = b_monitor(family, 2 * p.L, p.ensemble, opt).full();

  const int side = p.probe_side > 0 ? p.probe_side : 2 * p.L + 4;
  const Model probe = scan_model(p, lambda, alpha, side);
  const auto b = energy_bounds(probe.op, probe.density);
  const double mid = 0.5 * (b.lo + b.hi);
  const EnergyInterval interval = p.probe_interval.value_or(EnergyInterval(mid - 0.5, mid + 0.5));
  const auto table = equivalence_probe(probe, p.ensemble, shift_family(probe.op.box, p.n, p.sector), interval,
                                       opt.s, opt.eta, p.probe_quad_points, p.workers);
  pt.fit = table.correlator_fit;
  pt.verdict = classify(pt.b_l, pt.b_2l, pt.fit, p);
  return pt;
}

/// Every (lambda, alpha) of the grid gets a verdict with its evidence.
inline RegionScanResult region_scan(const std::vector<double>& lambdas, const std::vector<double>& alphas,
                                    const ScanProtocol& p) {
  RegionScanResult out;
  for (double lambda : lambdas)
    for (double alpha : alphas) out.points.push_back(scan_point(p, lambda, alpha));
  return out;
}

}  // namespace mplab
