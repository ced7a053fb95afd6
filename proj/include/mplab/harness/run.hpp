#pragma once

// Dispatch of a validated experiment to the diagnostics, with output files.

#include <chrono>
#include <filesystem>
#include <optional>
#include <random>
#include <string>

#include "mplab/harness/config.hpp"
#include "mplab/region_scan.hpp"

namespace mplab {

struct RunOptions {
  int workers = 1;
  std::optional<std::string> out_dir;  // replaces output.directory
  bool write = true;
};

namespace detail {

template <class T>
std::int64_t as_int(T v) {
  return static_cast<std::int64_t>(v);
}

inline json real_json(double v) { return std::isfinite(v) ? json(v) : json(format_real(v)); }

inline json fit_json(const std::optional<DecayFit>& f) {
  if (!f) return nullptr;
  return {{"xi", real_json(f->xi)}, {"A", real_json(f->A)}, {"r2", f->r2}, {"slope", f->slope},
          {"points", f->pairs.size()}};
}

inline json interval_json(const EnergyInterval& i) { return json::array({i.lo(), i.hi()}); }

inline std::string compact(const json& j) { return j.dump(); }

/// Unit interval centred in the spectral enclosure.
inline EnergyInterval central_interval(const Model& m) {
  const auto b = energy_bounds(m.op, m.density);
  const double mid = 0.5 * (b.lo + b.hi);
  return {mid - 0.5, mid + 0.5};
}

inline Configuration config_param(const json& j, const ExperimentConfig& cfg) {
  auto c = j.get<Configuration>();
  if (!j.is_object() || !j.contains("sector")) c.sector = cfg.model.op.sector;
  return c;
}

// ---------------------------------------------------------------------------

inline ResultTable run_decay(const ExperimentConfig& cfg, int workers, bool full) {
  const auto& p = cfg.params;
  std::vector<ConfigPair> pairs;
  if (p.contains("pairs"))
    for (const auto& e : p.at("pairs")) pairs.push_back({config_param(e.at("x"), cfg), config_param(e.at("y"), cfg)});
  else
    pairs = shift_family(cfg.model.op.box, cfg.model.op.n, cfg.model.op.sector);
  const EnergyInterval interval = cfg.numerics.interval.value_or(central_interval(cfg.model));
  const auto& nu = cfg.numerics;
  const auto probe = equivalence_probe(cfg.model, cfg.ensemble, pairs, interval, nu.s, nu.eta, nu.quad_points,
                                       workers, p.value("fit_min_distance", 0));

  ResultTable t;
  t.columns = {{"dist_H", ColumnType::integer},      {"EQ_mean", ColumnType::real},
               {"EQ_stderr", ColumnType::real},      {"moment_mean", ColumnType::real},
               {"moment_stderr", ColumnType::real},  {"moment_2eta_mean", ColumnType::real},
               {"seed_first", ColumnType::integer},  {"seed_count", ColumnType::integer}};
  std::vector<Estimate> kernel;
  if (full) {
    t.columns.insert(t.columns.begin() + 1, {{"x", ColumnType::text}, {"y", ColumnType::text},
                                             {"dist_S", ColumnType::integer}});
    t.columns.insert(t.columns.end() - 2, {{"kernel_sup_mean", ColumnType::real}, {"kernel_sup_stderr", ColumnType::real}});
    // E sup_t |<x, e^{-itH} y>| over the configured time grid
    const auto index = cfg.model.op.index();
    const auto times = default_time_grid(nu.time_grid.count, nu.time_grid.t_min, nu.time_grid.t_max);
    const auto line = EnergyInterval::whole_line();
    const auto rows = parallel_map(cfg.ensemble.count, workers, [&](std::size_t i) {
      const auto spec = diagonalize(assemble_realization(cfg.model, cfg.ensemble.seed(i)));
      std::vector<double> out;
      for (const auto& pr : pairs)
        out.push_back(std::sqrt(dynamical_kernel(spec, index.index(pr.x), index.index(pr.y), line, times).sup_lower));
      return out;
    });
    std::vector<double> col(cfg.ensemble.count);
    for (std::size_t q = 0; q < pairs.size(); ++q) {
      for (std::size_t i = 0; i < col.size(); ++i) col[i] = rows[i][q];
      kernel.push_back(Estimate::from_samples(col, cfg.ensemble.base_seed));
    }
  }

  for (std::size_t q = 0; q < probe.rows.size(); ++q) {
    const auto& r = probe.rows[q];
    Row row{std::int64_t{r.dist_h}};
    if (full) {
      const int ds = cfg.model.op.n <= 8 ? symmetrized_dist(pairs[q].x, pairs[q].y, cfg.model.norm) : -1;
      row.insert(row.end(), {compact(json(pairs[q].x.sites)), compact(json(pairs[q].y.sites)), std::int64_t{ds}});
    }
    row.insert(row.end(), {r.correlator.mean, r.correlator.std_error, r.moment.mean, r.moment.std_error,
                           r.moment_2eta.mean});
    if (full) row.insert(row.end(), {kernel[q].mean, kernel[q].std_error});
    row.insert(row.end(), {as_int(cfg.ensemble.base_seed), as_int(cfg.ensemble.count)});
    t.add_row(std::move(row));
  }
  t.footer = {{"interval", interval_json(interval)},
              {"s", nu.s},
              {"eta", nu.eta},
              {"correlator_fit", fit_json(probe.correlator_fit)},
              {"moment_fit", fit_json(probe.moment_fit)},
              {"xi_ratio", real_json(probe.xi_ratio())}};
  if (full) t.footer["xi_agreement_threshold"] = 3.0;
  return t;
}

inline ResultTable run_wegner(const ExperimentConfig& cfg, int workers) {
  const auto& p = cfg.params;
  std::vector<Complex> grid;
  if (p.contains("z_grid"))
    for (const auto& z : p.at("z_grid").get<std::vector<std::vector<double>>>()) grid.emplace_back(z[0], z[1]);
  else
    grid = wegner_z_grid(cfg.model, p.value("energies", 20), p.value("levels", 10));
  const auto subsamples = static_cast<std::size_t>(p.value("subsamples", 2000));
  const auto rep = wegner_check(cfg.model, cfg.ensemble.base_seed, config_param(p.at("x"), cfg),
                                config_param(p.at("y"), cfg), p.at("u1").get<Site>(), p.at("u2").get<Site>(), grid,
                                cfg.numerics.s, subsamples, workers);
  ResultTable t;
  t.columns = {{"z_re", ColumnType::real},  {"z_im", ColumnType::real},           {"mean", ColumnType::real},
               {"stderr", ColumnType::real}, {"scaled", ColumnType::real},        {"base_seed", ColumnType::integer},
               {"subsamples", ColumnType::integer}};
  const double scale = std::pow(cfg.model.op.lambda, cfg.numerics.s);
  for (std::size_t q = 0; q < grid.size(); ++q) {
    const auto& e = rep.conditional[q];
    t.add_row({grid[q].real(), grid[q].imag(), e.mean, e.std_error, scale * e.mean, as_int(cfg.ensemble.base_seed),
               as_int(subsamples)});
  }
  t.footer = {{"c_emp", rep.c_emp},
              {"worst_z", json::array({grid[rep.worst].real(), grid[rep.worst].imag()})},
              {"lambda", cfg.model.op.lambda},
              {"s", cfg.numerics.s}};
  return t;
}

inline BMonitorOptions monitor_options(const ExperimentConfig& cfg, int workers) {
  BMonitorOptions opt;
  opt.s = cfg.numerics.s;
  opt.eta = cfg.numerics.eta;
  opt.quad_points = cfg.numerics.quad_points;
  opt.omega_samples = cfg.params.value("omega_samples", 0);
  opt.omega_seed = cfg.params.value("omega_seed", std::uint64_t{7});
  opt.dim_budget = cfg.numerics.dense_cap;
  opt.workers = workers;
  return opt;
}

inline std::vector<Column> omega_columns() {
  return {{"L", ColumnType::integer},          {"omega_origin", ColumnType::text},  {"omega_side", ColumnType::integer},
          {"full_box", ColumnType::boolean},   {"B", ColumnType::real},            {"B_stderr", ColumnType::real},
          {"I_lo", ColumnType::real},          {"I_hi", ColumnType::real},         {"pairs", ColumnType::integer},
          {"seed_first", ColumnType::integer}, {"seed_count", ColumnType::integer}};
}

inline void add_omega_rows(ResultTable& t, const BMonitorResult& r, const Ensemble& ens) {
  for (std::size_t k = 0; k < r.omegas.size(); ++k) {
    const auto& o = r.omegas[k];
    const auto& I = r.intervals[o.interval];
    t.add_row({std::int64_t{r.L}, compact(json(o.omega.origin())), std::int64_t{o.omega.side()}, k == 0, o.value,
               o.std_error, I.lo(), I.hi(), as_int(o.pairs), as_int(ens.base_seed), as_int(ens.count)});
  }
}

inline constexpr const char* kLowerEstimateNote =
    "sup over I is a unit-interval scan and sup over Omega is sampled; both are lower estimates";

inline ResultTable run_b_monitor(const ExperimentConfig& cfg, int workers) {
  const int L = cfg.params.at("L").get<int>();
  const auto r = b_monitor(cfg.model, L, cfg.ensemble, monitor_options(cfg, workers));
  ResultTable t;
  t.columns = omega_columns();
  add_omega_rows(t, r, cfg.ensemble);
  t.footer = {{"L", L},
              {"boundary_sites", r.boundary_sites},
              {"intervals", r.intervals.size()},
              {"B_full", r.full().value},
              {"B_sampled_sup", r.sampled_sup().value},
              {"note", kLowerEstimateNote}};
  return t;
}

inline ResultTable run_rescaling(const ExperimentConfig& cfg, int workers) {
  const auto& p = cfg.params;
  const int L = p.at("L").get<int>();
  const auto opt = monitor_options(cfg, workers);
  const auto r1 = b_monitor(cfg.model, L, cfg.ensemble, opt);
  const auto r2 = b_monitor(cfg.model, 2 * L, cfg.ensemble, opt);
  const RescalingConstants c{p.value("a", 1.0), p.value("A", 0.0), p.value("nu", 1.0), p.value("p", 1.0)};
  const auto rep =
      rescaling_check(r1.sampled_sup().value, r2.sampled_sup().value, cfg.model.op.lambda, cfg.numerics.s, L, c);
  ResultTable t;
  t.columns = omega_columns();
  add_omega_rows(t, r1, cfg.ensemble);
  add_omega_rows(t, r2, cfg.ensemble);
  t.footer = {{"B_L", r1.sampled_sup().value},
              {"B_2L", r2.sampled_sup().value},
              {"constants", {{"a", c.a}, {"A", c.A}, {"nu", c.nu}, {"p", c.p}}},
              {"satisfied", rep.satisfied},
              {"margin", rep.margin},
              {"premise", rep.premise},
              {"contracted", rep.contracted},
              {"corollary_holds", rep.corollary_holds()},
              {"note", kLowerEstimateNote}};
  return t;
}

inline ResultTable run_region_scan(const ExperimentConfig& cfg, int workers) {
  const auto& p = cfg.params;
  ScanProtocol proto;
  proto.d = cfg.model.op.box.dim();
  proto.n = cfg.model.op.n;
  proto.L = p.at("L").get<int>();
  proto.sector = cfg.model.op.sector;
  proto.norm = cfg.model.norm;
  proto.density = cfg.model.density;
  proto.ensemble = cfg.ensemble;
  proto.monitor = monitor_options(cfg, workers);
  proto.probe_side = p.value("probe_side", 0);
  proto.probe_interval = cfg.numerics.interval;
  proto.probe_quad_points = cfg.numerics.quad_points;
  proto.r2_min = p.value("r2_min", proto.r2_min);
  proto.xi_max = p.value("xi_max", proto.xi_max);
  proto.noise_factor = p.value("noise_factor", proto.noise_factor);
  proto.workers = workers;
  const auto res = region_scan(p.at("lambdas").get<std::vector<double>>(), p.at("alphas").get<std::vector<double>>(),
                               proto);
  ResultTable t;
  t.columns = {{"lambda", ColumnType::real},       {"alpha", ColumnType::real},          {"verdict", ColumnType::text},
               {"B_L", ColumnType::real},          {"B_L_stderr", ColumnType::real},     {"B_2L", ColumnType::real},
               {"B_2L_stderr", ColumnType::real},  {"xi", ColumnType::real},             {"r2", ColumnType::real},
               {"seed_first", ColumnType::integer}, {"seed_count", ColumnType::integer}};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& pt : res.points)
    t.add_row({pt.lambda, pt.alpha, to_string(pt.verdict), pt.b_l.value, pt.b_l.std_error, pt.b_2l.value,
               pt.b_2l.std_error, pt.fit ? pt.fit->xi : nan, pt.fit ? pt.fit->r2 : nan,
               as_int(cfg.ensemble.base_seed), as_int(cfg.ensemble.count)});
  t.footer = {{"L", proto.L},
              {"r2_min", proto.r2_min},
              {"xi_max", proto.xi_max},
              {"noise_factor", proto.noise_factor},
              {"note", kLowerEstimateNote}};
  return t;
}

/// H_J and H_K: n_j and n_k particles in one realization of the potential.
inline std::pair<SparseHamiltonian, SparseHamiltonian> block_pair(const ExperimentConfig& cfg, std::uint64_t seed) {
  const auto real = sample(cfg.model.op.box, cfg.model.density, seed);
  OperatorSpec j = cfg.model.op, k = cfg.model.op;
  j.n = cfg.params.value("n_j", 1);
  k.n = cfg.params.value("n_k", 1);
  return {assemble(j, real), assemble(k, real)};
}

inline std::mt19937_64 instance_rng(std::uint64_t seed) { return std::mt19937_64(splitmix64(seed ^ 0x5eedULL)); }

inline std::size_t pick(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

inline ResultTable run_composite(const ExperimentConfig& cfg, int workers) {
  const int points = cfg.numerics.quadrature_points;
  std::optional<Complex> fixed_z;
  if (cfg.params.contains("z")) {
    const auto z = cfg.params.at("z").get<std::vector<double>>();
    fixed_z = Complex(z[0], z[1]);
  }
  struct Out {
    std::size_t xj, xk, yj, yk;
    Complex z;
    CompositeGreenCheck full, half;
  };
  const auto rows = parallel_map(cfg.ensemble.count, workers, [&](std::size_t i) {
    const auto seed = cfg.ensemble.seed(i);
    const auto [hj, hk] = block_pair(cfg, seed);
    auto rng = instance_rng(seed);
    Out o{pick(rng, hj.dim()), pick(rng, hk.dim()), pick(rng, hj.dim()), pick(rng, hk.dim()), {}, {}, {}};
    if (fixed_z) {
      o.z = *fixed_z;
    } else {
      // centre of sigma(H_J) + sigma(H_K), lifted 1.5 contour radii off the axis
      const auto ej = diagonalize(hj).eigenvalues();
      const auto ek = diagonalize(hk).eigenvalues();
      const double hw = 0.5 * (ek.maxCoeff() - ek.minCoeff());
      o.z = Complex(0.5 * (ej.minCoeff() + ej.maxCoeff() + ek.minCoeff() + ek.maxCoeff()),
                    1.5 * 1.25 * std::max(hw, 0.05));
    }
    o.full = composite_green_check(hj.matrix(), hk.matrix(), {o.xj, o.xk}, {o.yj, o.yk}, o.z, points);
    o.half = composite_green_check(hj.matrix(), hk.matrix(), {o.xj, o.xk}, {o.yj, o.yk}, o.z, std::max(1, points / 2));
    return o;
  });
  ResultTable t;
  t.columns = {{"seed", ColumnType::integer},    {"x_j", ColumnType::integer},       {"x_k", ColumnType::integer},
               {"y_j", ColumnType::integer},     {"y_k", ColumnType::integer},       {"z_re", ColumnType::real},
               {"z_im", ColumnType::real},       {"radius", ColumnType::real},       {"direct_re", ColumnType::real},
               {"direct_im", ColumnType::real},  {"contour_re", ColumnType::real},   {"contour_im", ColumnType::real},
               {"gap", ColumnType::real},        {"gap_half_points", ColumnType::real}};
  double worst = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& o = rows[i];
    worst = std::max(worst, o.full.gap);
    t.add_row({as_int(cfg.ensemble.seed(i)), as_int(o.xj), as_int(o.xk), as_int(o.yj), as_int(o.yk),
               o.z.real(), o.z.imag(), o.full.radius, o.full.direct.real(), o.full.direct.imag(),
               o.full.contour.real(), o.full.contour.imag(), o.full.gap, o.half.gap});
  }
  t.footer = {{"quadrature_points", points}, {"max_gap", worst}};
  return t;
}

inline ResultTable run_subadditivity(const ExperimentConfig& cfg, int workers) {
  struct Out {
    std::size_t x, y;
    double lo, hi;
    SubadditivityCheck check;
  };
  const auto rows = parallel_map(cfg.ensemble.count, workers, [&](std::size_t i) {
    const auto seed = cfg.ensemble.seed(i);
    const auto [hj, hk] = block_pair(cfg, seed);
    const auto sj = diagonalize(hj), sk = diagonalize(hk);
    const auto sjk = diagonalize(Eigen::MatrixXd(kronecker_sum(hj.matrix(), hk.matrix())));
    auto rng = instance_rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto& e = sjk.eigenvalues();
    const double lo = e.minCoeff() - 1.0 + unit(rng) * (e.maxCoeff() - e.minCoeff() + 1.0);
    const double hi = lo + 1.0 + 2.0 * unit(rng);
    const std::size_t dk = hk.dim();
    const std::size_t x = pick(rng, sjk.dim()), y = pick(rng, sjk.dim());
    return Out{x, y, lo, hi,
               subadditivity_check(sj, sk, sjk, {x / dk, x % dk}, {y / dk, y % dk}, EnergyInterval(lo, hi))};
  });
  ResultTable t;
  t.columns = {{"seed", ColumnType::integer}, {"x", ColumnType::integer},   {"y", ColumnType::integer},
               {"I_lo", ColumnType::real},    {"I_hi", ColumnType::real},   {"lhs", ColumnType::real},
               {"rhs", ColumnType::real},     {"holds", ColumnType::boolean}};
  std::int64_t violations = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& o = rows[i];
    violations += o.check.holds() ? 0 : 1;
    t.add_row({as_int(cfg.ensemble.seed(i)), as_int(o.x), as_int(o.y), o.lo, o.hi, o.check.lhs, o.check.rhs,
               o.check.holds()});
  }
  t.footer = {{"instances", rows.size()}, {"violations", violations}, {"tolerance", 1e-9}};
  return t;
}

}  // namespace detail

/// Runs a validated experiment and writes its outputs (unless disabled).
inline ResultTable run(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const int w = std::max(1, opt.workers);
  ResultTable t;
  const auto& k = cfg.kind;
  if (k == "decay_probe") t = detail::run_decay(cfg, w, false);
  else if (k == "equivalence") t = detail::run_decay(cfg, w, true);
  else if (k == "wegner") t = detail::run_wegner(cfg, w);
  else if (k == "b_monitor") t = detail::run_b_monitor(cfg, w);
  else if (k == "rescaling") t = detail::run_rescaling(cfg, w);
  else if (k == "region_scan") t = detail::run_region_scan(cfg, w);
  else if (k == "composite_check") t = detail::run_composite(cfg, w);
  else if (k == "subadditivity") t = detail::run_subadditivity(cfg, w);
  else throw std::invalid_argument("unknown kind '" + k + "'");

  t.meta.kind = k;
  t.meta.config_hash = config_hash(cfg.document);
  t.meta.code_version = std::string(kVersion);
  t.meta.workers = w;
  t.meta.config = cfg.document;
  t.meta.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (opt.write) emit(t, opt.out_dir.value_or(cfg.output.directory), cfg.output.name, cfg.output.formats);
  return t;
}

}  // namespace mplab
