#pragma once

// Experiment configuration: one JSON document, validated up front.
//
// {
//   "kind": "decay_probe",
//   "model": {"d": 1, "L": 16, "n": 1, "sector": "distinguishable", "lambda": 15,
//             "interaction": {"kind": "nn_pair", "alpha": [0, 0.2]},
//             "density": {"kind": "uniform", "a": -0.5, "b": 0.5}, "norm": "l1"},
//   "ensemble": {"base_seed": 1, "count": 400},
//   "numerics": {"s": 0.5, "eta": 1e-6, "quad_points": 16, "interval": [3.5, 4.5]},
//   "params": {...kind specific...},
//   "output": {"directory": "out", "formats": ["csv", "json"], "name": "decay"}
// }

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mplab/bmonitor.hpp"
#include "mplab/version.hpp"
#include "mplab/harness/table.hpp"

namespace mplab {

using nlohmann::json;

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"decay_probe", "wegner",      "equivalence",     "b_monitor",
                                              "rescaling",   "region_scan", "composite_check", "subadditivity"};
  return kinds;
}

struct TimeGrid {
  std::size_t count = 256;
  double t_min = 0.1;
  double t_max = 1e4;
};

struct Numerics {
  double s = 0.5;
  double eta = 1e-6;
  int quad_points = 16;
  TimeGrid time_grid;
  std::optional<EnergyInterval> interval;
  int quadrature_points = 512;  // contour nodes for composite_check
  std::size_t dense_cap = kDenseDimCap;
  std::size_t sparse_cap = 2'000'000;
  double memory_bytes = 8e9;
};

struct OutputConfig {
  std::string directory = "out";
  std::vector<std::string> formats{"csv", "json"};
  std::string name;  // file stem, defaults to the kind
};

struct ExperimentConfig {
  std::string kind;
  Model model;
  Ensemble ensemble;
  Numerics numerics;
  json params = json::object();
  OutputConfig output;
  json document;  // effective document after overrides
};

struct Violation {
  std::string field;
  std::string message;
  bool budget = false;
};

inline std::string describe(const std::vector<Violation>& vs) {
  std::string out;
  for (const auto& v : vs) out += (v.budget ? "budget: " : "invalid: ") + v.field + ": " + v.message + "\n";
  return out;
}

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<Violation> v) : std::runtime_error(describe(v)), violations(std::move(v)) {}
  bool budget_only() const {
    return std::all_of(violations.begin(), violations.end(), [](const Violation& v) { return v.budget; });
  }
  std::vector<Violation> violations;
};

// ---------------------------------------------------------------------------
// Overrides

/// Applies "a.b.c=value". The value is parsed as JSON when possible and taken
/// as a string otherwise. Numeric segments index arrays.
inline void apply_override(json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw std::invalid_argument("override '" + std::string(assignment) + "' is not key=value");
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string seg = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (seg.empty()) throw std::invalid_argument("override '" + key + "' has an empty path segment");
    const bool numeric = std::all_of(seg.begin(), seg.end(), [](char c) { return c >= '0' && c <= '9'; });
    json* child;
    if (node->is_array() && numeric) {
      const auto i = std::stoul(seg);
      if (i >= node->size()) throw std::invalid_argument("override '" + key + "': index " + seg + " out of range");
      child = &(*node)[i];
    } else {
      if (!node->is_object() && !node->is_null())
        throw std::invalid_argument("override '" + key + "': '" + seg + "' is below a non-object");
      child = &(*node)[seg];
    }
    if (dot == std::string::npos) {
      *child = std::move(value);
      return;
    }
    node = child;
    start = dot + 1;
  }
}

/// MPLAB_SEED, when set, replaces ensemble.base_seed.
inline void apply_seed_env(json& doc) {
  const char* env = std::getenv("MPLAB_SEED");
  if (!env || !*env) return;
  std::uint64_t seed = 0;
  const std::string_view s(env);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), seed);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError({{"MPLAB_SEED", "must be a non-negative integer, got '" + std::string(s) + "'"}});
  doc["ensemble"]["base_seed"] = seed;
}

/// FNV-1a of the canonical (key-sorted) document without the output block.
inline std::string config_hash(const json& doc) {
  json copy = doc;
  if (copy.is_object()) copy.erase("output");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(copy.dump())));
  return buf;
}

// ---------------------------------------------------------------------------
// Parsing with violation collection

namespace detail {

class Reader {
 public:
  explicit Reader(std::vector<Violation>& out) : out_(out) {}

  void fail(const std::string& field, const std::string& msg, bool budget = false) {
    out_.push_back({field, msg, budget});
  }

  /// Value at obj[key] converted to T, default when absent, nullopt on a
  /// type error (recorded).
  template <class T>
  std::optional<T> get(const json& obj, const std::string& key, const std::string& path, std::optional<T> def) {
    if (!obj.is_object() || !obj.contains(key)) {
      if (!def) fail(path, "is required");
      return def;
    }
    try {
      return obj.at(key).get<T>();
    } catch (const std::exception&) {
      fail(path, "has the wrong type");
      return std::nullopt;
    }
  }

 private:
  std::vector<Violation>& out_;
};

inline std::size_t sector_dim(const Box& box, int n, Sector sector) {
  try {
    return ConfigIndex(box, n, sector).size();
  } catch (const std::exception&) {
    return std::numeric_limits<std::size_t>::max();
  }
}

}  // namespace detail

struct ParseResult {
  std::optional<ExperimentConfig> config;
  std::vector<Violation> violations;
};

inline std::vector<std::string> param_keys(const std::string& kind) {
  if (kind == "decay_probe" || kind == "equivalence") return {"pairs", "fit_min_distance"};
  if (kind == "wegner") return {"x", "y", "u1", "u2", "subsamples", "energies", "levels", "z_grid"};
  if (kind == "b_monitor") return {"L", "omega_samples", "omega_seed"};
  if (kind == "rescaling") return {"L", "omega_samples", "omega_seed", "a", "A", "nu", "p"};
  if (kind == "region_scan")
    return {"L", "lambdas", "alphas", "omega_samples", "omega_seed", "probe_side", "r2_min", "xi_max", "noise_factor"};
  if (kind == "composite_check" || kind == "subadditivity") return {"n_j", "n_k", "z"};
  return {};
}

inline ParseResult parse_config(const json& doc) {
  ParseResult res;
  detail::Reader rd(res.violations);
  if (!doc.is_object()) {
    rd.fail("<root>", "must be a JSON object");
    return res;
  }
  for (const auto& [k, v] : doc.items())
    if (k != "kind" && k != "model" && k != "ensemble" && k != "numerics" && k != "params" && k != "output")
      rd.fail(k, "unknown top-level field");

  ExperimentConfig cfg;
  cfg.document = doc;
  const auto kind = rd.get<std::string>(doc, "kind", "kind", std::nullopt);
  if (kind) {
    const auto& ks = experiment_kinds();
    if (std::find(ks.begin(), ks.end(), *kind) == ks.end())
      rd.fail("kind", "unknown kind '" + *kind + "'");
    cfg.kind = *kind;
  }

  // model
  const json model = doc.value("model", json::object());
  if (!model.is_object()) rd.fail("model", "must be an object");
  const auto d = rd.get<int>(model, "d", "model.d", 1);
  // the monitor kinds build their own boxes from params.L
  const bool monitor = kind && (*kind == "b_monitor" || *kind == "rescaling" || *kind == "region_scan");
  const auto L = rd.get<int>(model, "L", "model.L", monitor ? std::optional<int>(1) : std::nullopt);
  const auto n = rd.get<int>(model, "n", "model.n", 1);
  const auto lambda = rd.get<double>(model, "lambda", "model.lambda", 1.0);
  const auto sector_s = rd.get<std::string>(model, "sector", "model.sector", "distinguishable");
  const auto norm_s = rd.get<std::string>(model, "norm", "model.norm", "l1");
  const auto boundary_s = rd.get<std::string>(model, "boundary", "model.boundary", "dirichlet_restriction");
  if (d && *d < 1) rd.fail("model.d", "must be >= 1");
  if (d && *d > 3) rd.fail("model.d", "must be <= 3");
  if (L && *L < 1) rd.fail("model.L", "must be >= 1");
  if (n && *n < 1) rd.fail("model.n", "must be >= 1");
  if (lambda && !(std::isfinite(*lambda) && *lambda >= 0)) rd.fail("model.lambda", "must be finite and >= 0");
  if (boundary_s && *boundary_s != "dirichlet_restriction")
    rd.fail("model.boundary", "only 'dirichlet_restriction' is supported");
  std::optional<Sector> sector;
  std::optional<Norm> norm;
  try {
    if (sector_s) sector = sector_from_string(*sector_s);
  } catch (const std::exception& e) {
    rd.fail("model.sector", e.what());
  }
  try {
    if (norm_s) norm = norm_from_string(*norm_s);
  } catch (const std::exception& e) {
    rd.fail("model.norm", e.what());
  }
  std::optional<InteractionSpec> inter;
  try {
    inter = model.value("interaction", json{{"kind", "none"}}).get<InteractionSpec>();
    for (double a : inter->alpha)
      if (!std::isfinite(a)) rd.fail("model.interaction.alpha", "must be finite");
    if (inter->range < 0) rd.fail("model.interaction.range", "must be >= 0");
  } catch (const std::exception& e) {
    rd.fail("model.interaction", e.what());
    inter.reset();
  }
  std::optional<DensitySpec> density;
  try {
    density = model.value("density", json{{"kind", "uniform"}}).get<DensitySpec>();
  } catch (const std::exception& e) {
    rd.fail("model.density", e.what());
  }

  const bool model_ok = d && *d >= 1 && *d <= 3 && L && *L >= 1 && n && *n >= 1 && lambda && sector && norm && inter;
  if (model_ok) {
    if (norm) inter->norm = *norm;
    if (!monitor && (inter->builtin != "none" || inter->active()) && inter->range >= *L) rd.fail("model.interaction.range", "interaction range must be < L");
    if (inter->hardcore && *sector != Sector::hardcore && *sector != Sector::fermion)
      rd.fail("model.interaction.hardcore", "hard-core exclusion needs the hardcore or fermion sector");
    if ((*sector == Sector::fermion || *sector == Sector::hardcore) &&
        static_cast<double>(*n) > std::pow(static_cast<double>(*L), *d))
      rd.fail("model.n", "more particles than sites in an exclusion sector");
    cfg.model.op.box = Box(*d, *L);
    cfg.model.op.n = *n;
    cfg.model.op.sector = *sector;
    cfg.model.op.lambda = *lambda;
    cfg.model.op.interaction = *inter;
    if (density) cfg.model.density = *density;
    cfg.model.norm = *norm;
  }

  // ensemble
  const json ens = doc.value("ensemble", json::object());
  if (ens.is_object() && ens.contains("base_seed")) {
    const json& seed = ens.at("base_seed");
    if (seed.is_number_unsigned() || (seed.is_number_integer() && seed.get<std::int64_t>() >= 0))
      cfg.ensemble.base_seed = seed.get<std::uint64_t>();
    else
      rd.fail("ensemble.base_seed", "must be a non-negative integer");
  }
  const auto count = rd.get<std::int64_t>(ens, "count", "ensemble.count", 400);
  if (count && *count < 2) rd.fail("ensemble.count", "must be >= 2");
  if (count && *count >= 2) cfg.ensemble.count = static_cast<std::size_t>(*count);

  // numerics
  const json num = doc.value("numerics", json::object());
  auto& nu = cfg.numerics;
  if (auto v = rd.get<double>(num, "s", "numerics.s", nu.s)) {
    if (!(*v > 0 && *v < 1)) rd.fail("numerics.s", "s must lie in (0,1)");
    nu.s = *v;
  }
  if (auto v = rd.get<double>(num, "eta", "numerics.eta", nu.eta)) {
    if (!(*v > 0) || !std::isfinite(*v)) rd.fail("numerics.eta", "must be positive");
    nu.eta = *v;
  }
  if (auto v = rd.get<int>(num, "quad_points", "numerics.quad_points", nu.quad_points)) {
    if (*v < 1) rd.fail("numerics.quad_points", "must be >= 1");
    nu.quad_points = *v;
  }
  if (auto v = rd.get<int>(num, "quadrature_points", "numerics.quadrature_points", nu.quadrature_points)) {
    if (*v < 1) rd.fail("numerics.quadrature_points", "must be >= 1");
    nu.quadrature_points = *v;
  }
  if (auto v = rd.get<std::size_t>(num, "dense_cap", "numerics.dense_cap", nu.dense_cap)) nu.dense_cap = *v;
  if (auto v = rd.get<std::size_t>(num, "sparse_cap", "numerics.sparse_cap", nu.sparse_cap)) nu.sparse_cap = *v;
  if (auto v = rd.get<double>(num, "memory_bytes", "numerics.memory_bytes", nu.memory_bytes)) nu.memory_bytes = *v;
  if (num.is_object() && num.contains("time_grid")) {
    const json& tg = num.at("time_grid");
    auto c = rd.get<std::int64_t>(tg, "count", "numerics.time_grid.count", 256);
    auto lo = rd.get<double>(tg, "t_min", "numerics.time_grid.t_min", 0.1);
    auto hi = rd.get<double>(tg, "t_max", "numerics.time_grid.t_max", 1e4);
    if (c && *c < 2) rd.fail("numerics.time_grid.count", "must be >= 2");
    if (lo && hi && !(*lo > 0 && *lo < *hi)) rd.fail("numerics.time_grid", "need 0 < t_min < t_max");
    if (c && *c >= 2 && lo && hi) nu.time_grid = {static_cast<std::size_t>(*c), *lo, *hi};
  }
  if (num.is_object() && num.contains("interval")) {
    const auto iv = rd.get<std::vector<double>>(num, "interval", "numerics.interval", std::nullopt);
    if (iv) {
      if (iv->size() != 2 || !std::isfinite((*iv)[0]) || !std::isfinite((*iv)[1]) || !((*iv)[0] < (*iv)[1]))
        rd.fail("numerics.interval", "must be [lo, hi] with lo < hi");
      else if ((*iv)[1] - (*iv)[0] < 1.0)
        rd.fail("numerics.interval", "|I| >= 1 is required");
      else
        nu.interval = EnergyInterval((*iv)[0], (*iv)[1]);
    }
  }

  // params
  cfg.params = doc.value("params", json::object());
  if (!cfg.params.is_object()) {
    rd.fail("params", "must be an object");
    cfg.params = json::object();
  } else if (kind) {
    const auto keys = param_keys(*kind);
    for (const auto& [k, v] : cfg.params.items())
      if (std::find(keys.begin(), keys.end(), k) == keys.end())
        rd.fail("params." + k, "unknown parameter for kind '" + *kind + "'");
  }

  // output
  const json out = doc.value("output", json::object());
  if (auto v = rd.get<std::string>(out, "directory", "output.directory", cfg.output.directory))
    cfg.output.directory = *v;
  if (auto v = rd.get<std::vector<std::string>>(out, "formats", "output.formats", cfg.output.formats)) {
    for (const auto& f : *v)
      if (f != "csv" && f != "json") rd.fail("output.formats", "unknown format '" + f + "'");
    cfg.output.formats = *v;
  }
  if (auto v = rd.get<std::string>(out, "name", "output.name", cfg.kind)) cfg.output.name = v->empty() ? cfg.kind : *v;

  if (!res.violations.empty() || !model_ok || !kind) {
    if (res.violations.empty()) rd.fail("model", "incomplete");
    return res;
  }
  res.config = std::move(cfg);
  return res;
}

// ---------------------------------------------------------------------------
// Kind-specific checks and budgets

namespace detail {

inline void check_dense(Reader& rd, const std::string& field, std::size_t dim, const Numerics& nu) {
  if (dim > nu.dense_cap)
    rd.fail(field, "configuration-space dimension " + std::to_string(dim) + " exceeds the dense-diagonalization cap " +
                       std::to_string(nu.dense_cap), true);
  else if (16.0 * static_cast<double>(dim) * static_cast<double>(dim) > nu.memory_bytes)
    rd.fail(field, "dense storage for dimension " + std::to_string(dim) + " exceeds the memory budget", true);
}

inline void check_sparse(Reader& rd, const std::string& field, std::size_t dim, const Numerics& nu) {
  if (dim > nu.sparse_cap)
    rd.fail(field, "configuration-space dimension " + std::to_string(dim) + " exceeds the sparse cap " +
                       std::to_string(nu.sparse_cap), true);
}

inline std::optional<Configuration> read_config(Reader& rd, const json& params, const std::string& key,
                                                const ExperimentConfig& cfg) {
  if (!params.contains(key)) {
    rd.fail("params." + key, "is required");
    return std::nullopt;
  }
  try {
    auto c = params.at(key).get<Configuration>();
    if (!params.at(key).is_object() || !params.at(key).contains("sector")) c.sector = cfg.model.op.sector;
    const auto& op = cfg.model.op;
    if (static_cast<int>(c.sites.size()) != op.n) {
      rd.fail("params." + key, "needs exactly n = " + std::to_string(op.n) + " sites");
      return std::nullopt;
    }
    if (c.sector != op.sector) {
      rd.fail("params." + key, "sector differs from model.sector");
      return std::nullopt;
    }
    for (const auto& s : c.sites)
      if (!op.box.contains(s)) {
        rd.fail("params." + key, "site outside the box");
        return std::nullopt;
      }
    (void)op.index().index(c);
    return c;
  } catch (const std::exception& e) {
    rd.fail("params." + key, e.what());
    return std::nullopt;
  }
}

inline std::optional<Site> read_site(Reader& rd, const json& params, const std::string& key,
                                     const ExperimentConfig& cfg) {
  if (!params.contains(key)) {
    rd.fail("params." + key, "is required");
    return std::nullopt;
  }
  try {
    auto s = params.at(key).get<Site>();
    if (!cfg.model.op.box.contains(s)) {
      rd.fail("params." + key, "site outside the box");
      return std::nullopt;
    }
    return s;
  } catch (const std::exception& e) {
    rd.fail("params." + key, e.what());
    return std::nullopt;
  }
}

inline int param_int(Reader& rd, const json& p, const std::string& key, int def, int min) {
  const auto v = rd.get<int>(p, key, "params." + key, def);
  if (v && *v < min) rd.fail("params." + key, "must be >= " + std::to_string(min));
  return v.value_or(def);
}

inline double param_real(Reader& rd, const json& p, const std::string& key, double def) {
  const auto v = rd.get<double>(p, key, "params." + key, def);
  if (v && !std::isfinite(*v)) rd.fail("params." + key, "must be finite");
  return v.value_or(def);
}

inline int monitor_L(Reader& rd, const json& p) {
  const auto v = rd.get<int>(p, "L", "params.L", std::nullopt);
  if (v && (*v < 2 || *v % 2 != 0)) rd.fail("params.L", "must be even and >= 2");
  return v.value_or(2);
}

}  // namespace detail

inline std::vector<Violation> check_kind(const ExperimentConfig& cfg) {
  std::vector<Violation> out;
  detail::Reader rd(out);
  const auto& op = cfg.model.op;
  const auto& nu = cfg.numerics;
  const auto& p = cfg.params;
  const std::size_t dim = detail::sector_dim(op.box, op.n, op.sector);
  const std::string& k = cfg.kind;

  if (k == "decay_probe" || k == "equivalence") {
    detail::check_dense(rd, "model", dim, nu);
    detail::param_int(rd, p, "fit_min_distance", 0, 0);
    if (p.contains("pairs")) {
      if (!p.at("pairs").is_array() || p.at("pairs").empty()) {
        rd.fail("params.pairs", "must be a non-empty array of {x, y}");
      } else {
        for (std::size_t i = 0; i < p.at("pairs").size(); ++i) {
          const json& pair = p.at("pairs")[i];
          if (!pair.is_object()) {
            rd.fail("params.pairs", "entries must be objects {x, y}");
            break;
          }
          detail::read_config(rd, pair, "x", cfg);
          detail::read_config(rd, pair, "y", cfg);
        }
      }
    } else if (op.box.side() < op.n) {
      rd.fail("model.L", "the default pair family needs L >= n");
    }
  } else if (k == "wegner") {
    if (op.lambda == 0.0) rd.fail("model.lambda", "must be non-zero for the conditional bound");
    detail::check_sparse(rd, "model", dim, nu);
    if (dim <= 2000) detail::check_dense(rd, "model", dim, nu);
    const auto x = detail::read_config(rd, p, "x", cfg);
    const auto y = detail::read_config(rd, p, "y", cfg);
    const auto u1 = detail::read_site(rd, p, "u1", cfg);
    const auto u2 = detail::read_site(rd, p, "u2", cfg);
    if (x && u1 && occupation(*x, *u1) < 1) rd.fail("params.u1", "x has no particle at u1");
    if (y && u2 && occupation(*y, *u2) < 1) rd.fail("params.u2", "y has no particle at u2");
    detail::param_int(rd, p, "subsamples", 2000, 2);
    detail::param_int(rd, p, "energies", 20, 1);
    detail::param_int(rd, p, "levels", 10, 1);
    if (p.contains("z_grid")) {
      try {
        const auto zs = p.at("z_grid").get<std::vector<std::vector<double>>>();
        if (zs.empty()) rd.fail("params.z_grid", "must not be empty");
        for (const auto& z : zs)
          if (z.size() != 2) rd.fail("params.z_grid", "entries must be [re, im]");
      } catch (const std::exception&) {
        rd.fail("params.z_grid", "must be an array of [re, im]");
      }
    }
  } else if (k == "b_monitor" || k == "rescaling" || k == "region_scan") {
    const int L = detail::monitor_L(rd, p);
    detail::param_int(rd, p, "omega_samples", 0, 0);
    detail::param_int(rd, p, "omega_seed", 7, 0);
    const int top = k == "b_monitor" ? L : 2 * L;
    if (op.interaction.active() && op.interaction.range >= 2 * L + 1)
      rd.fail("model.interaction.range", "interaction range must be < the monitor box side");
    detail::check_dense(rd, "params.L", detail::sector_dim(centered_box(op.box.dim(), top), op.n, op.sector), nu);
    if (k == "rescaling")
      for (const char* c : {"a", "A", "nu", "p"}) detail::param_real(rd, p, c, 1.0);
    if (k == "region_scan") {
      for (const char* key : {"lambdas", "alphas"}) {
        const auto v = rd.get<std::vector<double>>(p, key, std::string("params.") + key, std::nullopt);
        if (v && v->empty()) rd.fail(std::string("params.") + key, "must not be empty");
        if (v)
          for (double x : *v)
            if (!std::isfinite(x)) rd.fail(std::string("params.") + key, "must be finite");
      }
      const int side = detail::param_int(rd, p, "probe_side", 2 * L + 4, 1);
      if (side < op.n) rd.fail("params.probe_side", "must be >= n");
      detail::check_dense(rd, "params.probe_side", detail::sector_dim(Box(op.box.dim(), side), op.n, op.sector), nu);
      detail::param_real(rd, p, "r2_min", 0.9);
      detail::param_real(rd, p, "xi_max", 2.0);
      detail::param_real(rd, p, "noise_factor", 1.0);
      if (op.sector == Sector::fermion || op.sector == Sector::hardcore)
        rd.fail("model.sector", "region_scan builds its own interaction and needs a non-exclusion sector");
    }
  } else if (k == "composite_check" || k == "subadditivity") {
    const int nj = detail::param_int(rd, p, "n_j", 1, 1);
    const int nk = detail::param_int(rd, p, "n_k", 1, 1);
    const std::size_t dj = detail::sector_dim(op.box, nj, op.sector);
    const std::size_t dk = detail::sector_dim(op.box, nk, op.sector);
    detail::check_dense(rd, "params.n_j", dj, nu);
    detail::check_dense(rd, "params.n_k", dk, nu);
    const double prod = static_cast<double>(dj) * static_cast<double>(dk);
    if (k == "subadditivity") {
      if (prod > static_cast<double>(nu.dense_cap))
        rd.fail("params", "composite dimension " + format_real(prod) + " exceeds the dense-diagonalization cap", true);
    } else if (prod > static_cast<double>(nu.sparse_cap)) {
      rd.fail("params", "composite dimension " + format_real(prod) + " exceeds the sparse cap", true);
    }
    if ((op.sector == Sector::fermion || op.sector == Sector::hardcore) &&
        std::max(nj, nk) > static_cast<int>(op.box.volume()))
      rd.fail("params", "more particles than sites in an exclusion sector");
    if (p.contains("z")) {
      const auto z = rd.get<std::vector<double>>(p, "z", "params.z", std::nullopt);
      if (z && z->size() != 2) rd.fail("params.z", "must be [re, im]");
    }
  }
  return out;
}

/// Empty iff the document describes a runnable experiment.
inline std::vector<Violation> validate(const json& doc) {
  auto res = parse_config(doc);
  if (!res.config) return res.violations;
  auto more = check_kind(*res.config);
  res.violations.insert(res.violations.end(), more.begin(), more.end());
  return res.violations;
}

/// Parses and validates, throwing ConfigError with every violation.
inline ExperimentConfig load_config(const json& doc) {
  auto res = parse_config(doc);
  if (!res.config) throw ConfigError(res.violations);
  auto more = check_kind(*res.config);
  if (!more.empty()) throw ConfigError(more);
  return std::move(*res.config);
}

}  // namespace mplab
