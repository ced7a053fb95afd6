#pragma once

// I.i.d. site potentials with bounded, compactly supported densities.
//
// Every site draws from its own engine keyed by (seed, site coordinates,
// stream). Values therefore do not depend on enumeration order or on the box
// a site is viewed from: a sub-box sees the restriction of the parent
// realization, and resampling one site leaves every other site untouched.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mplab/configspace.hpp"

namespace mplab {

struct UniformDensity {
  double a = -0.5;
  double b = 0.5;
};

/// Gaussian of width sigma truncated to [-cutoff, cutoff].
struct TruncatedGaussianDensity {
  double sigma = 1.0;
  double cutoff = 1.0;
};

/// Piecewise-constant density: heights[i] on [breaks[i], breaks[i+1]).
struct PiecewiseDensity {
  std::vector<double> breaks;
  std::vector<double> heights;
};

class DensitySpec {
 public:
  using Kind = std::variant<UniformDensity, TruncatedGaussianDensity, PiecewiseDensity>;

  DensitySpec() : DensitySpec(UniformDensity{}) {}

  explicit DensitySpec(Kind kind) : kind_(std::move(kind)) {
    std::visit([this](const auto& k) { init(k); }, kind_);
  }

  static DensitySpec uniform(double a, double b) { return DensitySpec(UniformDensity{a, b}); }
  static DensitySpec truncated_gaussian(double sigma, double cutoff) {
    return DensitySpec(TruncatedGaussianDensity{sigma, cutoff});
  }
  static DensitySpec piecewise(std::vector<double> breaks, std::vector<double> heights) {
    return DensitySpec(PiecewiseDensity{std::move(breaks), std::move(heights)});
  }

  const Kind& kind() const { return kind_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  /// sup of |v| over the support.
  double support_bound() const { return std::max(std::abs(lo_), std::abs(hi_)); }
  /// ||rho||_inf
  double bound() const { return bound_; }

  double pdf(double v) const {
    if (v < lo_ || v > hi_) return 0.0;
    return std::visit(
        [&](const auto& k) -> double {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, UniformDensity>) {
            return 1.0 / (k.b - k.a);
          } else if constexpr (std::is_same_v<K, TruncatedGaussianDensity>) {
            return std::exp(-v * v / (2 * k.sigma * k.sigma)) / norm_;
          } else {
            const auto it = std::upper_bound(k.breaks.begin(), k.breaks.end(), v);
            auto seg = static_cast<std::size_t>(std::distance(k.breaks.begin(), it));
            seg = seg == 0 ? 0 : std::min(seg - 1, k.heights.size() - 1);
            return k.heights[seg];
          }
        },
        kind_);
  }

  double cdf(double v) const {
    if (v <= lo_) return 0.0;
    if (v >= hi_) return 1.0;
    return std::visit(
        [&](const auto& k) -> double {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, UniformDensity>) {
            return (v - k.a) / (k.b - k.a);
          } else if constexpr (std::is_same_v<K, TruncatedGaussianDensity>) {
            const double s = k.sigma * std::numbers::sqrt2;
            return 0.5 * (std::erf(v / s) + std::erf(k.cutoff / s)) / std::erf(k.cutoff / s);
          } else {
            double acc = 0.0;
            for (std::size_t i = 0; i < k.heights.size(); ++i) {
              if (v <= k.breaks[i]) break;
              acc += k.heights[i] * (std::min(v, k.breaks[i + 1]) - k.breaks[i]);
            }
            return acc;
          }
        },
        kind_);
  }

  /// Draw one value from a dedicated engine.
  double draw(std::mt19937_64& engine) const {
    return std::visit(
        [&](const auto& k) -> double {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, UniformDensity>) {
            return std::min(k.a + (k.b - k.a) * unit(engine), k.b);
          } else if constexpr (std::is_same_v<K, TruncatedGaussianDensity>) {
            // rejection against the uniform envelope on the support
            for (;;) {
              const double v = -k.cutoff + 2 * k.cutoff * unit(engine);
              if (unit(engine) < std::exp(-v * v / (2 * k.sigma * k.sigma))) return v;
            }
          } else {
            const double target = unit(engine);
            double acc = 0.0;
            for (std::size_t i = 0; i < k.heights.size(); ++i) {
              const double width = k.breaks[i + 1] - k.breaks[i];
              const double mass = k.heights[i] * width;
              if (mass > 0 && (target < acc + mass || i + 1 == k.heights.size()))
                return std::clamp(k.breaks[i] + (target - acc) / k.heights[i], k.breaks[i], k.breaks[i + 1]);
              acc += mass;
            }
            return hi_;
          }
        },
        kind_);
  }

  /// 53-bit uniform on [0, 1); fixed conversion so draws are identical across
  /// standard library implementations.
  static double unit(std::mt19937_64& engine) { return static_cast<double>(engine() >> 11) * 0x1.0p-53; }

  friend bool operator==(const DensitySpec& a, const DensitySpec& b) {
    return a.lo_ == b.lo_ && a.hi_ == b.hi_ && a.bound_ == b.bound_ && a.kind_.index() == b.kind_.index();
  }

 private:
  void init(const UniformDensity& k) {
    if (!(k.a < k.b) || !std::isfinite(k.a) || !std::isfinite(k.b))
      throw std::invalid_argument("uniform density needs finite a < b");
    lo_ = k.a;
    hi_ = k.b;
    bound_ = 1.0 / (k.b - k.a);
  }
  void init(const TruncatedGaussianDensity& k) {
    if (!(k.sigma > 0) || !(k.cutoff > 0)) throw std::invalid_argument("truncated gaussian needs sigma, cutoff > 0");
    lo_ = -k.cutoff;
    hi_ = k.cutoff;
    norm_ = k.sigma * std::sqrt(2 * std::numbers::pi) * std::erf(k.cutoff / (k.sigma * std::numbers::sqrt2));
    bound_ = 1.0 / norm_;
  }
  void init(const PiecewiseDensity& k) {
    if (k.breaks.size() < 2 || k.heights.size() + 1 != k.breaks.size())
      throw std::invalid_argument("piecewise density needs m+1 breaks for m heights");
    double mass = 0.0;
    for (std::size_t i = 0; i < k.heights.size(); ++i) {
      if (!(k.breaks[i] < k.breaks[i + 1])) throw std::invalid_argument("piecewise breaks must increase");
      if (k.heights[i] < 0) throw std::invalid_argument("piecewise heights must be non-negative");
      mass += k.heights[i] * (k.breaks[i + 1] - k.breaks[i]);
    }
    if (std::abs(mass - 1.0) > 1e-10)
      throw std::invalid_argument("piecewise density integrates to " + std::to_string(mass) + ", not 1");
    lo_ = k.breaks.front();
    hi_ = k.breaks.back();
    bound_ = *std::max_element(k.heights.begin(), k.heights.end());
  }

  Kind kind_;
  double lo_ = -0.5;
  double hi_ = 0.5;
  double bound_ = 1.0;
  double norm_ = 1.0;
};

/// Total mass of the density by adaptive Gauss-Kronrod quadrature.
inline double integrate_density(const DensitySpec& density) {
  std::vector<double> cuts{density.lo(), density.hi()};
  if (const auto* p = std::get_if<PiecewiseDensity>(&density.kind())) cuts = p->breaks;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    // stay strictly inside each smooth piece
    const double a = cuts[i], b = cuts[i + 1];
    const double mid = 0.5 * (a + b);
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double v) { return density.pdf(std::clamp(v, std::nextafter(a, mid), std::nextafter(b, mid))); }, a, b,
        15, 1e-14);
  }
  return total;
}

inline void to_json(nlohmann::json& j, const DensitySpec& d) {
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, UniformDensity>)
          j = {{"kind", "uniform"}, {"a", k.a}, {"b", k.b}};
        else if constexpr (std::is_same_v<K, TruncatedGaussianDensity>)
          j = {{"kind", "truncated_gaussian"}, {"sigma", k.sigma}, {"cutoff", k.cutoff}};
        else
          j = {{"kind", "piecewise"}, {"breaks", k.breaks}, {"heights", k.heights}};
      },
      d.kind());
}

inline void from_json(const nlohmann::json& j, DensitySpec& d) {
  const auto kind = j.value("kind", std::string("uniform"));
  if (kind == "uniform")
    d = DensitySpec::uniform(j.value("a", -0.5), j.value("b", 0.5));
  else if (kind == "truncated_gaussian")
    d = DensitySpec::truncated_gaussian(j.value("sigma", 1.0), j.value("cutoff", 1.0));
  else if (kind == "piecewise")
    d = DensitySpec::piecewise(j.at("breaks").get<std::vector<double>>(), j.at("heights").get<std::vector<double>>());
  else
    throw std::invalid_argument("unknown density kind '" + kind + "'");
}

// ---------------------------------------------------------------------------

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kBaseStream = 0;

}  // namespace detail

/// Engine seed for one site's substream. stream 0 is the base draw; stream
/// k+1 is conditional resample k.
inline std::uint64_t site_key(std::uint64_t seed, const Site& site, std::uint64_t stream) {
  std::uint64_t h = detail::splitmix64(seed ^ 0x6d706c6162ULL);
  for (int c : site.coords) h = detail::splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(c)));
  h = detail::splitmix64(h ^ stream);
  return h;
}

struct Resample {
  Site site;
  std::uint64_t subseed;
  friend bool operator==(const Resample&, const Resample&) = default;
};

class DisorderRealization {
 public:
  DisorderRealization(Box box, DensitySpec density, std::uint64_t seed, std::vector<double> values,
                      std::vector<Resample> history = {})
      : box_(std::move(box)),
        density_(std::move(density)),
        seed_(seed),
        values_(std::move(values)),
        history_(std::move(history)) {}

  const Box& box() const { return box_; }
  const DensitySpec& density() const { return density_; }
  std::uint64_t seed() const { return seed_; }
  std::span<const double> values() const { return values_; }
  const std::vector<Resample>& history() const { return history_; }

  double value(std::size_t site_index) const { return values_.at(site_index); }
  double value(const Site& s) const { return values_.at(box_.encode(s)); }

 private:
  Box box_;
  DensitySpec density_;
  std::uint64_t seed_;
  std::vector<double> values_;
  std::vector<Resample> history_;
};

inline double draw_site(const DensitySpec& density, std::uint64_t seed, const Site& site, std::uint64_t stream) {
  std::mt19937_64 engine(site_key(seed, site, stream));
  return density.draw(engine);
}

inline DisorderRealization sample(const Box& box, const DensitySpec& density, std::uint64_t seed) {
  std::vector<double> values(box.volume());
  for (std::size_t i = 0; i < values.size(); ++i)
    values[i] = draw_site(density, seed, box.decode(i), detail::kBaseStream);
  return DisorderRealization(box, density, seed, std::move(values));
}

/// Fresh independent draws at the marked sites, everything else unchanged.
/// Successive subseeds enumerate the conditional ensemble given the
/// background potential.
inline DisorderRealization resample_at(const DisorderRealization& real, std::span<const Site> sites,
                                       std::uint64_t subseed) {
  if (sites.empty() || sites.size() > 2) throw std::invalid_argument("resample_at: mark one or two sites");
  std::vector<double> values(real.values().begin(), real.values().end());
  auto history = real.history();
  for (const auto& s : sites) {
    if (!real.box().contains(s)) throw std::out_of_range("resample_at: marked site outside box");
    if (subseed == std::numeric_limits<std::uint64_t>::max())
      throw std::invalid_argument("resample_at: subseed out of range");
    values[real.box().encode(s)] = draw_site(real.density(), real.seed(), s, subseed + 1);
    history.push_back({s, subseed});
  }
  return DisorderRealization(real.box(), real.density(), real.seed(), std::move(values), std::move(history));
}

}  // namespace mplab
