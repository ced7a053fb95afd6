#pragma once

// Finite lattice boxes, n-particle configurations and their geometry.

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <iterator>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace mplab {

enum class Sector { distinguishable, boson, fermion, hardcore };

/// Lattice norm used for every configuration distance.
enum class Norm { l1, linf };

inline std::string_view to_string(Sector s) {
  switch (s) {
    case Sector::distinguishable: return "distinguishable";
    case Sector::boson: return "boson";
    case Sector::fermion: return "fermion";
    case Sector::hardcore: return "hardcore";
  }
  return "?";
}

inline Sector sector_from_string(std::string_view s) {
  if (s == "distinguishable") return Sector::distinguishable;
  if (s == "boson") return Sector::boson;
  if (s == "fermion") return Sector::fermion;
  if (s == "hardcore") return Sector::hardcore;
  throw std::invalid_argument("unknown sector '" + std::string(s) + "'");
}

inline std::string_view to_string(Norm n) { return n == Norm::l1 ? "l1" : "linf"; }

inline Norm norm_from_string(std::string_view s) {
  if (s == "l1") return Norm::l1;
  if (s == "linf") return Norm::linf;
  throw std::invalid_argument("unknown norm '" + std::string(s) + "'");
}

/// A point of Z^d.
struct Site {
  std::vector<int> coords;

  Site() = default;
  Site(std::initializer_list<int> c) : coords(c) {}
  explicit Site(std::vector<int> c) : coords(std::move(c)) {}

  int dim() const { return static_cast<int>(coords.size()); }
  int operator[](int i) const { return coords[static_cast<std::size_t>(i)]; }

  friend bool operator==(const Site&, const Site&) = default;
  friend auto operator<=>(const Site&, const Site&) = default;
};

inline int distance(const Site& a, const Site& b, Norm norm = Norm::l1) {
  if (a.dim() != b.dim()) throw std::invalid_argument("distance: dimension mismatch");
  int acc = 0;
  for (int i = 0; i < a.dim(); ++i) {
    const int delta = std::abs(a[i] - b[i]);
    acc = norm == Norm::l1 ? acc + delta : std::max(acc, delta);
  }
  return acc;
}

/// Cube origin + [0, side)^d. Sites are linearly indexed row-major with the
/// first coordinate most significant, so index order is lexicographic order.
class Box {
 public:
  Box() = default;
  Box(int d, int side) : Box(d, side, Site(std::vector<int>(static_cast<std::size_t>(d), 0))) {}
  Box(int d, int side, Site origin) : d_(d), side_(side), origin_(std::move(origin)) {
    if (d_ < 1) throw std::invalid_argument("Box: dimension must be positive");
    if (side_ < 1) throw std::invalid_argument("Box: side must be positive");
    if (origin_.dim() != d_) throw std::invalid_argument("Box: origin dimension mismatch");
    volume_ = 1;
    for (int i = 0; i < d_; ++i) {
      if (volume_ > std::numeric_limits<std::size_t>::max() / static_cast<std::size_t>(side_))
        throw std::overflow_error("Box: volume overflow");
      volume_ *= static_cast<std::size_t>(side_);
    }
  }

  int dim() const { return d_; }
  int side() const { return side_; }
  const Site& origin() const { return origin_; }
  std::size_t volume() const { return volume_; }

  bool contains(const Site& s) const {
    if (s.dim() != d_) return false;
    for (int i = 0; i < d_; ++i) {
      const int rel = s[i] - origin_[i];
      if (rel < 0 || rel >= side_) return false;
    }
    return true;
  }

  std::size_t encode(const Site& s) const {
    if (!contains(s)) throw std::out_of_range("Box::encode: site outside box");
    std::size_t idx = 0;
    for (int i = 0; i < d_; ++i)
      idx = idx * static_cast<std::size_t>(side_) + static_cast<std::size_t>(s[i] - origin_[i]);
    return idx;
  }

  Site decode(std::size_t idx) const {
    if (idx >= volume_) throw std::out_of_range("Box::decode: index out of range");
    std::vector<int> c(static_cast<std::size_t>(d_));
    for (int i = d_ - 1; i >= 0; --i) {
      c[static_cast<std::size_t>(i)] = origin_[i] + static_cast<int>(idx % static_cast<std::size_t>(side_));
      idx /= static_cast<std::size_t>(side_);
    }
    return Site(std::move(c));
  }

  /// Nearest neighbours of a site that stay inside the box.
  std::vector<std::size_t> neighbors(std::size_t idx) const {
    std::vector<std::size_t> out;
    std::size_t stride = 1;
    for (int i = d_ - 1; i >= 0; --i) {
      const auto coord = (idx / stride) % static_cast<std::size_t>(side_);
      if (coord > 0) out.push_back(idx - stride);
      if (coord + 1 < static_cast<std::size_t>(side_)) out.push_back(idx + stride);
      stride *= static_cast<std::size_t>(side_);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  friend bool operator==(const Box&, const Box&) = default;

 private:
  int d_ = 1;
  int side_ = 1;
  Site origin_{0};
  std::size_t volume_ = 1;
};

struct Configuration {
  std::vector<Site> sites;
  Sector sector = Sector::distinguishable;

  Configuration() = default;
  Configuration(std::vector<Site> s, Sector sec = Sector::distinguishable)
      : sites(std::move(s)), sector(sec) {}

  int particles() const { return static_cast<int>(sites.size()); }

  /// Ordering invariant of the sector: fermion/hardcore strictly increasing,
  /// boson non-decreasing, distinguishable unconstrained.
  bool ordered() const {
    for (std::size_t i = 1; i < sites.size(); ++i) {
      switch (sector) {
        case Sector::distinguishable: break;
        case Sector::boson:
          if (sites[i] < sites[i - 1]) return false;
          break;
        case Sector::fermion:
        case Sector::hardcore:
          if (!(sites[i - 1] < sites[i])) return false;
          break;
      }
    }
    return !sites.empty();
  }

  friend bool operator==(const Configuration&, const Configuration&) = default;
};

// ---------------------------------------------------------------------------
// Geometry

/// N_u(x): number of particles of x sitting at u.
inline int occupation(const Configuration& config, const Site& u) {
  return static_cast<int>(std::count(config.sites.begin(), config.sites.end(), u));
}

inline int diameter(const Configuration& config, Norm norm = Norm::l1) {
  int best = 0;
  for (std::size_t i = 0; i < config.sites.size(); ++i)
    for (std::size_t j = i + 1; j < config.sites.size(); ++j)
      best = std::max(best, distance(config.sites[i], config.sites[j], norm));
  return best;
}

/// dist(p, c): distance from a site to the occupied set of a configuration.
inline int distance_to_set(const Site& p, const Configuration& c, Norm norm = Norm::l1) {
  if (c.sites.empty()) throw std::invalid_argument("distance_to_set: empty configuration");
  int best = std::numeric_limits<int>::max();
  for (const auto& q : c.sites) best = std::min(best, distance(p, q, norm));
  return best;
}

/// Hausdorff pseudo-distance between the occupied sets of x and y.
inline int hausdorff_dist(const Configuration& x, const Configuration& y, Norm norm = Norm::l1) {
  if (x.particles() != y.particles())
    throw std::invalid_argument("hausdorff_dist: particle numbers differ");
  int best = 0;
  for (const auto& p : x.sites) best = std::max(best, distance_to_set(p, y, norm));
  for (const auto& q : y.sites) best = std::max(best, distance_to_set(q, x, norm));
  return best;
}

inline constexpr int kDefaultPermutationCap = 8;

/// Minimal total transport cost over particle relabellings. Exhaustive over
/// S_n, so n is capped.
inline int symmetrized_dist(const Configuration& x, const Configuration& y, Norm norm = Norm::l1,
                            int cap = kDefaultPermutationCap) {
  if (x.particles() != y.particles())
    throw std::invalid_argument("symmetrized_dist: particle numbers differ");
  const int n = x.particles();
  if (n > cap)
    throw std::length_error("symmetrized_dist: n=" + std::to_string(n) + " exceeds cap " +
                            std::to_string(cap));
  std::vector<std::vector<int>> cost(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(n)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          distance(x.sites[static_cast<std::size_t>(i)], y.sites[static_cast<std::size_t>(j)], norm);
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  int best = std::numeric_limits<int>::max();
  do {
    int total = 0;
    for (int i = 0; i < n && total < best; ++i)
      total += cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

/// Exponent scale of the non-clustered decay bound:
/// min{ dist_H(x,y), max{diam x, diam y} / (n-1) }.
inline double nonclustered_scale(const Configuration& x, const Configuration& y, Norm norm = Norm::l1) {
  const int n = x.particles();
  const double dh = hausdorff_dist(x, y, norm);
  if (n < 2) return dh;
  const double spread = std::max(diameter(x, norm), diameter(y, norm));
  return std::min(dh, spread / (n - 1));
}

// ---------------------------------------------------------------------------
// Indexing

namespace detail {

inline std::size_t checked_mul(std::size_t a, std::size_t b) {
  if (a != 0 && b > std::numeric_limits<std::size_t>::max() / a)
    throw std::overflow_error("configuration count overflow");
  return a * b;
}

inline std::size_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::size_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    // r * (n - k + i) / i stays integral at every step
    const std::size_t g = std::gcd(r, i);
    r = checked_mul(r / g, (n - k + i) / (i / g));
  }
  return r;
}

}  // namespace detail

/// Site-index tuple of a configuration (one entry per particle).
using SiteTuple = std::vector<std::size_t>;

/// Bijection between sector configurations and [0, size), in lexicographic
/// order of the site tuples.
class ConfigIndex {
 public:
  ConfigIndex(Box box, int n, Sector sector) : box_(std::move(box)), n_(n), sector_(sector) {
    if (n_ < 1) throw std::invalid_argument("ConfigIndex: particle number must be positive");
    const std::size_t v = box_.volume();
    const auto un = static_cast<std::size_t>(n_);
    switch (sector_) {
      case Sector::distinguishable:
        size_ = 1;
        for (int i = 0; i < n_; ++i) size_ = detail::checked_mul(size_, v);
        break;
      case Sector::boson: size_ = detail::binomial(v + un - 1, un); break;
      case Sector::fermion:
      case Sector::hardcore: size_ = detail::binomial(v, un); break;
    }
  }

  const Box& box() const { return box_; }
  int particles() const { return n_; }
  Sector sector() const { return sector_; }
  std::size_t size() const { return size_; }

  bool valid_tuple(std::span<const std::size_t> t) const {
    if (t.size() != static_cast<std::size_t>(n_)) return false;
    for (auto s : t)
      if (s >= box_.volume()) return false;
    for (std::size_t i = 1; i < t.size(); ++i) {
      if (sector_ == Sector::boson && t[i] < t[i - 1]) return false;
      if ((sector_ == Sector::fermion || sector_ == Sector::hardcore) && t[i] <= t[i - 1]) return false;
    }
    return true;
  }

  std::size_t index_of(std::span<const std::size_t> t) const {
    if (!valid_tuple(t)) throw std::invalid_argument("ConfigIndex: tuple not valid for sector");
    const std::size_t v = box_.volume();
    std::size_t rank = 0;
    switch (sector_) {
      case Sector::distinguishable:
        for (auto s : t) rank = rank * v + s;
        return rank;
      case Sector::fermion:
      case Sector::hardcore: {
        std::size_t next = 0;
        for (std::size_t i = 0; i < t.size(); ++i) {
          const std::size_t rest = t.size() - 1 - i;
          for (std::size_t s = next; s < t[i]; ++s) rank += detail::binomial(v - 1 - s, rest);
          next = t[i] + 1;
        }
        return rank;
      }
      case Sector::boson: {
        std::size_t next = 0;
        for (std::size_t i = 0; i < t.size(); ++i) {
          const std::size_t rest = t.size() - 1 - i;
          for (std::size_t s = next; s < t[i]; ++s) rank += multisets(v - s, rest);
          next = t[i];
        }
        return rank;
      }
    }
    return rank;
  }

  std::size_t index(const Configuration& c) const {
    if (c.sector != sector_) throw std::invalid_argument("ConfigIndex: sector mismatch");
    if (!c.ordered()) throw std::invalid_argument("ConfigIndex: configuration violates sector ordering");
    return index_of(tuple_of(c));
  }

  SiteTuple tuple_of(const Configuration& c) const {
    if (c.particles() != n_) throw std::invalid_argument("ConfigIndex: particle number mismatch");
    SiteTuple t;
    t.reserve(c.sites.size());
    for (const auto& s : c.sites) t.push_back(box_.encode(s));
    return t;
  }

  SiteTuple tuple_at(std::size_t k) const {
    if (k >= size_) throw std::out_of_range("ConfigIndex::tuple_at");
    const std::size_t v = box_.volume();
    SiteTuple t(static_cast<std::size_t>(n_));
    switch (sector_) {
      case Sector::distinguishable:
        for (int i = n_ - 1; i >= 0; --i) {
          t[static_cast<std::size_t>(i)] = k % v;
          k /= v;
        }
        return t;
      case Sector::fermion:
      case Sector::hardcore: {
        std::size_t s = 0;
        for (std::size_t i = 0; i < t.size(); ++i, ++s) {
          const std::size_t rest = t.size() - 1 - i;
          for (;; ++s) {
            const std::size_t block = detail::binomial(v - 1 - s, rest);
            if (k < block) break;
            k -= block;
          }
          t[i] = s;
        }
        return t;
      }
      case Sector::boson: {
        std::size_t s = 0;
        for (std::size_t i = 0; i < t.size(); ++i) {
          const std::size_t rest = t.size() - 1 - i;
          for (;; ++s) {
            const std::size_t block = multisets(v - s, rest);
            if (k < block) break;
            k -= block;
          }
          t[i] = s;
        }
        return t;
      }
    }
    return t;
  }

  Configuration configuration_of(std::span<const std::size_t> t) const {
    Configuration c;
    c.sector = sector_;
    c.sites.reserve(t.size());
    for (auto s : t) c.sites.push_back(box_.decode(s));
    return c;
  }

  Configuration configuration(std::size_t k) const { return configuration_of(tuple_at(k)); }

  /// Advance a tuple to its lexicographic successor; false past the end.
  bool next_tuple(SiteTuple& t) const {
    const std::size_t v = box_.volume();
    const std::size_t n = t.size();
    switch (sector_) {
      case Sector::distinguishable:
        for (std::size_t i = n; i-- > 0;) {
          if (++t[i] < v) return true;
          t[i] = 0;
        }
        return false;
      case Sector::fermion:
      case Sector::hardcore:
        for (std::size_t i = n; i-- > 0;) {
          if (t[i] < v - n + i) {
            ++t[i];
            for (std::size_t j = i + 1; j < n; ++j) t[j] = t[j - 1] + 1;
            return true;
          }
        }
        return false;
      case Sector::boson:
        for (std::size_t i = n; i-- > 0;) {
          if (t[i] + 1 < v) {
            ++t[i];
            for (std::size_t j = i + 1; j < n; ++j) t[j] = t[i];
            return true;
          }
        }
        return false;
    }
    return false;
  }

  SiteTuple first_tuple() const {
    SiteTuple t(static_cast<std::size_t>(n_), 0);
    if (sector_ == Sector::fermion || sector_ == Sector::hardcore)
      std::iota(t.begin(), t.end(), std::size_t{0});
    return t;
  }

  class Iterator {
   public:
    using iterator_category = std::input_iterator_tag;
    using value_type = Configuration;
    using difference_type = std::ptrdiff_t;

    Iterator() = default;
    Iterator(const ConfigIndex* index, std::size_t k) : index_(index), k_(k) {
      if (k_ < index_->size()) tuple_ = index_->tuple_at(k_);
    }
    Configuration operator*() const { return index_->configuration_of(tuple_); }
    const SiteTuple& tuple() const { return tuple_; }
    std::size_t position() const { return k_; }
    Iterator& operator++() {
      ++k_;
      if (k_ < index_->size()) index_->next_tuple(tuple_);
      return *this;
    }
    void operator++(int) { ++*this; }
    friend bool operator==(const Iterator& a, const Iterator& b) { return a.k_ == b.k_; }

   private:
    const ConfigIndex* index_ = nullptr;
    std::size_t k_ = 0;
    SiteTuple tuple_;
  };

  Iterator begin() const { return Iterator(this, 0); }
  Iterator end() const { return Iterator(this, size_); }

 private:
  // Non-decreasing sequences of length m drawn from `values` symbols.
  static std::size_t multisets(std::size_t values, std::size_t m) {
    if (m == 0) return 1;
    if (values == 0) return 0;
    return detail::binomial(values + m - 1, m);
  }

  Box box_;
  int n_;
  Sector sector_;
  std::size_t size_ = 0;
};

/// All configurations of the index in lexicographic order.
inline const ConfigIndex& enumerate(const ConfigIndex& index) { return index; }
// a temporary index is moved into the range so a range-for keeps it alive
inline ConfigIndex enumerate(ConfigIndex&& index) { return std::move(index); }

// ---------------------------------------------------------------------------
// JSON: {"sector": "boson", "sites": [[0,0],[2,3]]}

inline void to_json(nlohmann::json& j, const Site& s) { j = s.coords; }
inline void from_json(const nlohmann::json& j, Site& s) { s.coords = j.get<std::vector<int>>(); }

inline void to_json(nlohmann::json& j, const Configuration& c) {
  j = nlohmann::json{{"sector", to_string(c.sector)}, {"sites", c.sites}};
}

inline void from_json(const nlohmann::json& j, Configuration& c) {
  if (j.is_array()) {
    c.sites = j.get<std::vector<Site>>();
    c.sector = Sector::distinguishable;
    return;
  }
  c.sites = j.at("sites").get<std::vector<Site>>();
  c.sector = j.contains("sector") ? sector_from_string(j.at("sector").get<std::string>())
                                  : Sector::distinguishable;
}

}  // namespace mplab
