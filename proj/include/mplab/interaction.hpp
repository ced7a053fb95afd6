#pragma once

// Finite-range p-site interactions U(x; alpha).

#include <cmath>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mplab/configspace.hpp"

namespace mplab {

/// U_A as a function of the pattern shape (sites of A translated so the
/// lexicographically smallest one sits at the origin) and the occupation
/// numbers on A, in the same order. Working on shapes makes every term
/// translation invariant.
using PatternFunction = std::function<double(std::span<const Site> shape, std::span<const int> occupations)>;

struct InteractionTerm {
  int k = 2;  // pattern size |A|
  std::string name;
  PatternFunction U;
  /// c_n with |U_A(m)| <= c_n whenever sum(m) <= n.
  std::function<double(int n)> bound;
};

struct InteractionSpec {
  std::vector<double> alpha;  // alpha[k-1] couples the k-site terms
  int range = 0;              // l_U: patterns have diam A <= range
  std::vector<InteractionTerm> terms;
  bool hardcore = false;
  Norm norm = Norm::l1;
  std::string builtin = "none";

  int p() const { return static_cast<int>(alpha.size()); }

  double coupling(int k) const {
    return k >= 1 && k <= p() ? alpha[static_cast<std::size_t>(k - 1)] : 0.0;
  }

  bool active() const {
    for (const auto& t : terms)
      if (coupling(t.k) != 0.0) return true;
    return false;
  }

  static InteractionSpec none() { return {}; }

  /// U_{u,v} = N_u N_v delta_{|u-v|,1} with coupling alpha_2.
  static InteractionSpec nearest_neighbor_pair(double alpha2) {
    InteractionSpec spec;
    spec.alpha = {0.0, alpha2};
    spec.range = 1;
    spec.builtin = "nn_pair";
    spec.terms.push_back(InteractionTerm{
        2, "nn_pair",
        [](std::span<const Site> shape, std::span<const int> m) {
          return distance(shape[0], shape[1], Norm::l1) == 1 ? static_cast<double>(m[0] * m[1]) : 0.0;
        },
        [](int n) { return std::floor(n / 2.0) * std::ceil(n / 2.0); }});
    return spec;
  }
};

namespace detail {

inline std::vector<Site> ball_offsets(int d, int r, Norm norm) {
  std::vector<Site> out;
  std::vector<int> c(static_cast<std::size_t>(d), -r);
  for (;;) {
    Site s(c);
    if (distance(s, Site(std::vector<int>(static_cast<std::size_t>(d), 0)), norm) <= r) out.push_back(s);
    int i = d - 1;
    while (i >= 0 && c[static_cast<std::size_t>(i)] == r) c[static_cast<std::size_t>(i--)] = -r;
    if (i < 0) break;
    ++c[static_cast<std::size_t>(i)];
  }
  return out;
}

inline Site shifted(const Site& a, const Site& b, int sign) {
  Site out = a;
  for (std::size_t i = 0; i < out.coords.size(); ++i) out.coords[i] += sign * b.coords[i];
  return out;
}

}  // namespace detail

/// U(x; alpha): sum over patterns A in Z^d with |A| = k, diam A <= range and
/// at least one occupied site. Patterns with zero total occupation are
/// skipped, which fixes the normalization U_A(0,...,0) = 0.
inline double interaction_energy(const Configuration& config, const InteractionSpec& inter) {
  if (!inter.active() || config.sites.empty()) return 0.0;
  const int d = config.sites.front().dim();

  std::map<Site, int> occ;
  for (const auto& s : config.sites) ++occ[s];

  std::vector<Site> candidates;
  {
    const auto ball = detail::ball_offsets(d, inter.range, inter.norm);
    std::map<Site, bool> seen;
    for (const auto& [s, m] : occ)
      for (const auto& off : ball) seen.emplace(detail::shifted(s, off, +1), true);
    for (const auto& [s, flag] : seen) candidates.push_back(s);  // sorted
  }

  double energy = 0.0;
  std::vector<std::size_t> pick;
  std::vector<Site> shape;
  std::vector<int> m;
  for (const auto& term : inter.terms) {
    const double coupling = inter.coupling(term.k);
    if (coupling == 0.0) continue;
    const auto k = static_cast<std::size_t>(term.k);
    if (k == 0 || k > candidates.size()) continue;

    // k-subsets in increasing candidate order, pruned on diameter
    pick.assign(k, 0);
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t depth, std::size_t start) {
      if (depth == k) {
        bool occupied = false;
        shape.clear();
        m.clear();
        for (auto idx : pick) {
          const auto it = occ.find(candidates[idx]);
          const int count = it == occ.end() ? 0 : it->second;
          occupied = occupied || count > 0;
          m.push_back(count);
          shape.push_back(detail::shifted(candidates[idx], candidates[pick[0]], -1));
        }
        if (occupied) energy += coupling * term.U(shape, m);
        return;
      }
      for (std::size_t c = start; c < candidates.size(); ++c) {
        bool fits = true;
        for (std::size_t j = 0; j < depth && fits; ++j)
          fits = distance(candidates[pick[j]], candidates[c], inter.norm) <= inter.range;
        if (!fits) continue;
        pick[depth] = c;
        rec(depth + 1, c + 1);
      }
    };
    rec(0, 0);
  }
  return energy;
}

/// c_n-type bound: sum_k |alpha_k| c_n over the active terms.
inline double interaction_term_bound(const InteractionSpec& inter, int n) {
  double b = 0.0;
  for (const auto& t : inter.terms) b += std::abs(inter.coupling(t.k)) * (t.bound ? t.bound(n) : 0.0);
  return b;
}

inline void to_json(nlohmann::json& j, const InteractionSpec& inter) {
  j = nlohmann::json{{"kind", inter.builtin},
                     {"alpha", inter.alpha},
                     {"range", inter.range},
                     {"hardcore", inter.hardcore}};
}

/// Only built-in terms can be described in JSON.
inline void from_json(const nlohmann::json& j, InteractionSpec& inter) {
  const auto kind = j.value("kind", std::string("none"));
  if (kind == "none") {
    inter = InteractionSpec::none();
    if (j.contains("alpha")) inter.alpha = j.at("alpha").get<std::vector<double>>();
  } else if (kind == "nn_pair") {
    inter = InteractionSpec::nearest_neighbor_pair(0.0);
    if (j.contains("alpha")) inter.alpha = j.at("alpha").get<std::vector<double>>();
  } else {
    throw std::invalid_argument("unknown interaction kind '" + kind + "'");
  }
  inter.range = j.value("range", inter.range);
  inter.hardcore = j.value("hardcore", false);
}

}  // namespace mplab
