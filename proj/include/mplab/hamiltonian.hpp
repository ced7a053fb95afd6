#pragma once

// Sparse assembly of the n-particle Hamiltonian
//   H = sum_j (-Delta_j) + lambda sum_j V(x_j) + U(x; alpha)
// restricted to a box.
//
// Laplacian convention: (-Delta psi)(x) = sum_{|e|=1} (psi(x) - psi(x+e)) on
// Z^d, restricted to the box by dropping hops that leave it while keeping the
// full diagonal 2d ("Dirichlet restriction"). The kinetic diagonal is then
// the configuration-independent constant 2dn, and the kinetic part has
// spectrum in [0, 4dn].

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Sparse>

#include "mplab/configspace.hpp"
#include "mplab/disorder.hpp"
#include "mplab/interaction.hpp"

namespace mplab {

enum class Boundary { dirichlet_restriction };

struct OperatorSpec {
  Box box{1, 1};
  int n = 1;
  Sector sector = Sector::distinguishable;
  double lambda = 0.0;
  InteractionSpec interaction;
  Boundary boundary = Boundary::dirichlet_restriction;

  ConfigIndex index() const { return ConfigIndex(box, n, sector); }
};

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

class SparseHamiltonian {
 public:
  SparseHamiltonian(OperatorSpec spec, ConfigIndex index, SparseMatrix matrix, std::uint64_t seed,
                    std::vector<std::size_t> tuples)
      : spec_(std::move(spec)),
        index_(std::move(index)),
        matrix_(std::move(matrix)),
        seed_(seed),
        tuples_(std::move(tuples)) {}

  const OperatorSpec& spec() const { return spec_; }
  const ConfigIndex& index() const { return index_; }
  const SparseMatrix& matrix() const { return matrix_; }
  std::uint64_t disorder_seed() const { return seed_; }
  std::size_t dim() const { return index_.size(); }

  double entry(std::size_t a, std::size_t b) const {
    return matrix_.coeff(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  }

  std::span<const std::size_t> tuple(std::size_t k) const {
    const auto n = static_cast<std::size_t>(spec_.n);
    return std::span<const std::size_t>(tuples_).subspan(k * n, n);
  }

  std::size_t index_of(const Configuration& c) const { return index_.index(c); }

 private:
  OperatorSpec spec_;
  ConfigIndex index_;
  SparseMatrix matrix_;
  std::uint64_t seed_;
  std::vector<std::size_t> tuples_;
};

namespace detail {

inline void check_operator_spec(const OperatorSpec& spec) {
  if (spec.n < 1) throw std::invalid_argument("operator: particle number must be positive");
  if (spec.lambda < 0) throw std::invalid_argument("operator: lambda must be non-negative");
  if (spec.interaction.active() && spec.interaction.range >= spec.box.side())
    throw std::invalid_argument("operator: interaction range " + std::to_string(spec.interaction.range) +
                                " must be smaller than box side " + std::to_string(spec.box.side()));
  if (spec.interaction.hardcore && spec.sector != Sector::hardcore && spec.sector != Sector::fermion)
    throw std::invalid_argument("operator: hard-core interaction needs the hardcore or fermion sector");
}

// Insert b into a sorted tuple with one copy of a removed; returns the new
// tuple and the number of entries strictly between a and b (fermion sign).
inline std::pair<SiteTuple, int> move_particle(std::span<const std::size_t> t, std::size_t pos, std::size_t b) {
  SiteTuple out(t.begin(), t.end());
  const std::size_t a = out[pos];
  out.erase(out.begin() + static_cast<std::ptrdiff_t>(pos));
  const auto at = std::upper_bound(out.begin(), out.end(), b);
  const auto lo = std::min(a, b), hi = std::max(a, b);
  int between = 0;
  for (auto s : out)
    if (s > lo && s < hi) ++between;
  out.insert(at, b);
  return {std::move(out), between};
}

}  // namespace detail

/// Assemble H over the sector basis, row by row in enumeration order.
///
/// Sector bases: ordered tuples for distinguishable particles; normalized
/// occupation states for bosons (hop amplitude -sqrt(m_a (m_b + 1))); sorted
/// antisymmetrized states for fermions (hop amplitude -(-1)^{#particles
/// jumped over}); sorted tuples without double occupancy for hardcore.
inline SparseHamiltonian assemble(const OperatorSpec& spec, const DisorderRealization& real) {
  detail::check_operator_spec(spec);
  if (!(real.box() == spec.box)) throw std::invalid_argument("assemble: realization box differs from operator box");

  const ConfigIndex index = spec.index();
  const std::size_t dim = index.size();
  const auto n = static_cast<std::size_t>(spec.n);
  const Box& box = spec.box;

  std::vector<std::vector<std::size_t>> neighbors(box.volume());
  for (std::size_t s = 0; s < box.volume(); ++s) neighbors[s] = box.neighbors(s);

  std::vector<std::size_t> tuples;
  tuples.reserve(dim * n);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(dim * (2 * static_cast<std::size_t>(box.dim()) * n + 1));

  const double kinetic = 2.0 * box.dim() * spec.n;
  SiteTuple t = index.first_tuple();
  for (std::size_t row = 0; row < dim; ++row, index.next_tuple(t)) {
    tuples.insert(tuples.end(), t.begin(), t.end());
    const auto r = static_cast<Eigen::Index>(row);

    double diag = kinetic;
    for (auto s : t) diag += spec.lambda * real.value(s);
    diag += interaction_energy(index.configuration_of(t), spec.interaction);
    triplets.emplace_back(r, r, diag);

    switch (spec.sector) {
      case Sector::distinguishable: {
        SiteTuple u = t;
        for (std::size_t j = 0; j < n; ++j) {
          for (auto b : neighbors[t[j]]) {
            u[j] = b;
            triplets.emplace_back(r, static_cast<Eigen::Index>(index.index_of(u)), -1.0);
          }
          u[j] = t[j];
        }
        break;
      }
      case Sector::fermion:
      case Sector::hardcore: {
        for (std::size_t j = 0; j < n; ++j) {
          for (auto b : neighbors[t[j]]) {
            if (std::binary_search(t.begin(), t.end(), b)) continue;
            const auto [u, between] = detail::move_particle(t, j, b);
            const double sign = spec.sector == Sector::fermion && (between % 2) ? -1.0 : 1.0;
            triplets.emplace_back(r, static_cast<Eigen::Index>(index.index_of(u)), -sign);
          }
        }
        break;
      }
      case Sector::boson: {
        for (std::size_t j = 0; j < n; ++j) {
          if (j > 0 && t[j] == t[j - 1]) continue;  // one hop per occupied site
          const auto ma = static_cast<double>(std::count(t.begin(), t.end(), t[j]));
          for (auto b : neighbors[t[j]]) {
            const auto mb = static_cast<double>(std::count(t.begin(), t.end(), b));
            const auto [u, between] = detail::move_particle(t, j, b);
            triplets.emplace_back(r, static_cast<Eigen::Index>(index.index_of(u)), -std::sqrt(ma * (mb + 1)));
          }
        }
        break;
      }
    }
  }

  SparseMatrix matrix(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  matrix.setFromTriplets(triplets.begin(), triplets.end());
  matrix.makeCompressed();
  return SparseHamiltonian(spec, index, std::move(matrix), real.seed(), std::move(tuples));
}

/// Diagonal of N_u in the sector basis.
inline Eigen::VectorXd number_operator(const ConfigIndex& index, const Site& u) {
  if (!index.box().contains(u)) throw std::out_of_range("number_operator: site outside box");
  const std::size_t target = index.box().encode(u);
  Eigen::VectorXd diag(static_cast<Eigen::Index>(index.size()));
  SiteTuple t = index.first_tuple();
  for (std::size_t k = 0; k < index.size(); ++k, index.next_tuple(t))
    diag[static_cast<Eigen::Index>(k)] = static_cast<double>(std::count(t.begin(), t.end(), target));
  return diag;
}

struct EnergyBounds {
  double lo;
  double hi;
};

/// Deterministic enclosure of the spectrum of every realization:
/// kinetic part in [0, 4dn], potential in n lambda [inf V, sup V], and the
/// interaction between its extreme values over the configuration space.
inline EnergyBounds energy_bounds(const OperatorSpec& spec, const DensitySpec& density) {
  const ConfigIndex index = spec.index();
  double umin = 0.0, umax = 0.0;
  if (spec.interaction.active()) {
    umin = std::numeric_limits<double>::infinity();
    umax = -umin;
    for (const auto& c : enumerate(index)) {
      const double u = interaction_energy(c, spec.interaction);
      umin = std::min(umin, u);
      umax = std::max(umax, u);
    }
  }
  const double n = spec.n;
  return {n * spec.lambda * density.lo() + umin, 4.0 * spec.box.dim() * n + n * spec.lambda * density.hi() + umax};
}

/// MatrixMarket coordinate export (lower triangle, symmetric).
inline void write_matrix_market(std::ostream& os, const SparseHamiltonian& h) {
  const auto& m = h.matrix();
  std::size_t nnz = 0;
  for (Eigen::Index r = 0; r < m.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(m, r); it; ++it)
      if (it.col() <= it.row()) ++nnz;
  os << "%%MatrixMarket matrix coordinate real symmetric\n";
  os << m.rows() << ' ' << m.cols() << ' ' << nnz << '\n';
  os.precision(17);
  for (Eigen::Index r = 0; r < m.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(m, r); it; ++it)
      if (it.col() <= it.row()) os << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
}

}  // namespace mplab
