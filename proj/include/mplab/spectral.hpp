#pragma once

// Green functions, eigenfunction correlators and time-evolution kernels of
// a single assembled Hamiltonian.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "mplab/hamiltonian.hpp"

namespace mplab {

using Complex = std::complex<double>;

inline constexpr std::size_t kDenseDimCap = 20000;

/// Closed energy interval [lo, hi].
class EnergyInterval {
 public:
  EnergyInterval(double lo, double hi) : lo_(lo), hi_(hi) {
    if (!(lo < hi)) throw std::invalid_argument("EnergyInterval: need lo < hi");
  }
  static EnergyInterval whole_line() {
    return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double length() const { return hi_ - lo_; }
  bool contains(double e) const { return e >= lo_ && e <= hi_; }

 private:
  double lo_, hi_;
};

/// Eigenvalues are grouped into clusters of width below the degeneracy
/// tolerance; each cluster is treated as one eigenvalue with the projection
/// onto its eigenspace.
struct EigenGroup {
  Eigen::Index begin;
  Eigen::Index end;
  double energy;  // mean of the cluster
};

class SpectralData {
 public:
  SpectralData(Eigen::VectorXd values, Eigen::MatrixXd vectors, std::optional<ConfigIndex> index = std::nullopt)
      : values_(std::move(values)), vectors_(std::move(vectors)), index_(std::move(index)) {
    const double scale = values_.size() ? values_.cwiseAbs().maxCoeff() : 0.0;
    tolerance_ = 1e-9 * std::max(scale, 1.0);
    for (Eigen::Index k = 0; k < values_.size();) {
      Eigen::Index e = k + 1;
      while (e < values_.size() && values_[e] - values_[e - 1] < tolerance_) ++e;
      groups_.push_back({k, e, values_.segment(k, e - k).mean()});
      k = e;
    }
  }

  const Eigen::VectorXd& eigenvalues() const { return values_; }
  const Eigen::MatrixXd& eigenvectors() const { return vectors_; }
  const std::vector<EigenGroup>& groups() const { return groups_; }
  std::size_t dim() const { return static_cast<std::size_t>(values_.size()); }
  double degeneracy_tolerance() const { return tolerance_; }

  std::size_t index_of(const Configuration& c) const {
    if (!index_) throw std::logic_error("SpectralData: no configuration index attached");
    return index_->index(c);
  }

  /// <delta_x, P_g delta_y> for one eigenvalue cluster.
  double projector_element(const EigenGroup& g, std::size_t x, std::size_t y) const {
    const auto ex = static_cast<Eigen::Index>(x), ey = static_cast<Eigen::Index>(y);
    double acc = 0.0;
    for (Eigen::Index k = g.begin; k < g.end; ++k) acc += vectors_(ex, k) * vectors_(ey, k);
    return acc;
  }

 private:
  Eigen::VectorXd values_;
  Eigen::MatrixXd vectors_;
  std::optional<ConfigIndex> index_;
  std::vector<EigenGroup> groups_;
  double tolerance_ = 0.0;
};

class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline SpectralData diagonalize(const Eigen::MatrixXd& dense, std::optional<ConfigIndex> index = std::nullopt) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(dense);
  if (solver.info() != Eigen::Success) throw std::runtime_error("diagonalize: eigensolver did not converge");
  return SpectralData(solver.eigenvalues(), solver.eigenvectors(), std::move(index));
}

inline SpectralData diagonalize(const SparseHamiltonian& h, std::size_t cap = kDenseDimCap) {
  if (h.dim() > cap)
    throw BudgetError("diagonalize: dimension " + std::to_string(h.dim()) + " exceeds dense cap " +
                      std::to_string(cap));
  return diagonalize(Eigen::MatrixXd(h.matrix()), h.index());
}

// ---------------------------------------------------------------------------
// Green function

class SingularEnergyError : public std::runtime_error {
 public:
  SingularEnergyError(const std::string& what, double distance)
      : std::runtime_error(what), distance_(distance) {}
  /// Estimated distance from z to the nearest eigenvalue.
  double distance() const { return distance_; }

 private:
  double distance_;
};

/// Factorized H - z; solves for resolvent columns.
class ResolventSolver {
 public:
  ResolventSolver(const SparseMatrix& h, Complex z) : z_(z) {
    using CMat = Eigen::SparseMatrix<Complex>;
    CMat a = h.cast<Complex>();
    for (Eigen::Index i = 0; i < a.rows(); ++i) a.coeffRef(i, i) -= z;
    a.makeCompressed();
    a_ = std::move(a);
    lu_.analyzePattern(a_);
    lu_.factorize(a_);
    if (lu_.info() != Eigen::Success) throw SingularEnergyError("green: H - z is singular", 0.0);
  }

  /// (H - z)^{-1} delta_y, with the residual and singularity guards applied.
  Eigen::VectorXcd column(std::size_t y) const {
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(a_.rows());
    rhs[static_cast<Eigen::Index>(y)] = 1.0;
    Eigen::VectorXcd w = lu_.solve(rhs);
    if (lu_.info() != Eigen::Success || !w.allFinite()) throw SingularEnergyError("green: solve failed", 0.0);

    const double wn = w.norm();
    if (z_.imag() == 0.0 && wn > 1e12) {
      // one inverse-iteration step: Rayleigh quotient of (H - z) at w
      const Eigen::VectorXcd v = w / wn;
      const double dist = std::abs(v.dot(a_ * v));
      throw SingularEnergyError("green: z lies in the spectrum (distance " + std::to_string(dist) + ")", dist);
    }
    const double residual = (a_ * w - rhs).norm();
    const double anorm = a_.norm();
    if (residual > 1e-10 * (anorm * wn + 1.0))
      throw std::runtime_error("green: relative residual " + std::to_string(residual / (anorm * wn + 1.0)) +
                               " exceeds 1e-10");
    return w;
  }

 private:
  Complex z_;
  Eigen::SparseMatrix<Complex> a_;
  Eigen::SparseLU<Eigen::SparseMatrix<Complex>, Eigen::COLAMDOrdering<int>> lu_;
};

/// G(x, y; z) = <delta_x, (H - z)^{-1} delta_y> by a sparse shifted solve.
inline Complex green(const SparseMatrix& h, std::size_t x, std::size_t y, Complex z) {
  return ResolventSolver(h, z).column(y)[static_cast<Eigen::Index>(x)];
}

inline Complex green(const SparseHamiltonian& h, const Configuration& x, const Configuration& y, Complex z) {
  return green(h.matrix(), h.index_of(x), h.index_of(y), z);
}

/// G(x, y; z) from the eigendecomposition.
inline Complex spectral_green(const SpectralData& s, std::size_t x, std::size_t y, Complex z) {
  const auto& v = s.eigenvectors();
  const auto& e = s.eigenvalues();
  const auto ex = static_cast<Eigen::Index>(x), ey = static_cast<Eigen::Index>(y);
  Complex acc = 0.0;
  for (Eigen::Index k = 0; k < e.size(); ++k) acc += v(ex, k) * v(ey, k) / (e[k] - z);
  return acc;
}

// ---------------------------------------------------------------------------
// Eigenfunction correlator and dynamics

/// Q(x, y; I) = sum over eigenvalues E in I of |<delta_x, P_{E} delta_y>|.
inline double correlator(const SpectralData& s, std::size_t x, std::size_t y, const EnergyInterval& interval) {
  double q = 0.0;
  for (const auto& g : s.groups())
    if (interval.contains(g.energy)) q += std::abs(s.projector_element(g, x, y));
  return q;
}

inline double correlator(const SpectralData& s, const Configuration& x, const Configuration& y,
                         const EnergyInterval& interval) {
  return correlator(s, s.index_of(x), s.index_of(y), interval);
}

/// 256 log-spaced times in [0.1, 1e4].
inline std::vector<double> default_time_grid(std::size_t count = 256, double t_min = 0.1, double t_max = 1e4) {
  if (count < 2 || !(t_min > 0) || !(t_max > t_min)) throw std::invalid_argument("time grid: bad parameters");
  std::vector<double> out(count);
  const double a = std::log(t_min), b = std::log(t_max);
  for (std::size_t i = 0; i < count; ++i) out[i] = std::exp(a + (b - a) * static_cast<double>(i) / (count - 1));
  return out;
}

struct DynamicalKernel {
  std::vector<double> samples;  // |<delta_x, e^{-itH} P_I delta_y>|^2 per time
  double sup_lower;             // max over the grid
  double sup_upper;             // Q(x, y; I)^2
};

/// Each eigenvalue cluster evolves with its mean energy.
inline DynamicalKernel dynamical_kernel(const SpectralData& s, std::size_t x, std::size_t y,
                                        const EnergyInterval& interval, std::span<const double> times) {
  if (times.empty()) throw std::invalid_argument("dynamical_kernel: empty time grid");
  std::vector<std::pair<double, double>> weights;  // (energy, projector element)
  double q = 0.0;
  for (const auto& g : s.groups()) {
    if (!interval.contains(g.energy)) continue;
    const double p = s.projector_element(g, x, y);
    weights.emplace_back(g.energy, p);
    q += std::abs(p);
  }
  DynamicalKernel out{{}, 0.0, q * q};
  out.samples.reserve(times.size());
  for (double t : times) {
    Complex amp = 0.0;
    for (const auto& [e, p] : weights) amp += std::polar(p, -t * e);
    out.samples.push_back(std::norm(amp));
    out.sup_lower = std::max(out.sup_lower, out.samples.back());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Composite (non-interacting) systems

/// H_J (x) 1 + 1 (x) H_K; composite index = iJ * dim(K) + iK.
inline SparseMatrix kronecker_sum(const SparseMatrix& hj, const SparseMatrix& hk) {
  const Eigen::Index dj = hj.rows(), dk = hk.rows();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(hj.nonZeros() * dk + hk.nonZeros() * dj));
  for (Eigen::Index r = 0; r < dj; ++r)
    for (SparseMatrix::InnerIterator it(hj, r); it; ++it)
      for (Eigen::Index k = 0; k < dk; ++k) trip.emplace_back(r * dk + k, it.col() * dk + k, it.value());
  for (Eigen::Index j = 0; j < dj; ++j)
    for (Eigen::Index r = 0; r < dk; ++r)
      for (SparseMatrix::InnerIterator it(hk, r); it; ++it) trip.emplace_back(j * dk + r, j * dk + it.col(), it.value());
  SparseMatrix out(dj * dk, dj * dk);
  out.setFromTriplets(trip.begin(), trip.end());
  out.makeCompressed();
  return out;
}

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CompositeIndex {
  std::size_t j;
  std::size_t k;
};

struct CompositeGreenCheck {
  Complex direct;
  Complex contour;
  double gap;
  double radius;
};

/// Composite Green function two ways: a direct sparse solve of the Kronecker
/// sum, and the clockwise contour convolution
///   G(z) = -(1/2 pi i) oint G_J(z - E) G_K(E) dE
/// on a circle around sigma(H_K) (centre mid-spectrum, radius 1.25 x the
/// spectral half-width), discretized by the trapezoidal rule.
inline CompositeGreenCheck composite_green_check(const SparseMatrix& hj, const SparseMatrix& hk, CompositeIndex x,
                                                 CompositeIndex y, Complex z, int quadrature_points) {
  if (quadrature_points < 1) throw std::invalid_argument("composite_green_check: need quadrature points");
  const auto dk = static_cast<std::size_t>(hk.rows());
  const Complex direct = green(kronecker_sum(hj, hk), x.j * dk + x.k, y.j * dk + y.k, z);

  const SpectralData sj = diagonalize(Eigen::MatrixXd(hj));
  const SpectralData sk = diagonalize(Eigen::MatrixXd(hk));
  const auto& ek = sk.eigenvalues();
  const double center = 0.5 * (ek.minCoeff() + ek.maxCoeff());
  const double half_width = 0.5 * (ek.maxCoeff() - ek.minCoeff());
  const double radius = 1.25 * std::max(half_width, 0.05);

  for (Eigen::Index i = 0; i < sj.eigenvalues().size(); ++i) {
    const Complex pole = z - sj.eigenvalues()[i];
    if (std::abs(pole - center) <= 1.01 * radius)
      throw GeometryError("composite_green_check: z - sigma(H_J) meets the contour around sigma(H_K)");
  }

  Complex acc = 0.0;
  for (int q = 0; q < quadrature_points; ++q) {
    const double theta = 2.0 * std::numbers::pi * q / quadrature_points;
    const Complex phase = std::polar(1.0, theta);
    const Complex e = center + radius * phase;
    acc += spectral_green(sj, x.j, y.j, z - e) * spectral_green(sk, x.k, y.k, e) * phase;
  }
  const Complex contour = -radius / quadrature_points * acc;
  return {direct, contour, std::abs(direct - contour), radius};
}

inline CompositeGreenCheck composite_green_check(const SparseHamiltonian& hj, const SparseHamiltonian& hk,
                                                 const Configuration& xj, const Configuration& xk,
                                                 const Configuration& yj, const Configuration& yk, Complex z,
                                                 int quadrature_points) {
  return composite_green_check(hj.matrix(), hk.matrix(), {hj.index_of(xj), hk.index_of(xk)},
                               {hj.index_of(yj), hk.index_of(yk)}, z, quadrature_points);
}

struct SubadditivityCheck {
  double lhs;
  double rhs;
  bool holds() const { return lhs <= rhs + 1e-9; }
};

/// Q_{JK}(x, y; I) against Q_J(x_J, y_J; R) Q_K(x_K, y_K; R). s_jk must be
/// the spectral data of kronecker_sum(H_J, H_K).
inline SubadditivityCheck subadditivity_check(const SpectralData& s_j, const SpectralData& s_k,
                                              const SpectralData& s_jk, CompositeIndex x, CompositeIndex y,
                                              const EnergyInterval& interval) {
  const std::size_t dk = s_k.dim();
  if (s_jk.dim() != s_j.dim() * dk) throw std::invalid_argument("subadditivity_check: composite dimension mismatch");
  const auto line = EnergyInterval::whole_line();
  return {correlator(s_jk, x.j * dk + x.k, y.j * dk + y.k, interval),
          correlator(s_j, x.j, y.j, line) * correlator(s_k, x.k, y.k, line)};
}

}  // namespace mplab
