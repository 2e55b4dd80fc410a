#pragma once

// Dense complex linear algebra kernel: state vectors, operators, Fourier
// matrices, Hermitian spectra and orbit autocorrelations.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gramrecur/errors.hpp"

namespace gramrecur {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr cplx kI{0.0, 1.0};

/// A unit-norm vector of N complex amplitudes.
class StateVector {
 public:
  /// Wraps amplitudes that are already normalized (within `tol`).
  static StateVector from_unit(CVector amplitudes, double tol = 1e-10) {
    const double norm = amplitudes.norm();
    if (amplitudes.size() == 0 || std::abs(norm - 1.0) > tol) {
      std::ostringstream os;
      os << "state vector must have unit norm, got " << norm;
      throw InvalidArgument(os.str());
    }
    return StateVector(std::move(amplitudes));
  }

  /// Rescales arbitrary nonzero amplitudes to unit norm.
  static StateVector normalize(CVector amplitudes) {
    const double norm = amplitudes.norm();
    if (amplitudes.size() == 0 || !(norm > 0.0) || !std::isfinite(norm)) {
      throw InvalidArgument("cannot normalize a zero or non-finite vector");
    }
    amplitudes /= norm;
    return StateVector(std::move(amplitudes));
  }

  /// Basis vector |index> in dimension `dim`.
  static StateVector basis(Eigen::Index dim, Eigen::Index index) {
    if (dim < 1 || index < 0 || index >= dim) {
      throw InvalidArgument("basis index out of range");
    }
    CVector v = CVector::Zero(dim);
    v(index) = 1.0;
    return StateVector(std::move(v));
  }

  Eigen::Index dim() const { return amplitudes_.size(); }
  const CVector& amplitudes() const { return amplitudes_; }
  cplx operator[](Eigen::Index i) const { return amplitudes_(i); }

 private:
  explicit StateVector(CVector amplitudes) : amplitudes_(std::move(amplitudes)) {}

  CVector amplitudes_;
};

/// <a|b>, antilinear in the first argument.
inline cplx inner(const StateVector& a, const StateVector& b) {
  if (a.dim() != b.dim()) {
    throw InvalidArgument("inner product of vectors with different dimensions");
  }
  return a.amplitudes().dot(b.amplitudes());
}

enum class OperatorKind { general, unitary, hermitian };

/// Dense N x N complex matrix in the basis |0>..|N-1>, tagged with the
/// structure it is known to have.
///
/// Hermitian tags are verified on construction (O(N^2)). Unitary tags are
/// not, since the check is a full matrix product; use unitarity_defect().
class Operator {
 public:
  static Operator general(CMatrix m) { return Operator(std::move(m), OperatorKind::general); }
  static Operator unitary(CMatrix m) { return Operator(std::move(m), OperatorKind::unitary); }
  static Operator hermitian(CMatrix m, double tol = 1e-13);

  Eigen::Index dim() const { return m_.rows(); }
  OperatorKind kind() const { return kind_; }
  const CMatrix& matrix() const { return m_; }
  cplx operator()(Eigen::Index r, Eigen::Index c) const { return m_(r, c); }

 private:
  Operator(CMatrix m, OperatorKind kind) : m_(std::move(m)), kind_(kind) {
    if (m_.rows() != m_.cols() || m_.rows() == 0) {
      throw InvalidArgument("operator must be a nonempty square matrix");
    }
  }

  CMatrix m_;
  OperatorKind kind_;
};

/// Max-entry magnitude of H - H^dagger.
inline double hermiticity_defect(const CMatrix& h) {
  if (h.rows() != h.cols()) throw InvalidArgument("hermiticity_defect: matrix is not square");
  return (h - h.adjoint()).cwiseAbs().maxCoeff();
}

inline Operator Operator::hermitian(CMatrix m, double tol) {
  const double defect = hermiticity_defect(m);
  if (defect > tol) {
    std::ostringstream os;
    os << "operator is not Hermitian: max |H - H^dagger| = " << defect;
    throw InvalidArgument(os.str());
  }
  // Symmetrize so that downstream solvers see an exactly Hermitian matrix.
  CMatrix sym = 0.5 * (m + m.adjoint());
  return Operator(std::move(sym), OperatorKind::hermitian);
}

/// Max-entry magnitude of U^dagger U - I; zero for exact unitaries.
inline double unitarity_defect(const CMatrix& u) {
  if (u.rows() != u.cols()) throw InvalidArgument("unitarity_defect: matrix is not square");
  CMatrix d = u.adjoint() * u;
  d.diagonal().array() -= 1.0;
  return d.cwiseAbs().maxCoeff();
}

inline double unitarity_defect(const Operator& u) { return unitarity_defect(u.matrix()); }

/// Real eigenvalues sorted ascending.
class SpectrumSample {
 public:
  SpectrumSample() = default;
  explicit SpectrumSample(std::vector<double> values) : values_(std::move(values)) {
    std::sort(values_.begin(), values_.end());
  }

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  const std::vector<double>& values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double min() const { return values_.front(); }
  double max() const { return values_.back(); }

  double sum() const {
    // Ascending summation keeps small eigenvalues from being swamped.
    double s = 0.0;
    for (double v : values_) s += v;
    return s;
  }

 private:
  std::vector<double> values_;
};

/// Unitary discrete Fourier matrix: entry (n, m) = exp(2 pi i n m / M) / sqrt(M).
inline Operator dft_matrix(Eigen::Index m) {
  if (m < 1) throw InvalidArgument("dft_matrix: dimension must be positive");
  CMatrix f(m, m);
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index c = 0; c < m; ++c) {
      // Reduce n*m mod M first so the phase argument stays small and exact.
      const auto k = static_cast<double>((r * c) % m);
      f(r, c) = std::polar(scale, 2.0 * std::numbers::pi * k / static_cast<double>(m));
    }
  }
  return Operator::unitary(std::move(f));
}

/// Sorted eigenvalues of a Hermitian matrix, with multiplicity.
inline SpectrumSample hermitian_eigenvalues(const CMatrix& h, double tol = 1e-10) {
  if (h.rows() != h.cols() || h.rows() == 0) {
    throw InvalidArgument("hermitian_eigenvalues: matrix must be nonempty and square");
  }
  const double defect = hermiticity_defect(h);
  if (defect > tol) {
    std::ostringstream os;
    os << "hermitian_eigenvalues: input is not Hermitian, max |H - H^dagger| = " << defect;
    throw InvalidArgument(os.str());
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("hermitian_eigenvalues: eigensolver did not converge");
  }
  const Eigen::VectorXd& ev = solver.eigenvalues();
  return SpectrumSample(std::vector<double>(ev.data(), ev.data() + ev.size()));
}

inline SpectrumSample hermitian_eigenvalues(const Operator& h) { return hermitian_eigenvalues(h.matrix()); }

/// exp(-i * angle * H) by spectral calculus.
inline Operator hermitian_evolution(const Operator& h, double angle) {
  const double defect = hermiticity_defect(h.matrix());
  if (defect > 1e-10) {
    std::ostringstream os;
    os << "hermitian_evolution: generator is not Hermitian, max |H - H^dagger| = " << defect;
    throw InvalidArgument(os.str());
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h.matrix());
  if (solver.info() != Eigen::Success) {
    throw NumericalError("hermitian_evolution: eigensolver did not converge");
  }
  const CMatrix& v = solver.eigenvectors();
  CVector phases(v.cols());
  for (Eigen::Index i = 0; i < v.cols(); ++i) {
    phases(i) = std::polar(1.0, -angle * solver.eigenvalues()(i));
  }
  CMatrix u = v * phases.asDiagonal() * v.adjoint();
  return Operator::unitary(std::move(u));
}

/// The orbit phi_0, U phi_0, ..., U^{K-1} phi_0 by repeated application of U.
inline std::vector<StateVector> evolve_orbit(const Operator& u, const StateVector& psi0, std::size_t k) {
  if (u.dim() != psi0.dim()) throw InvalidArgument("evolve_orbit: dimension mismatch");
  if (k < 1) throw InvalidArgument("evolve_orbit: need at least one step");
  std::vector<StateVector> orbit;
  orbit.reserve(k);
  orbit.push_back(psi0);
  CVector cur = psi0.amplitudes();
  CVector next(cur.size());
  for (std::size_t n = 1; n < k; ++n) {
    next.noalias() = u.matrix() * cur;
    cur.swap(next);
    orbit.push_back(StateVector::from_unit(cur, 1e-8));
  }
  return orbit;
}

/// c_n = <phi_0 | U^n phi_0> for n = 0..K-1, without storing the orbit.
inline std::vector<cplx> evolve_autocorrelations(const Operator& u, const StateVector& psi0, std::size_t k) {
  if (u.dim() != psi0.dim()) throw InvalidArgument("evolve_autocorrelations: dimension mismatch");
  if (k < 1) throw InvalidArgument("evolve_autocorrelations: need at least one step");
  std::vector<cplx> c;
  c.reserve(k);
  const CVector& phi0 = psi0.amplitudes();
  CVector cur = phi0;
  CVector next(cur.size());
  c.push_back(1.0);
  for (std::size_t n = 1; n < k; ++n) {
    next.noalias() = u.matrix() * cur;
    cur.swap(next);
    c.push_back(phi0.dot(cur));
  }
  return c;
}

/// || (U^dagger)^K U^K psi - psi ||, the forward-backward round-trip error.
inline double forward_backward_error(const Operator& u, const StateVector& psi, std::size_t k) {
  if (u.dim() != psi.dim()) throw InvalidArgument("forward_backward_error: dimension mismatch");
  const CMatrix udag = u.matrix().adjoint();
  CVector cur = psi.amplitudes();
  CVector next(cur.size());
  for (std::size_t n = 0; n < k; ++n) {
    next.noalias() = u.matrix() * cur;
    cur.swap(next);
  }
  for (std::size_t n = 0; n < k; ++n) {
    next.noalias() = udag * cur;
    cur.swap(next);
  }
  return (cur - psi.amplitudes()).norm();
}

}  // namespace gramrecur
