#pragma once

// Initial states: torus coherent states built from the Harper ground state,
// and SU(2) spin coherent states.

#include <cmath>
#include <numbers>
#include <sstream>

#include "gramrecur/numerics.hpp"
#include "gramrecur/quantum_maps.hpp"

namespace gramrecur {

/// Lattice centre (q0, p0) = (a/N, b/N) on the discretized torus.
struct TorusSite {
  Eigen::Index a = 0;
  Eigen::Index b = 0;

  void validate(Eigen::Index n) const {
    if (a < 0 || a >= n || b < 0 || b >= n) {
      std::ostringstream os;
      os << "torus site (" << a << ", " << b << ") outside the " << n << " x " << n << " lattice";
      throw InvalidArgument(os.str());
    }
  }
};

struct SphereDirection {
  double theta = 0.0;  // polar angle in [0, pi]
  double phi = 0.0;    // azimuth in [0, 2 pi)

  void validate() const {
    if (!(theta >= 0.0 && theta <= std::numbers::pi) || !(phi >= 0.0 && phi < 2.0 * std::numbers::pi)) {
      throw InvalidArgument("sphere direction out of range: need theta in [0, pi], phi in [0, 2 pi)");
    }
  }
};

/// 2 - cos(2 pi Q_N) - cos(2 pi P_N), with P_N = F_N Q_N F_N^{-1}.
inline Operator harper_operator(Eigen::Index n) {
  if (n < 2) throw InvalidArgument("harper_operator: N must be at least 2");
  const CMatrix f = dft_matrix(n).matrix();
  CVector cos_q(n);
  for (Eigen::Index m = 0; m < n; ++m) {
    cos_q(m) = std::cos(2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(n));
  }
  CMatrix h = f * cos_q.asDiagonal() * f.adjoint();
  h = -h;
  h.diagonal() -= cos_q;
  h.diagonal().array() += 2.0;
  return Operator::hermitian(std::move(h), 1e-12);
}

/// Rotates the global phase so the largest-magnitude component is real positive.
inline CVector fix_phase(CVector v) {
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  const cplx z = v(imax);
  v *= std::conj(z) / std::abs(z);
  return v;
}

/// Normalized lowest eigenvector of the Harper operator, localized at (0, 0).
inline StateVector harper_ground_state(Eigen::Index n) {
  const Operator h = harper_operator(n);
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h.matrix());
  if (solver.info() != Eigen::Success) {
    throw NumericalError("harper_ground_state: eigensolver did not converge");
  }
  return StateVector::normalize(fix_phase(solver.eigenvectors().col(0)));
}

/// (T psi)_m = exp(2 pi i b m / N) psi_{(m - a) mod N}.
inline StateVector translate_state(const StateVector& psi, const TorusSite& site) {
  const Eigen::Index n = psi.dim();
  site.validate(n);
  CVector out(n);
  for (Eigen::Index m = 0; m < n; ++m) {
    const Eigen::Index src = ((m - site.a) % n + n) % n;
    const auto k = static_cast<double>((site.b * m) % n);
    out(m) = std::polar(1.0, 2.0 * std::numbers::pi * k / static_cast<double>(n)) * psi[src];
  }
  return StateVector::from_unit(std::move(out));
}

inline StateVector coherent_state(Eigen::Index n, const TorusSite& site) {
  site.validate(n);
  return translate_state(harper_ground_state(n), site);
}

/// SU(2) coherent state pointing along (sin t cos f, sin t sin f, cos t).
///
/// c_m = C(2j, j-m)^{1/2} cos(t/2)^{j+m} sin(t/2)^{j-m} exp(i (j-m) f), in the
/// descending-m basis. Magnitudes go through logarithms so large j does not
/// overflow the binomial.
inline StateVector spin_coherent_state(Spin spin, const SphereDirection& dir) {
  dir.validate();
  const Eigen::Index n = spin.dim();
  const int twice_j = spin.twice();
  const double c = std::cos(0.5 * dir.theta);
  const double s = std::sin(0.5 * dir.theta);
  CVector amps(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int down = static_cast<int>(i);  // j - m
    const int up = twice_j - down;         // j + m
    double mag;
    if ((up > 0 && c == 0.0) || (down > 0 && s == 0.0)) {
      mag = 0.0;
    } else {
      const double log_binom = std::lgamma(twice_j + 1.0) - std::lgamma(up + 1.0) - std::lgamma(down + 1.0);
      const double log_c = up > 0 ? up * std::log(c) : 0.0;
      const double log_s = down > 0 ? down * std::log(s) : 0.0;
      mag = std::exp(0.5 * log_binom + log_c + log_s);
    }
    amps(i) = std::polar(1.0, static_cast<double>(down) * dir.phi) * mag;
  }
  return StateVector::normalize(std::move(amps));
}

}  // namespace gramrecur
