#pragma once

// The two quantized maps: the baker map on C^N (N even) and the kicked top
// on a spin-j space (N = 2j + 1).

#include <cmath>
#include <sstream>

#include "gramrecur/numerics.hpp"

namespace gramrecur {

struct BakerParams {
  Eigen::Index N = 2;

  void validate() const {
    if (N < 2 || N % 2 != 0) {
      std::ostringstream os;
      os << "baker map needs an even dimension N >= 2, got " << N;
      throw InvalidArgument(os.str());
    }
  }
};

/// F_N * blockdiag(F_{N/2}^{-1}, F_{N/2}^{-1}).
inline Operator baker_unitary(const BakerParams& params) {
  params.validate();
  const Eigen::Index n = params.N;
  const Eigen::Index half = n / 2;
  const CMatrix fn = dft_matrix(n).matrix();
  const CMatrix fh_inv = dft_matrix(half).matrix().adjoint();
  CMatrix u(n, n);
  u.leftCols(half).noalias() = fn.leftCols(half) * fh_inv;
  u.rightCols(half).noalias() = fn.rightCols(half) * fh_inv;
  return Operator::unitary(std::move(u));
}

/// Spin quantum number stored as 2j so half-integers are exact.
class Spin {
 public:
  static Spin from_twice(int twice_j) {
    if (twice_j < 1) throw InvalidArgument("spin: 2j must be a positive integer");
    return Spin(twice_j);
  }

  static Spin from_value(double j) {
    const double twice = 2.0 * j;
    if (!(twice >= 1.0) || std::abs(twice - std::round(twice)) > 1e-12 || twice > 1e6) {
      std::ostringstream os;
      os << "spin: j must be a positive half-integer, got " << j;
      throw InvalidArgument(os.str());
    }
    return Spin(static_cast<int>(std::lround(twice)));
  }

  /// Spin whose Hilbert space has dimension N = 2j + 1.
  static Spin from_dim(Eigen::Index n) { return from_twice(static_cast<int>(n) - 1); }

  int twice() const { return twice_j_; }
  double value() const { return 0.5 * twice_j_; }
  Eigen::Index dim() const { return twice_j_ + 1; }
  /// Magnetic quantum number of basis index i (descending order, m = j first).
  double m(Eigen::Index i) const { return value() - static_cast<double>(i); }

 private:
  explicit Spin(int twice_j) : twice_j_(twice_j) {}
  int twice_j_;
};

struct SpinOperators {
  Operator jx;
  Operator jy;
  Operator jz;
};

/// J_x, J_y, J_z in the |j, m> basis ordered by descending m.
inline SpinOperators spin_operators(Spin spin) {
  const Eigen::Index n = spin.dim();
  const double j = spin.value();
  CMatrix jz = CMatrix::Zero(n, n);
  CMatrix jplus = CMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = spin.m(i);
    jz(i, i) = m;
    // <m+1|J+|m> sits one row above in descending order.
    if (i > 0) jplus(i - 1, i) = std::sqrt(j * (j + 1.0) - m * (m + 1.0));
  }
  const CMatrix jminus = jplus.adjoint();
  CMatrix jx = 0.5 * (jplus + jminus);
  CMatrix jy = (jplus - jminus) / (2.0 * kI);
  return {Operator::hermitian(std::move(jx)), Operator::hermitian(std::move(jy)),
          Operator::hermitian(std::move(jz))};
}

struct TopParams {
  Spin j = Spin::from_twice(1);
  double k = 0.0;  // torsion strength
  double p = 0.0;  // rotation angle about y
};

/// exp(-i k J_z^2 / 2j) * exp(-i p J_y).
inline Operator kicked_top_unitary(const TopParams& params) {
  const Spin spin = params.j;
  const Eigen::Index n = spin.dim();
  const SpinOperators ops = spin_operators(spin);
  const CMatrix rotation = hermitian_evolution(ops.jy, params.p).matrix();
  const double twice_j = static_cast<double>(spin.twice());
  CMatrix u(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = spin.m(i);
    const cplx torsion = std::polar(1.0, -params.k * m * m / twice_j);
    u.row(i) = torsion * rotation.row(i);
  }
  return Operator::unitary(std::move(u));
}

}  // namespace gramrecur
