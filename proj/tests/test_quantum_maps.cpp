#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "gramrecur/quantum_maps.hpp"

using namespace gramrecur;

namespace {

double max_abs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

CMatrix commutator(const CMatrix& a, const CMatrix& b) { return a * b - b * a; }

// Baker unitary written out entrywise from the block formula with the
// phases evaluated directly, no matrix products.
CMatrix baker_oracle(int n) {
  const int h = n / 2;
  CMatrix u = CMatrix::Zero(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const int block = c / h;
      const int cc = c % h;
      cplx acc = 0.0;
      for (int k = 0; k < h; ++k) {
        const double a1 = 2.0 * std::numbers::pi * r * (block * h + k) / n;
        const double a2 = -2.0 * std::numbers::pi * k * cc / h;
        acc += std::polar(1.0, a1 + a2);
      }
      u(r, c) = acc / std::sqrt(static_cast<double>(n) * h);
    }
  }
  return u;
}

}  // namespace

TEST(Baker, TwoEqualsDft) {
  EXPECT_LT(max_abs(baker_unitary({2}).matrix() - dft_matrix(2).matrix()), 1e-15);
}

TEST(Baker, MatchesEntrywiseOracle) {
  EXPECT_LT(max_abs(baker_unitary({12}).matrix() - baker_oracle(12)), 1e-12);
}

TEST(Baker, UnitaryDefect) {
  EXPECT_LT(unitarity_defect(baker_unitary({128})), 1e-13);
  for (int n : {2, 4, 10, 64, 126, 256}) EXPECT_LT(unitarity_defect(baker_unitary({n})), 1e-12) << n;
}

TEST(Baker, OddOrTinyRejected) {
  EXPECT_THROW(baker_unitary({3}), InvalidArgument);
  EXPECT_THROW(baker_unitary({0}), InvalidArgument);
  EXPECT_THROW(baker_unitary({-4}), InvalidArgument);
}

TEST(Baker, DeterminantHasUnitModulus) {
  const CMatrix u = baker_unitary({64}).matrix();
  EXPECT_NEAR(std::abs(u.determinant()), 1.0, 1e-8);
}

TEST(Spin, HalfIntegerValidation) {
  EXPECT_EQ(Spin::from_value(3.5).dim(), 8);
  EXPECT_EQ(Spin::from_value(100).dim(), 201);
  EXPECT_THROW(Spin::from_value(0.3), InvalidArgument);
  EXPECT_THROW(Spin::from_value(0.0), InvalidArgument);
  EXPECT_THROW(Spin::from_value(-1.0), InvalidArgument);
  EXPECT_EQ(Spin::from_dim(201).twice(), 200);
}

TEST(SpinOperators, SpinHalfJz) {
  const SpinOperators ops = spin_operators(Spin::from_twice(1));
  CMatrix expected = CMatrix::Zero(2, 2);
  expected(0, 0) = 0.5;
  expected(1, 1) = -0.5;
  EXPECT_LT(max_abs(ops.jz.matrix() - expected), 1e-15);
  // sigma_x / 2 and sigma_y / 2 with e1 = |up>.
  CMatrix sx(2, 2), sy(2, 2);
  sx << 0.0, 0.5, 0.5, 0.0;
  sy << 0.0, cplx(0, -0.5), cplx(0, 0.5), 0.0;
  EXPECT_LT(max_abs(ops.jx.matrix() - sx), 1e-15);
  EXPECT_LT(max_abs(ops.jy.matrix() - sy), 1e-15);
}

TEST(SpinOperators, SpinOneAlgebraExact) {
  const SpinOperators ops = spin_operators(Spin::from_twice(2));
  const CMatrix d = commutator(ops.jx.matrix(), ops.jy.matrix()) - kI * ops.jz.matrix();
  EXPECT_LT(max_abs(d), 1e-14);
  // Explicit 3x3 J_x = (1/sqrt2) [[0,1,0],[1,0,1],[0,1,0]].
  const double r = 1.0 / std::sqrt(2.0);
  CMatrix jx = CMatrix::Zero(3, 3);
  jx(0, 1) = jx(1, 0) = jx(1, 2) = jx(2, 1) = r;
  EXPECT_LT(max_abs(ops.jx.matrix() - jx), 1e-15);
}

TEST(SpinOperators, CasimirSevenHalves) {
  const Spin s = Spin::from_twice(7);
  const SpinOperators ops = spin_operators(s);
  const CMatrix c = ops.jx.matrix() * ops.jx.matrix() + ops.jy.matrix() * ops.jy.matrix() +
                    ops.jz.matrix() * ops.jz.matrix();
  const double j = 3.5;
  EXPECT_LT(max_abs(c - j * (j + 1) * CMatrix::Identity(8, 8)), 1e-13);
}

TEST(SpinOperators, CyclicCommutatorsUpToJ100) {
  for (int twice : {1, 2, 3, 9, 40, 100, 101, 160, 200}) {
    const Spin s = Spin::from_twice(twice);
    const SpinOperators ops = spin_operators(s);
    const CMatrix& x = ops.jx.matrix();
    const CMatrix& y = ops.jy.matrix();
    const CMatrix& z = ops.jz.matrix();
    // [J_x, J_y] on the diagonal is a difference of squared ladder entries of
    // size j(j+1). Squaring correctly rounded square roots loses a few
    // eps j(j+1), which is above 1e-12 for j > 50.
    const double j = s.value();
    const double xy_tol = j <= 50 ? 1e-12 : 4.0 * std::numeric_limits<double>::epsilon() * j * (j + 1.0);
    EXPECT_LT(max_abs(commutator(x, y) - kI * z), xy_tol) << twice;
    EXPECT_LT(max_abs(commutator(y, z) - kI * x), 1e-12) << twice;
    EXPECT_LT(max_abs(commutator(z, x) - kI * y), 1e-12) << twice;
  }
}

TEST(KickedTop, BothGeneratorsOffIsIdentity) {
  const Operator u = kicked_top_unitary({Spin::from_twice(9), 0.0, 0.0});
  EXPECT_LT(max_abs(u.matrix() - CMatrix::Identity(10, 10)), 1e-14);
}

TEST(KickedTop, NoRotationIsDiagonalTorsion) {
  const Spin s = Spin::from_twice(7);
  const double k = 2.3;
  const Operator u = kicked_top_unitary({s, k, 0.0});
  const double j = 3.5;
  for (int i = 0; i < 8; ++i) {
    const double m = j - i;
    for (int c = 0; c < 8; ++c) {
      const cplx expected = i == c ? std::polar(1.0, -k * m * m / (2.0 * j)) : cplx(0.0);
      EXPECT_NEAR(std::abs(u(i, c) - expected), 0.0, 1e-14);
    }
  }
}

TEST(KickedTop, SpinHalfClosedForm) {
  // j = 1/2: torsion phase exp(-i k/4) on both states, rotation
  // exp(-i p sigma_y/2) = [[cos p/2, -sin p/2], [sin p/2, cos p/2]].
  const double k = 1.7, p = 0.9;
  const Operator u = kicked_top_unitary({Spin::from_twice(1), k, p});
  const cplx ph = std::polar(1.0, -k / 4.0);
  CMatrix expected(2, 2);
  expected << std::cos(p / 2), -std::sin(p / 2), std::sin(p / 2), std::cos(p / 2);
  expected *= ph;
  EXPECT_LT(max_abs(u.matrix() - expected), 1e-14);
}

TEST(KickedTop, UnitaryAtFigureParameters) {
  const Spin s = Spin::from_value(100);
  EXPECT_LT(unitarity_defect(kicked_top_unitary({s, 6.5, 1.5})), 1e-12);
  EXPECT_LT(unitarity_defect(kicked_top_unitary({s, 1.5, 1.0})), 1e-12);
}

TEST(KickedTop, DoesNotCommuteWithJz) {
  const Spin s = Spin::from_twice(20);
  const Operator u = kicked_top_unitary({s, 1.5, 1.0});
  const CMatrix jz = spin_operators(s).jz.matrix();
  EXPECT_GT(commutator(u.matrix(), jz).norm(), 1e-3);
}

TEST(KickedTop, DeterminantHasUnitModulus) {
  const Operator u = kicked_top_unitary({Spin::from_twice(30), 6.5, 1.5});
  EXPECT_NEAR(std::abs(u.matrix().determinant()), 1.0, 1e-8);
}
