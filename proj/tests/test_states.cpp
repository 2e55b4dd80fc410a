#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "gramrecur/states.hpp"

using namespace gramrecur;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Harper operator in closed form: cos(2 pi P) is half the sum of the two
// cyclic shifts, so H is tridiagonal-circulant plus the diagonal potential.
CMatrix harper_oracle(int n) {
  CMatrix h = CMatrix::Zero(n, n);
  for (int r = 0; r < n; ++r) {
    h(r, r) += 2.0 - std::cos(kTwoPi * r / n);
    h(r, (r + 1) % n) += -0.5;
    h(r, (r + n - 1) % n) += -0.5;
  }
  return h;
}

struct CircularMoments {
  double mean;
  double stddev;
};

// Circular mean and standard deviation of q = m/N under |psi_m|^2.
CircularMoments position_moments(const StateVector& psi) {
  const auto n = psi.dim();
  cplx z = 0.0;
  for (Eigen::Index m = 0; m < n; ++m) {
    z += std::norm(psi[m]) * std::polar(1.0, kTwoPi * static_cast<double>(m) / static_cast<double>(n));
  }
  double mean = std::arg(z) / kTwoPi;
  if (mean < 0) mean += 1.0;
  const double r = std::abs(z);
  return {mean, std::sqrt(-2.0 * std::log(r)) / kTwoPi};
}

double circular_gap(double a, double b) {
  const double d = std::abs(a - b);
  return std::min(d, 1.0 - d);
}

}  // namespace

TEST(Harper, MatchesCirculantOracle) {
  for (int n : {2, 3, 8, 17, 64}) {
    EXPECT_LT((harper_operator(n).matrix() - harper_oracle(n)).cwiseAbs().maxCoeff(), 1e-12) << n;
  }
  EXPECT_THROW(harper_operator(1), InvalidArgument);
}

TEST(Harper, GroundStateNormalized) {
  for (int n : {2, 5, 64, 129}) EXPECT_NEAR(harper_ground_state(n).amplitudes().norm(), 1.0, 1e-12);
  EXPECT_THROW(harper_ground_state(1), InvalidArgument);
}

TEST(Harper, GroundStateIsFourierInvariant) {
  const StateVector h = harper_ground_state(64);
  const CVector fh = dft_matrix(64).matrix() * h.amplitudes();
  EXPECT_GT(std::abs(h.amplitudes().dot(fh)), 1.0 - 1e-8);
}

TEST(Harper, RayleighQuotientIsMinimumEigenvalue) {
  const CMatrix oracle = harper_oracle(64);
  const StateVector h = harper_ground_state(64);
  const double rq = h.amplitudes().dot(oracle * h.amplitudes()).real();
  Eigen::SelfAdjointEigenSolver<CMatrix> full(oracle);
  EXPECT_NEAR(rq, full.eigenvalues()(0), 1e-10);
}

TEST(Harper, NodelessAfterPhaseFix) {
  for (int n : {16, 64, 200}) {
    const StateVector h = harper_ground_state(n);
    for (Eigen::Index m = 0; m < n; ++m) {
      EXPECT_NEAR(h[m].imag(), 0.0, 1e-10);
      EXPECT_GT(h[m].real(), -1e-10);
    }
  }
}

TEST(Translate, ZeroShiftIsIdentity) {
  const StateVector h = harper_ground_state(32);
  EXPECT_EQ((translate_state(h, {0, 0}).amplitudes() - h.amplitudes()).norm(), 0.0);
}

TEST(Translate, PreservesNorm) {
  const StateVector h = harper_ground_state(50);
  for (TorusSite s : {TorusSite{1, 0}, TorusSite{0, 7}, TorusSite{49, 49}, TorusSite{13, 31}}) {
    EXPECT_NEAR(translate_state(h, s).amplitudes().norm(), 1.0, 1e-13);
  }
}

TEST(Translate, ShiftsComposeUpToPhase) {
  const int n = 40;
  const StateVector h = harper_ground_state(n);
  const TorusSite s1{7, 11}, s2{25, 33};
  const StateVector twice = translate_state(translate_state(h, s1), s2);
  const StateVector direct = translate_state(h, {(s1.a + s2.a) % n, (s1.b + s2.b) % n});
  EXPECT_GT(std::abs(inner(twice, direct)), 1.0 - 1e-12);
}

TEST(Translate, OutOfRangeSite) {
  const StateVector h = harper_ground_state(8);
  EXPECT_THROW(translate_state(h, {8, 0}), InvalidArgument);
  EXPECT_THROW(translate_state(h, {0, -1}), InvalidArgument);
  EXPECT_THROW(coherent_state(8, {3, 9}), InvalidArgument);
}

TEST(Coherent, OriginIsHarperGroundState) {
  EXPECT_LT((coherent_state(30, {0, 0}).amplitudes() - harper_ground_state(30).amplitudes()).norm(), 1e-15);
}

TEST(Coherent, PositionMeanAtCentre) {
  const CircularMoments mom = position_moments(coherent_state(128, {32, 64}));
  EXPECT_LT(circular_gap(mom.mean, 0.25), 2.0 / 128);
}

TEST(Coherent, MomentumMeanAtCentre) {
  // F maps position to momentum; the momentum distribution peaks at b/N up to
  // the sign convention of the transform.
  const int n = 128;
  const StateVector psi = coherent_state(n, {10, 40});
  const StateVector mom = StateVector::normalize(dft_matrix(n).matrix().adjoint() * psi.amplitudes());
  const double mean = position_moments(mom).mean;
  EXPECT_LT(std::min(circular_gap(mean, 40.0 / n), circular_gap(mean, 1.0 - 40.0 / n)), 2.0 / n);
}

TEST(Coherent, Localized) {
  for (int n : {128, 256, 500}) {
    const CircularMoments mom = position_moments(coherent_state(n, {n / 3, n / 5}));
    EXPECT_LT(mom.stddev, 5.0 / std::sqrt(n)) << n;
  }
}

TEST(Coherent, DistantCentresNearlyOrthogonal) {
  const int n = 256;
  const int gap = static_cast<int>(std::ceil(8.0 * std::sqrt(n)));  // 8/sqrt(N) in q
  for (int a = 0; a < n; a += 23) {
    const StateVector x = coherent_state(n, {a, 17});
    const StateVector y = coherent_state(n, {(a + gap) % n, 17});
    EXPECT_LT(std::abs(inner(x, y)), 0.1) << a;
  }
}

TEST(SpinCoherent, NorthPoleIsHighestWeight) {
  const StateVector s = spin_coherent_state(Spin::from_twice(10), {0.0, 1.0});
  EXPECT_NEAR(std::abs(s[0] - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(s.amplitudes().tail(10).norm(), 0.0, 1e-15);
}

TEST(SpinCoherent, SouthPoleIsLowestWeight) {
  const StateVector s = spin_coherent_state(Spin::from_twice(10), {std::numbers::pi, 0.0});
  EXPECT_NEAR(std::abs(s[10]), 1.0, 1e-15);
}

TEST(SpinCoherent, NormalizedForJ50) {
  const Spin spin = Spin::from_value(50);
  for (double t : {0.0, 0.3, 1.0, 2.0, std::numbers::pi}) {
    for (double f : {0.0, 1.1, 4.0}) {
      EXPECT_NEAR(spin_coherent_state(spin, {t, f}).amplitudes().norm(), 1.0, 1e-12);
    }
  }
}

TEST(SpinCoherent, BinomialMagnitudesByClosedForm) {
  // Small j so that plain binomials and powers are exact enough.
  const int twice = 6;
  const double t = 0.8;
  const StateVector s = spin_coherent_state(Spin::from_twice(twice), {t, 0.0});
  const double binom[] = {1, 6, 15, 20, 15, 6, 1};
  for (int i = 0; i <= twice; ++i) {
    const double expected = std::sqrt(binom[i]) * std::pow(std::cos(t / 2), twice - i) * std::pow(std::sin(t / 2), i);
    EXPECT_NEAR(std::abs(s[i]), expected, 1e-14);
  }
}

TEST(SpinCoherent, JzExpectation) {
  const Spin spin = Spin::from_value(20);
  const StateVector s = spin_coherent_state(spin, {std::numbers::pi / 3, 0.4});
  double jz = 0.0;
  for (Eigen::Index i = 0; i < spin.dim(); ++i) jz += std::norm(s[i]) * spin.m(i);
  EXPECT_NEAR(jz, 10.0, 1e-10);
}

TEST(SpinCoherent, MeanSpinPointsAlongDirection) {
  for (int twice : {40, 101, 200}) {
    const Spin spin = Spin::from_twice(twice);
    const SpinOperators ops = spin_operators(spin);
    const double j = spin.value();
    for (SphereDirection d : {SphereDirection{0.5, 0.3}, SphereDirection{2.0, 4.0}, SphereDirection{1.2, 6.1}}) {
      const CVector v = spin_coherent_state(spin, d).amplitudes();
      EXPECT_NEAR(v.dot(ops.jx.matrix() * v).real() / j, std::sin(d.theta) * std::cos(d.phi), 1e-8);
      EXPECT_NEAR(v.dot(ops.jy.matrix() * v).real() / j, std::sin(d.theta) * std::sin(d.phi), 1e-8);
      EXPECT_NEAR(v.dot(ops.jz.matrix() * v).real() / j, std::cos(d.theta), 1e-8);
    }
  }
}

TEST(SpinCoherent, DirectionRangeChecked) {
  const Spin spin = Spin::from_twice(4);
  EXPECT_THROW(spin_coherent_state(spin, {-0.1, 0.0}), InvalidArgument);
  EXPECT_THROW(spin_coherent_state(spin, {4.0, 0.0}), InvalidArgument);
  EXPECT_THROW(spin_coherent_state(spin, {1.0, kTwoPi}), InvalidArgument);
}
