#pragma once

// Random-vector reference model, the Marchenko-Pastur law, and distances
// between empirical spectra and reference distributions.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string_view>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "gramrecur/gram.hpp"
#include "gramrecur/numerics.hpp"

namespace gramrecur {

/// Deterministic random source. The engine (mt19937_64) has a fully
/// specified output sequence; the floating-point transforms on top of it are
/// implemented here rather than taken from <random> distributions, whose
/// algorithms differ between standard libraries.
class SeededSampler {
 public:
  static constexpr std::string_view algorithm = "mt19937_64/box-muller";

  explicit SeededSampler(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double exponential() { return -std::log(1.0 - uniform()); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// splitmix64 finalizer; derives independent child seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Uniform on the unit sphere of C^N via normalized complex Gaussians.
inline StateVector random_unit_vector(Eigen::Index n, SeededSampler& rng) {
  if (n < 1) throw InvalidArgument("random_unit_vector: N must be positive");
  CVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double re = rng.normal();
    const double im = rng.normal();
    v(i) = cplx(re, im);
  }
  return StateVector::normalize(std::move(v));
}

inline SpectrumSample random_gram_spectrum(Eigen::Index n, std::size_t k, SeededSampler& rng) {
  if (n < 1 || k < 1) throw InvalidArgument("random_gram_spectrum: N and K must be positive");
  std::vector<StateVector> vs;
  vs.reserve(k);
  for (std::size_t i = 0; i < k; ++i) vs.push_back(random_unit_vector(n, rng));
  return gram_spectrum(gram_from_vectors(vs));
}

// A reference distribution on the real line, exposing what the distance
// computations need: the CDF, its left limit, the generalized inverse, and
// the running integrals of F and of 1 - F.
template <class L>
concept ReferenceLaw = requires(const L& law, double t) {
  { law.cdf(t) } -> std::convertible_to<double>;
  { law.cdf_left(t) } -> std::convertible_to<double>;
  { law.quantile(t) } -> std::convertible_to<double>;
  { law.cdf_integral(t) } -> std::convertible_to<double>;
  { law.tail_integral(t) } -> std::convertible_to<double>;
};

/// Marchenko-Pastur law at aspect ratio tau = K/N, normalized to mass 1.
class MPLaw {
 public:
  explicit MPLaw(double tau) : tau_(tau) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidArgument("MPLaw: tau must be positive");
    const double r = std::sqrt(tau);
    lower_ = (1.0 - r) * (1.0 - r);
    upper_ = (1.0 + r) * (1.0 + r);
  }

  double tau() const { return tau_; }
  double support_lower() const { return lower_; }
  double support_upper() const { return upper_; }

  double atom() const { return std::max(0.0, (tau_ - 1.0) / tau_); }

  /// Continuous part sqrt(4 tau t - (t + tau - 1)^2) / (2 pi tau t); no atom.
  double density(double t) const {
    if (!(t > 0.0) || t <= lower_ || t >= upper_) return 0.0;
    const double s = t + tau_ - 1.0;
    const double disc = 4.0 * tau_ * t - s * s;
    if (disc <= 0.0) return 0.0;
    return std::sqrt(disc) / (2.0 * std::numbers::pi * tau_ * t);
  }

  double cdf(double t) const {
    if (t < 0.0) return 0.0;
    if (t >= upper_) return std::min(1.0, atom() + continuous_integral(upper_, 0));
    return atom() + continuous_integral(t, 0);
  }

  double cdf_left(double t) const {
    if (t <= 0.0) return 0.0;
    return cdf(t);
  }

  /// Smallest t with cdf(t) >= u.
  double quantile(double u) const {
    if (u <= atom()) return atom() > 0.0 ? 0.0 : lower_;
    if (u >= 1.0) return upper_;
    double lo = lower_;
    double hi = upper_;
    for (int it = 0; it < 200 && hi - lo > 1e-13 * upper_; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (cdf(mid) >= u) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    return hi;
  }

  /// Integral of the CDF from -inf to t: t F(t) - int_0^t s rho(ds).
  double cdf_integral(double t) const {
    if (t <= 0.0) return 0.0;
    const double tt = std::min(t, upper_);
    const double head = tt * cdf(tt) - continuous_integral(tt, 1);
    return head + (t - tt);
  }

  /// Integral of 1 - F from t to +inf.
  double tail_integral(double t) const {
    if (t >= upper_) return 0.0;
    const double from = std::max(t, 0.0);
    return (upper_ - from) - (cdf_integral(upper_) - cdf_integral(from)) + (from - t);
  }

  /// int t^power rho(dt) including the atom.
  double moment(int power) const {
    const double from_atom = power == 0 ? atom() : 0.0;
    return from_atom + continuous_integral(upper_, power);
  }

 private:
  // int_{lower}^{t} s^power * density(s) ds, by adaptive Gauss-Kronrod with
  // t = lower + u^2 on the lower half of the support and t = upper - v^2 on
  // the upper half, which removes the square-root edges.
  double continuous_integral(double t, int power) const {
    if (t <= lower_) return 0.0;
    t = std::min(t, upper_);
    const double a = lower_;
    const double b = upper_;
    const double mid = 0.5 * (a + b);
    const double norm = 1.0 / (2.0 * std::numbers::pi * tau_);
    auto weight = [power](double s) { return power == 0 ? 1.0 : std::pow(s, power); };
    // rho(s) ds with s = a + u^2: sqrt(b - s) * u / (s) * 2u du (times norm).
    auto lower_integrand = [&](double u) {
      const double s = a + u * u;
      if (s <= 0.0) {
        // Only reachable when a = 0: the limit of 2u^2/s is 2.
        return 2.0 * norm * std::sqrt(b) * weight(s);
      }
      return 2.0 * norm * u * u * std::sqrt(std::max(0.0, b - s)) / s * weight(s);
    };
    auto upper_integrand = [&](double v) {
      const double s = b - v * v;
      return 2.0 * norm * v * v * std::sqrt(std::max(0.0, s - a)) / s * weight(s);
    };
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    constexpr unsigned kDepth = 12;
    constexpr double kTol = 1e-11;
    if (t <= mid) {
      return GK::integrate(lower_integrand, 0.0, std::sqrt(t - a), kDepth, kTol);
    }
    const double low_half = GK::integrate(lower_integrand, 0.0, std::sqrt(mid - a), kDepth, kTol);
    const double up_part = GK::integrate(upper_integrand, std::sqrt(b - t), std::sqrt(b - mid), kDepth, kTol);
    return low_half + up_part;
  }

  double tau_;
  double lower_;
  double upper_;
};

inline double mp_density(const MPLaw& law, double t) { return law.density(t); }
inline double mp_atom(const MPLaw& law) { return law.atom(); }
inline double mp_cdf(const MPLaw& law, double t) { return law.cdf(t); }

/// Exp(1), the limiting law of rescaled hitting times.
struct ExponentialLaw {
  double cdf(double t) const { return t <= 0.0 ? 0.0 : -std::expm1(-t); }
  double cdf_left(double t) const { return cdf(t); }
  double quantile(double u) const { return u >= 1.0 ? std::numeric_limits<double>::infinity() : -std::log1p(-u); }
  double cdf_integral(double t) const { return t <= 0.0 ? 0.0 : t + std::expm1(-t); }
  double tail_integral(double t) const { return t <= 0.0 ? 1.0 - t : std::exp(-t); }
};

enum class Metric { ks, w1 };

/// KS or W1 distance between an empirical sample and a reference law.
template <ReferenceLaw Law>
double distribution_distance(const SpectrumSample& s, const Law& law, Metric metric) {
  if (s.empty()) throw InvalidArgument("distribution_distance: empty sample");
  const auto& x = s.values();
  const double k = static_cast<double>(x.size());
  if (metric == Metric::ks) {
    // Tied values form one jump of the step CDF, so compare once per
    // distinct value with the count below it and the count up to it.
    double d = 0.0;
    for (std::size_t i = 0; i < x.size();) {
      std::size_t end = i + 1;
      while (end < x.size() && x[end] == x[i]) ++end;
      const double below = static_cast<double>(i) / k;
      const double above = static_cast<double>(end) / k;
      d = std::max(d, std::abs(above - law.cdf(x[i])));
      d = std::max(d, std::abs(law.cdf_left(x[i]) - below));
      i = end;
    }
    return d;
  }

  // Area between the step CDF and the reference CDF. On each interval where
  // the step CDF equals c, the monotone reference crosses c at most once, at
  // its quantile, so the integral splits into two signed pieces.
  auto piece = [&law](double l, double r, double c) {
    if (!(r > l)) return 0.0;
    const double cross = std::clamp(law.quantile(c), l, r);
    const double gl = law.cdf_integral(l);
    const double gc = law.cdf_integral(cross);
    const double gr = law.cdf_integral(r);
    return c * (cross - l) - (gc - gl) + (gr - gc) - c * (r - cross);
  };
  double area = law.cdf_integral(x.front());  // F_s = 0 below the sample
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    area += piece(x[i], x[i + 1], static_cast<double>(i + 1) / k);
  }
  area += law.tail_integral(x.back());  // F_s = 1 above the sample
  return area;
}

/// Two-sample KS or W1 distance; symmetric in its arguments.
inline double distribution_distance(const SpectrumSample& a, const SpectrumSample& b, Metric metric) {
  if (a.empty() || b.empty()) throw InvalidArgument("distribution_distance: empty sample");
  const auto& x = a.values();
  const auto& y = b.values();
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  if (metric == Metric::ks) {
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < x.size() || j < y.size()) {
      const double t = (j >= y.size() || (i < x.size() && x[i] <= y[j])) ? x[i] : y[j];
      while (i < x.size() && x[i] <= t) ++i;
      while (j < y.size() && y[j] <= t) ++j;
      d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
    }
    return d;
  }
  // Quantile functions are step functions; integrate |Qa - Qb| over merged
  // breakpoints i/nx and j/ny.
  std::size_t i = 0;
  std::size_t j = 0;
  double u = 0.0;
  double area = 0.0;
  while (i < x.size() && j < y.size()) {
    const double ux = static_cast<double>(i + 1) / nx;
    const double uy = static_cast<double>(j + 1) / ny;
    const double next = std::min(ux, uy);
    area += (next - u) * std::abs(x[i] - y[j]);
    u = next;
    if (ux <= next) ++i;
    if (uy <= next) ++j;
  }
  return area;
}

}  // namespace gramrecur
