#pragma once

// Classical limits and return-time statistics: the baker map (as a float map
// and as an exact two-sided bit shift), the kicked-top sphere map, Kac
// return times, rescaled hitting times, symbolic Gram spectra, and the
// Lyapunov exponent.

#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string_view>
#include <vector>

#include "gramrecur/errors.hpp"
#include "gramrecur/numerics.hpp"
#include "gramrecur/randmat.hpp"

namespace gramrecur {

struct TorusPoint {
  double q = 0.0;
  double p = 0.0;

  void validate() const {
    if (!(q >= 0.0 && q < 1.0 && p >= 0.0 && p < 1.0)) {
      throw InvalidArgument("torus point coordinates must lie in [0, 1)");
    }
  }
};

/// (q, p) -> (2q mod 1, p/2 + floor(2q)/2).
inline TorusPoint baker_step(TorusPoint pt) {
  const double doubled = 2.0 * pt.q;
  const double digit = doubled >= 1.0 ? 1.0 : 0.0;
  return {doubled - digit, 0.5 * pt.p + 0.5 * digit};
}

/// A q-cylinder [index / 2^bits, (index + 1) / 2^bits) of measure 2^-bits.
struct DyadicCell {
  int bits = 1;
  std::uint64_t index = 0;

  void validate() const {
    if (bits < 0 || bits > 62) throw InvalidArgument("dyadic cell depth must be in [0, 62]");
    if (index >= (std::uint64_t{1} << bits)) throw InvalidArgument("dyadic cell index out of range");
  }
  double measure() const { return std::ldexp(1.0, -bits); }
  /// Binary digit `i` (0-based, most significant first) of the cell's q-prefix.
  int digit(int i) const { return static_cast<int>((index >> (bits - 1 - i)) & 1U); }
};

/// Baker orbit as the full two-sided shift on binary digits: q = 0.f1 f2 ...
/// and p = 0.p1 p2 ...; one step moves f1 to the front of the past.
///
/// The future is either a finite explicit digit string (exact expansion of a
/// double) or that prefix continued by a seeded random stream. The past is
/// truncated to kPastDigits.
class BitOrbit {
 public:
  static constexpr std::size_t kPastDigits = 64;
  static constexpr std::size_t kBuffer = 64;

  /// Exact digits of a floating-point point; the future is finite.
  static BitOrbit from_point(TorusPoint pt) {
    pt.validate();
    BitOrbit o;
    o.future_ = exact_digits(pt.q, 1100);
    std::deque<std::uint8_t> past = exact_digits(pt.p, kPastDigits);
    o.past_ = std::move(past);
    return o;
  }

  /// Uniformly random point: every digit on both sides drawn from `rng`.
  static BitOrbit random(SeededSampler rng) { return with_prefix({}, std::move(rng)); }

  /// Future starts with `prefix`, continued by random digits.
  static BitOrbit with_prefix(std::span<const std::uint8_t> prefix, SeededSampler rng) {
    BitOrbit o;
    o.source_.emplace(std::move(rng));
    o.future_.assign(prefix.begin(), prefix.end());
    for (std::size_t i = 0; i < kPastDigits; ++i) o.past_.push_back(o.draw_digit());
    o.refill(kBuffer);
    return o;
  }

  /// Random point conditioned on lying in `cell`.
  static BitOrbit inside(const DyadicCell& cell, SeededSampler rng) {
    cell.validate();
    std::vector<std::uint8_t> prefix(static_cast<std::size_t>(cell.bits));
    for (int i = 0; i < cell.bits; ++i) prefix[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(cell.digit(i));
    return with_prefix(prefix, std::move(rng));
  }

  /// One baker step: the leading future digit becomes the leading past digit.
  void step() {
    refill(1);
    if (future_.empty()) throw StreamExhausted("bit orbit: deterministic future digits exhausted");
    const std::uint8_t d = future_.front();
    future_.pop_front();
    past_.push_front(d);
    if (past_.size() > kPastDigits) past_.pop_back();
    refill(kBuffer);
  }

  /// Future digit i (0-based); beyond a finite expansion the digits are 0.
  int future_digit(std::size_t i) {
    refill(i + 1);
    return i < future_.size() ? future_[i] : 0;
  }

  int past_digit(std::size_t i) const { return i < past_.size() ? past_[i] : 0; }

  bool in_cell(const DyadicCell& cell) {
    for (int i = 0; i < cell.bits; ++i) {
      if (future_digit(static_cast<std::size_t>(i)) != cell.digit(i)) return false;
    }
    return true;
  }

  /// Reconstructed (q, p), rounded to double.
  TorusPoint point() {
    refill(kBuffer);
    return {horner(future_, 80), horner(past_, kPastDigits)};
  }

  bool has_random_source() const { return source_.has_value(); }

 private:
  BitOrbit() = default;

  static std::deque<std::uint8_t> exact_digits(double x, std::size_t max_digits) {
    std::deque<std::uint8_t> digits;
    // Doubling and subtracting 1 are exact in binary floating point.
    while (x != 0.0 && digits.size() < max_digits) {
      x *= 2.0;
      const std::uint8_t d = x >= 1.0 ? 1 : 0;
      x -= d;
      digits.push_back(d);
    }
    return digits;
  }

  static double horner(const std::deque<std::uint8_t>& digits, std::size_t limit) {
    const std::size_t n = std::min(limit, digits.size());
    double x = 0.0;
    for (std::size_t i = n; i-- > 0;) x = 0.5 * (x + digits[i]);
    return x;
  }

  std::uint8_t draw_digit() {
    if (cached_bits_ == 0) {
      cache_ = source_->next_u64();
      cached_bits_ = 64;
    }
    const auto d = static_cast<std::uint8_t>(cache_ >> 63);
    cache_ <<= 1;
    --cached_bits_;
    return d;
  }

  void refill(std::size_t want) {
    if (!source_) return;
    while (future_.size() < want) future_.push_back(draw_digit());
  }

  std::deque<std::uint8_t> future_;
  std::deque<std::uint8_t> past_;
  std::optional<SeededSampler> source_;
  std::uint64_t cache_ = 0;
  int cached_bits_ = 0;
};

inline BitOrbit bit_orbit_step(BitOrbit orbit) {
  orbit.step();
  return orbit;
}

struct SpherePoint {
  double x = 0.0;
  double y = 0.0;
  double z = 1.0;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

// `printed` reproduces the published classical map verbatim (at k = p = 0 it
// reflects y); `rotation` flips the sign of the y-terms so that k = 0 is a
// pure rotation about the y-axis.
enum class TopVariant { printed, rotation };

inline std::string_view to_string(TopVariant v) { return v == TopVariant::printed ? "printed" : "rotation"; }

/// Classical kicked top: rotation about y by p, then torsion about z.
inline SpherePoint top_classical_step(const SpherePoint& pt, double k, double p,
                                      TopVariant variant = TopVariant::printed) {
  const double cp = std::cos(p);
  const double sp = std::sin(p);
  const double rx = pt.x * cp + pt.z * sp;
  const double rz = -pt.x * sp + pt.z * cp;
  const double angle = k * pt.z * cp - k * pt.x * sp;
  const double ca = std::cos(angle);
  const double sa = std::sin(angle);
  if (variant == TopVariant::printed) {
    return {rx * ca + pt.y * sa, rx * sa - pt.y * ca, rz};
  }
  return {rx * ca - pt.y * sa, rx * sa + pt.y * ca, rz};
}

struct ReturnSample {
  double measure = 1.0;
  std::vector<std::uint64_t> times;

  double mean() const {
    if (times.empty()) throw EmptySample("return sample is empty");
    long double s = 0.0L;
    for (auto t : times) s += static_cast<long double>(t);
    return static_cast<double>(s / static_cast<long double>(times.size()));
  }
};

/// Gaps between successive visits to a region, starting from a point inside
/// it. Consecutive visits give return time 1.
///
/// `step(state)` advances the state in place; `in_region(state)` tests
/// membership. Only returns completed within `n_steps` are recorded.
template <class State, class Step, class Region>
ReturnSample return_times(State state, Step&& step, Region&& in_region, double measure, std::uint64_t n_steps) {
  if (!(measure > 0.0 && measure <= 1.0)) throw InvalidArgument("return_times: region measure must lie in (0, 1]");
  if (!in_region(state)) throw InvalidArgument("return_times: start point is not in the region");
  ReturnSample out;
  out.measure = measure;
  std::uint64_t last = 0;
  for (std::uint64_t n = 1; n <= n_steps; ++n) {
    step(state);
    if (in_region(state)) {
      out.times.push_back(n - last);
      last = n;
    }
  }
  if (out.times.empty()) throw EmptySample("return_times: no completed return within the step budget");
  return out;
}

/// Kac statistics for a dyadic cell on a random bit orbit started inside it.
inline ReturnSample baker_cell_returns(const DyadicCell& cell, std::uint64_t n_steps, SeededSampler rng) {
  return return_times(
      BitOrbit::inside(cell, std::move(rng)), [](BitOrbit& o) { o.step(); },
      [&cell](BitOrbit& o) { return o.in_cell(cell); }, cell.measure(), n_steps);
}

struct HittingSample {
  std::vector<double> rescaled;  // measure * first hitting time, uncensored trials
  std::size_t censored = 0;      // trials that hit the step cap first
};

/// First hitting times tau >= 1 of a region from independent random starts,
/// rescaled by the region's measure.
///
/// `make_start(rng)` draws a start state. Trials exceeding `cap` steps are
/// counted as censored and left out of the sample.
template <class MakeStart, class Step, class Region>
HittingSample hitting_experiment(MakeStart&& make_start, Step&& step, Region&& in_region, double measure,
                                 std::size_t samples, SeededSampler& rng, std::uint64_t cap = 1'000'000'000ULL) {
  if (samples < 1) throw InvalidArgument("hitting_experiment: need at least one trial");
  if (!(measure > 0.0 && measure <= 1.0)) throw InvalidArgument("hitting_experiment: measure must lie in (0, 1]");
  HittingSample out;
  out.rescaled.reserve(samples);
  for (std::size_t trial = 0; trial < samples; ++trial) {
    auto state = make_start(rng);
    std::uint64_t n = 0;
    bool hit = false;
    while (n < cap) {
      step(state);
      ++n;
      if (in_region(state)) {
        hit = true;
        break;
      }
    }
    if (hit) {
      out.rescaled.push_back(measure * static_cast<double>(n));
    } else {
      ++out.censored;
    }
  }
  return out;
}

/// Baker hitting experiment for a dyadic cell; each trial gets its own
/// child stream seeded from `rng`.
inline HittingSample baker_cell_hitting(const DyadicCell& cell, std::size_t samples, SeededSampler& rng,
                                        std::uint64_t cap = 1'000'000'000ULL) {
  cell.validate();
  return hitting_experiment([](SeededSampler& r) { return BitOrbit::random(SeededSampler(r.next_u64())); },
                            [](BitOrbit& o) { o.step(); }, [&cell](BitOrbit& o) { return o.in_cell(cell); },
                            cell.measure(), samples, rng, cap);
}

/// The cell of depth `bits` with digits 1...10. Its digit pattern has no
/// self-overlap, so unlike cells around the fixed point q = 0 its hitting
/// times carry no clustering correction.
inline DyadicCell aperiodic_cell(int bits) {
  if (bits < 1 || bits > 62) throw InvalidArgument("aperiodic_cell: depth must be in [1, 62]");
  return {bits, (std::uint64_t{1} << bits) - 2};
}

/// Gram spectrum of orthonormal vectors indexed by symbols: the count of each
/// distinct symbol, padded with zeros to length K.
template <class Token>
SpectrumSample symbol_gram_spectrum(std::span<const Token> symbols) {
  if (symbols.empty()) throw InvalidArgument("symbol_gram_spectrum: empty sequence");
  std::map<Token, std::size_t> counts;
  for (const auto& s : symbols) ++counts[s];
  std::vector<double> vals(symbols.size(), 0.0);
  std::size_t i = 0;
  for (const auto& [tok, count] : counts) vals[i++] = static_cast<double>(count);
  return SpectrumSample(std::move(vals));
}

/// Explicit 0/1 Gram matrix of a symbol sequence.
template <class Token>
CMatrix symbol_gram_matrix(std::span<const Token> symbols) {
  const auto k = static_cast<Eigen::Index>(symbols.size());
  CMatrix g(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      g(i, j) = symbols[static_cast<std::size_t>(i)] == symbols[static_cast<std::size_t>(j)] ? 1.0 : 0.0;
    }
  }
  return g;
}

/// Time average of log |dq'/dq| along n steps of the orbit.
inline double lyapunov_baker(BitOrbit orbit, std::uint64_t n) {
  if (n < 1) throw InvalidArgument("lyapunov_baker: need at least one step");
  // Neumaier summation; the per-step term is constant so plain summation
  // would accumulate visible rounding at n ~ 1e6.
  double sum = 0.0;
  double comp = 0.0;
  for (std::uint64_t i = 0; i < n; ++i) {
    const double term = std::log(2.0);  // dq'/dq = 2 on both branches
    const double t = sum + term;
    comp += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
    sum = t;
    orbit.step();
  }
  return (sum + comp) / static_cast<double>(n);
}

/// Least-squares slope of log |q-separation| (circular) between two float
/// baker orbits started `eps` apart, over `steps` steps.
inline double float_separation_slope(TorusPoint start, double eps, int steps) {
  if (steps < 2) throw InvalidArgument("float_separation_slope: need at least two steps");
  TorusPoint a = start;
  TorusPoint b{std::fmod(start.q + eps, 1.0), start.p};
  std::vector<double> xs;
  std::vector<double> ys;
  for (int n = 0; n <= steps; ++n) {
    double d = std::abs(a.q - b.q);
    d = std::min(d, 1.0 - d);
    xs.push_back(n);
    ys.push_back(std::log(d));
    a = baker_step(a);
    b = baker_step(b);
  }
  const double m = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace gramrecur
