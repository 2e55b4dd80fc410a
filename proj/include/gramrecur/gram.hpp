#pragma once

// Gram matrices of vector sequences, their spectra, and summaries of the
// empirical eigenvalue distribution.

#include <algorithm>
#include <cmath>
#include <span>
#include <sstream>
#include <vector>

#include "gramrecur/numerics.hpp"

namespace gramrecur {

/// K x K Hermitian PSD matrix of pairwise overlaps, unit diagonal.
class GramMatrix {
 public:
  /// Validates Hermiticity and the unit diagonal (tolerance `tol`).
  static GramMatrix from_entries(CMatrix entries, double tol = 1e-12) {
    if (entries.rows() != entries.cols() || entries.rows() == 0) {
      throw InvalidArgument("Gram matrix must be nonempty and square");
    }
    const double herm = hermiticity_defect(entries);
    if (herm > tol) {
      std::ostringstream os;
      os << "Gram matrix is not Hermitian: max |G - G^dagger| = " << herm;
      throw InvalidArgument(os.str());
    }
    const double diag = (entries.diagonal().array() - 1.0).abs().maxCoeff();
    if (diag > tol) {
      std::ostringstream os;
      os << "Gram matrix diagonal deviates from 1 by " << diag;
      throw InvalidArgument(os.str());
    }
    return GramMatrix(std::move(entries));
  }

  Eigen::Index size() const { return g_.rows(); }
  const CMatrix& entries() const { return g_; }
  cplx operator()(Eigen::Index i, Eigen::Index j) const { return g_(i, j); }

 private:
  explicit GramMatrix(CMatrix g) : g_(std::move(g)) {}
  CMatrix g_;
};

/// G_ij = <v_i | v_j>.
inline GramMatrix gram_from_vectors(std::span<const StateVector> vs) {
  if (vs.empty()) throw InvalidArgument("gram_from_vectors: empty sequence");
  const Eigen::Index n = vs.front().dim();
  CMatrix stacked(n, static_cast<Eigen::Index>(vs.size()));
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (vs[i].dim() != n) {
      std::ostringstream os;
      os << "gram_from_vectors: vector " << i << " has dimension " << vs[i].dim() << ", expected " << n;
      throw InvalidArgument(os.str());
    }
    stacked.col(static_cast<Eigen::Index>(i)) = vs[i].amplitudes();
  }
  CMatrix g = stacked.adjoint() * stacked;
  // The product is Hermitian only up to rounding; pin the exact structure.
  g = 0.5 * (g + g.adjoint()).eval();
  g.diagonal().setOnes();
  return GramMatrix::from_entries(std::move(g));
}

/// Hermitian Toeplitz Gram matrix of a unitary orbit from its first row
/// c_n = <phi_0 | phi_n>.
inline GramMatrix gram_from_autocorrelation(std::span<const cplx> c) {
  if (c.empty()) throw InvalidArgument("gram_from_autocorrelation: empty autocorrelation");
  if (std::abs(c[0] - 1.0) > 1e-10) {
    std::ostringstream os;
    os << "gram_from_autocorrelation: c_0 must be 1, got " << c[0];
    throw InvalidArgument(os.str());
  }
  for (std::size_t n = 0; n < c.size(); ++n) {
    if (!(std::abs(c[n]) <= 1.0 + 1e-10)) {
      std::ostringstream os;
      os << "gram_from_autocorrelation: |c_" << n << "| = " << std::abs(c[n]) << " exceeds 1";
      throw InvalidArgument(os.str());
    }
  }
  const auto k = static_cast<Eigen::Index>(c.size());
  CMatrix g(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    g(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < k; ++j) {
      g(i, j) = c[static_cast<std::size_t>(j - i)];
      g(j, i) = std::conj(g(i, j));
    }
  }
  return GramMatrix::from_entries(std::move(g));
}

/// Sorted Gram eigenvalues; values in (-1e-8 K, 0) are reported as 0.
inline SpectrumSample gram_spectrum(const GramMatrix& g) {
  SpectrumSample raw = hermitian_eigenvalues(g.entries());
  const double k = static_cast<double>(g.size());
  const double floor = -1e-8 * k;
  std::vector<double> vals = raw.values();
  if (vals.front() <= floor) {
    std::ostringstream os;
    os << "gram_spectrum: eigenvalue " << vals.front() << " below PSD tolerance " << floor;
    throw NumericalError(os.str());
  }
  for (double& v : vals) v = std::max(v, 0.0);
  return SpectrumSample(std::move(vals));
}

/// Equal-width bins on [0, upper], total mass 1.
struct Histogram {
  std::vector<double> edges;   // B + 1 ascending
  std::vector<double> masses;  // B, nonnegative

  std::size_t bins() const { return masses.size(); }
  double total() const {
    double s = 0.0;
    for (double m : masses) s += m;
    return s;
  }
};

inline Histogram empirical_histogram(const SpectrumSample& s, std::size_t bins, double upper) {
  if (s.empty()) throw InvalidArgument("empirical_histogram: empty spectrum");
  if (bins < 1) throw InvalidArgument("empirical_histogram: need at least one bin");
  if (!(upper > 0.0)) throw InvalidArgument("empirical_histogram: upper bound must be positive");
  Histogram h;
  h.edges.resize(bins + 1);
  const double width = upper / static_cast<double>(bins);
  for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = width * static_cast<double>(i);
  h.edges.back() = upper;

  std::vector<std::size_t> counts(bins, 0);
  for (double v : s.values()) {
    std::size_t idx = 0;
    if (v >= upper) {
      idx = bins - 1;
    } else if (v > 0.0) {
      idx = std::min(bins - 1, static_cast<std::size_t>(v / width));
    }
    ++counts[idx];
  }
  const double total = static_cast<double>(s.size());
  h.masses.resize(bins);
  for (std::size_t i = 0; i < bins; ++i) h.masses[i] = static_cast<double>(counts[i]) / total;
  return h;
}

struct SpectrumSummary {
  double trace = 0.0;
  double min_eig = 0.0;
  std::size_t zero_count = 0;  // eigenvalues < zero_tol
  double near_one_mass = 0.0;  // fraction in [1 - delta, 1 + delta]
  double zero_tol = 0.0;
  double delta = 0.0;
};

inline SpectrumSummary spectrum_summary(const SpectrumSample& s, double zero_tol, double delta) {
  if (!(zero_tol > 0.0) || !(delta > 0.0)) {
    throw InvalidArgument("spectrum_summary: tolerances must be positive");
  }
  if (s.empty()) throw InvalidArgument("spectrum_summary: empty spectrum");
  SpectrumSummary out;
  out.zero_tol = zero_tol;
  out.delta = delta;
  out.trace = s.sum();
  out.min_eig = s.min();
  std::size_t near_one = 0;
  for (double v : s.values()) {
    if (v < zero_tol) ++out.zero_count;
    if (std::abs(v - 1.0) <= delta) ++near_one;
  }
  out.near_one_mass = static_cast<double>(near_one) / static_cast<double>(s.size());
  return out;
}

/// Default zero threshold for a K x K Gram spectrum.
inline double default_zero_tol(std::size_t k) { return 1e-8 * static_cast<double>(k); }

}  // namespace gramrecur
