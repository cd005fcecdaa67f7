#ifndef SPANAGG_AGREEMENT_HPP
#define SPANAGG_AGREEMENT_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "spanagg/error.hpp"
#include "spanagg/numeric.hpp"
#include "spanagg/spantree.hpp"

namespace spanagg {

/// Mass-weighted histogram of estimates over grades 1..N.
struct Spectrum {
  std::size_t bins = 0;
  std::vector<double> mass;  // mass[g - 1] belongs to grade g
  std::size_t raters = 0;    // number of estimates with positive weight
  bool equal_weights = true;

  /// Spectrum of plain vote counts r_1..r_N.
  static Spectrum from_counts(std::span<const double> counts) {
    Spectrum s;
    s.bins = counts.size();
    s.mass.assign(counts.begin(), counts.end());
    double raters = 0.0;
    for (double c : counts) {
      if (c < 0.0 || c != std::floor(c)) {
        throw Error(ErrorKind::domain, "vote counts must be non-negative integers");
      }
      raters += c;
    }
    s.raters = static_cast<std::size_t>(raters);
    return s;
  }

  static Spectrum from_counts(std::initializer_list<double> counts) {
    return from_counts(std::span<const double>(counts.begin(), counts.size()));
  }

  /// Grades (1-based) carrying positive mass, ascending.
  std::vector<std::size_t> support() const {
    std::vector<std::size_t> out;
    for (std::size_t g = 0; g < mass.size(); ++g)
      if (mass[g] > 0.0) out.push_back(g + 1);
    return out;
  }

  double total_mass() const { return compensated_sum(mass); }
};

struct WeightedValue {
  double value = 0.0;
  double weight = 1.0;
};

namespace detail {

inline Spectrum bin_values(std::span<const WeightedValue> values, std::size_t bins,
                           auto&& bin_of) {
  if (bins < 2) throw Error(ErrorKind::domain, "a spectrum needs at least 2 grades");
  Spectrum s;
  s.bins = bins;
  s.mass.assign(bins, 0.0);
  double first_weight = -1.0;
  for (const auto& v : values) {
    if (!(v.value > 0.0) || v.value > 1.0) {
      throw Error(ErrorKind::domain, "spectrum value " + std::to_string(v.value) + " outside (0,1]");
    }
    if (!(v.weight >= 0.0) || !std::isfinite(v.weight)) {
      throw Error(ErrorKind::domain, "spectrum weights must be finite and non-negative");
    }
    if (v.weight == 0.0) continue;
    long long g = bin_of(v.value);
    g = std::clamp<long long>(g, 1, static_cast<long long>(bins));
    s.mass[static_cast<std::size_t>(g - 1)] += v.weight;
    ++s.raters;
    if (first_weight < 0.0) {
      first_weight = v.weight;
    } else if (std::abs(v.weight - first_weight) > 1e-12 * first_weight) {
      s.equal_weights = false;
    }
  }
  return s;
}

}  // namespace detail

/// Rounds each value to the precision `epsilon` (bin round(value/epsilon),
/// N = round(1/epsilon)); each value adds its weight to its bin. Values
/// below epsilon/2 land in the first bin.
inline Spectrum build_spectrum(std::span<const WeightedValue> values, double epsilon) {
  if (!(epsilon > 0.0) || epsilon > 0.5) {
    throw Error(ErrorKind::domain, "epsilon must lie in (0, 0.5]");
  }
  const auto bins = static_cast<std::size_t>(std::llround(1.0 / epsilon));
  return detail::bin_values(values, bins,
                            [epsilon](double v) { return std::llround(v / epsilon); });
}

/// Same as build_spectrum but with an explicit grade count N (bin round(value*N)).
inline Spectrum build_spectrum_on_grades(std::span<const WeightedValue> values, std::size_t grades) {
  return detail::bin_values(values, grades, [grades](double v) {
    return std::llround(v * static_cast<double>(grades));
  });
}

/// Sum of normalized gaps: d = N-1 + floor((N-1)/(k-1)) for k > 1, else N.
inline std::size_t gap_total(std::size_t bins, std::size_t k) {
  if (k <= 1) return bins;
  return bins - 1 + (bins - 1) / (k - 1);
}

/// Gap shares p_1..p_k of a support (ascending 1-based grades). The last
/// share is the residual d - (i_k - i_1).
inline std::vector<double> gap_shares(std::span<const std::size_t> support, std::size_t bins) {
  const std::size_t k = support.size();
  const double d = static_cast<double>(gap_total(bins, k));
  std::vector<double> p;
  p.reserve(k);
  for (std::size_t j = 0; j + 1 < k; ++j) p.push_back((support[j + 1] - support[j]) / d);
  const double span = k > 0 ? static_cast<double>(support.back() - support.front()) : 0.0;
  p.push_back((d - span) / d);
  return p;
}

struct EntropyRange {
  double min = 0.0;
  double max = 0.0;
};

namespace detail {

// Entropy of m units spread as evenly as possible over b cells.
inline double balanced_entropy(std::size_t units, std::size_t cells) {
  if (cells == 0 || units == 0) return 0.0;
  const std::size_t q = units / cells, r = units % cells;
  std::vector<double> parts(cells, static_cast<double>(q));
  for (std::size_t i = 0; i < r; ++i) parts[i] += 1.0;
  return shannon_entropy(parts);
}

}  // namespace detail

/// Extremes of the gap entropy H(P) over all k-point supports in 1..N.
/// Gap vectors are exactly the compositions of d into k positive parts whose
/// residual part is at least floor((N-1)/(k-1)); by Schur concavity the
/// clustered support (1,...,1,d-k+1) is the minimum and the most even
/// composition the maximum.
inline EntropyRange gap_entropy_range(std::size_t bins, std::size_t k) {
  if (k < 2 || k > bins) return {};
  const std::size_t d = gap_total(bins, k);
  std::vector<double> clustered(k, 1.0);
  clustered.back() = static_cast<double>(d - (k - 1));
  return {shannon_entropy(clustered), detail::balanced_entropy(d, k)};
}

/// Largest attainable frequency entropy H(Q) for `raters` estimates on N
/// grades. Equal-weight estimates behave like votes and the maximum is the
/// most even vote split; arbitrary weights can reach ln(min(raters, N)).
inline double max_frequency_entropy(std::size_t raters, std::size_t bins, bool equal_weights) {
  const std::size_t cells = std::min(raters, bins);
  if (cells < 2) return 0.0;
  if (equal_weights) return detail::balanced_entropy(raters, cells);
  return std::log(static_cast<double>(cells));
}

struct EntropyBreakdown {
  std::size_t k = 0;
  double gap_entropy = 0.0;        // H(P)
  EntropyRange gap_range;          // min/max H(P) for this k
  double gap_normalized = 0.0;     // H*(P)
  double frequency_entropy = 0.0;  // H(Q)
  double frequency_max = 0.0;      // max H(Q)
  double frequency_normalized = 0.0;
  double index = 1.0;
};

inline EntropyBreakdown double_entropy_breakdown(const Spectrum& s) {
  if (s.mass.size() != s.bins || s.bins < 2) {
    throw Error(ErrorKind::undefined_spectrum, "spectrum has no valid grade domain");
  }
  if (!(s.total_mass() > 0.0)) {
    throw Error(ErrorKind::undefined_spectrum, "spectrum has zero total mass");
  }
  EntropyBreakdown b;
  const auto support = s.support();
  b.k = support.size();
  if (b.k == 1) return b;  // unanimity

  const auto shares = gap_shares(support, s.bins);
  b.gap_entropy = shannon_entropy(shares);
  if (b.k == s.bins) {
    b.gap_range = {b.gap_entropy, b.gap_entropy};
    b.gap_normalized = 1.0;
  } else {
    b.gap_range = gap_entropy_range(s.bins, b.k);
    const double width = b.gap_range.max - b.gap_range.min;
    // k = N-1 (N >= 4) admits a single gap multiset; treat it like k = N.
    b.gap_normalized = width <= 1e-15 ? 1.0 : (b.gap_entropy - b.gap_range.min) / width;
  }

  std::vector<double> masses;
  masses.reserve(b.k);
  for (std::size_t g : support) masses.push_back(s.mass[g - 1]);
  b.frequency_entropy = shannon_entropy(masses);
  b.frequency_max = max_frequency_entropy(std::max(s.raters, b.k), s.bins, s.equal_weights);
  b.frequency_normalized = b.frequency_max > 0.0 ? b.frequency_entropy / b.frequency_max : 0.0;

  b.gap_normalized = std::clamp(b.gap_normalized, 0.0, 1.0);
  b.frequency_normalized = std::clamp(b.frequency_normalized, 0.0, 1.0);
  b.index = 1.0 - (b.gap_normalized + b.frequency_normalized) / 2.0;
  return b;
}

/// Double-entropy agreement index in [0, 1]; 1 means unanimity.
inline double double_entropy_index(const Spectrum& s) { return double_entropy_breakdown(s).index; }

struct AgreementConfig {
  double epsilon = 0.01;
  double threshold = 0.7;
};

struct AgreementReport {
  std::vector<double> K;
  double threshold = 0.7;
  bool passing = false;
  std::size_t worst_coordinate = 0;
  std::vector<Spectrum> spectrums;

  double min_index() const { return K.empty() ? 0.0 : K[worst_coordinate]; }
};

/// One spectrum and one index per priority coordinate. `weights[t]` is the
/// mass the t-th vector adds to its bins.
inline AgreementReport agreement_report(std::span<const PriorityVector> vectors,
                                        std::span<const double> weights,
                                        const AgreementConfig& config = {}) {
  if (vectors.empty()) throw Error(ErrorKind::no_data, "no priority vectors to compare");
  if (weights.size() != vectors.size()) {
    throw Error(ErrorKind::domain, "one weight per priority vector is required");
  }
  if (!(config.threshold >= 0.0) || config.threshold > 1.0) {
    throw Error(ErrorKind::domain, "agreement threshold must lie in [0, 1]");
  }
  const std::size_t n = vectors.front().size();
  AgreementReport r;
  r.threshold = config.threshold;
  std::vector<WeightedValue> column(vectors.size());
  for (std::size_t l = 0; l < n; ++l) {
    for (std::size_t t = 0; t < vectors.size(); ++t) {
      if (vectors[t].size() != n) throw Error(ErrorKind::domain, "priority vectors differ in length");
      column[t] = WeightedValue{vectors[t][l], weights[t]};
    }
    r.spectrums.push_back(build_spectrum(column, config.epsilon));
    r.K.push_back(double_entropy_index(r.spectrums.back()));
  }
  r.worst_coordinate = static_cast<std::size_t>(
      std::min_element(r.K.begin(), r.K.end()) - r.K.begin());
  r.passing = r.K[r.worst_coordinate] > config.threshold;
  return r;
}

/// Two-column (grade, mass) table for plotting.
inline void write_spectrum_table(std::ostream& os, const Spectrum& s) {
  const auto old = os.precision(std::numeric_limits<double>::max_digits10);
  os << "# grade mass\n";
  for (std::size_t g = 0; g < s.bins; ++g) os << (g + 1) << ' ' << s.mass[g] << '\n';
  os.precision(old);
}

}  // namespace spanagg

#endif  // SPANAGG_AGREEMENT_HPP
