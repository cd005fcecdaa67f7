#ifndef SPANAGG_AGGREGATE_HPP
#define SPANAGG_AGGREGATE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "spanagg/error.hpp"
#include "spanagg/numeric.hpp"
#include "spanagg/pcm.hpp"
#include "spanagg/scale.hpp"
#include "spanagg/spantree.hpp"

namespace spanagg {

/// Rating of tree q of expert k when compared against the PCM of expert l.
struct Rating {
  std::size_t k = 0;
  std::size_t q = 0;
  std::size_t l = 0;
  double value = 0.0;
};

struct AggregateResult {
  PriorityVector w;
  Icpcm icpcm;
  std::vector<Rating> ratings;
  std::size_t T = 0;
  std::size_t T_star = 0;
};

namespace detail {

inline void normalize(std::vector<double>& w) {
  CompensatedSum s;
  for (double x : w) s.add(x);
  const double total = s.value();
  for (double& x : w) x /= total;
}

// Weighted mean of positive vectors, exponents/weights already summing to 1.
// The geometric branch works on logs and shifts by the largest log before
// exponentiating.
inline std::vector<double> weighted_mean(std::span<const PriorityVector> vectors,
                                         std::span<const double> weights, Mean mean) {
  const std::size_t n = vectors.front().size();
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) {
    CompensatedSum acc;
    for (std::size_t t = 0; t < vectors.size(); ++t) {
      if (weights[t] == 0.0) continue;
      const double x = vectors[t][j];
      acc.add(weights[t] * (mean == Mean::geometric ? std::log(x) : x));
    }
    out[j] = acc.value();
  }
  if (mean == Mean::geometric) {
    const double top = *std::max_element(out.begin(), out.end());
    for (double& x : out) x = std::exp(x - top);
  }
  normalize(out);
  return out;
}

inline void check_vectors(std::span<const PriorityVector> vectors) {
  if (vectors.empty()) throw Error(ErrorKind::no_data, "no priority vectors to aggregate");
  const std::size_t n = vectors.front().size();
  for (const auto& v : vectors) {
    if (v.size() != n) throw Error(ErrorKind::domain, "priority vectors differ in length");
    for (double x : v.w)
      if (!(x > 0.0)) throw Error(ErrorKind::domain, "priorities must be positive");
  }
}

}  // namespace detail

/// Coordinate-wise mean of all tree vectors with equal exponents 1/T,
/// renormalized to sum 1.
inline PriorityVector simple_aggregate(std::span<const PriorityVector> vectors,
                                       Mean mean = Mean::geometric) {
  detail::check_vectors(vectors);
  const std::vector<double> weights(vectors.size(), 1.0 / static_cast<double>(vectors.size()));
  return PriorityVector{detail::weighted_mean(vectors, weights, mean), std::nullopt, std::nullopt};
}

/// a_ij = w_i / w_j.
inline Icpcm icpcm_from_priorities(const PriorityVector& w) {
  const std::size_t n = w.size();
  Icpcm m(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = w[i] / w[j];
  return m;
}

/// Sum of |a_uv(tree) - a_uv(other)| over the upper-triangle cells the other
/// expert actually provided, in unified ratio values.
inline double absolute_deviation(const Icpcm& icpcm, const Pcm& other) {
  if (icpcm.size() != other.size()) {
    throw Error(ErrorKind::domain, "matrices differ in size");
  }
  CompensatedSum dev;
  for (auto [u, v] : other.provided_pairs()) dev.add(std::abs(icpcm(u, v) - other.value(u, v)));
  return dev.value();
}

/// c_k c_l s_kq s_l / ln(deviation + e).
inline double rating(const Icpcm& icpcm, const Pcm& other, double c_k, double c_l,
                     double tree_weight, double pcm_weight) {
  const double dev = absolute_deviation(icpcm, other);
  return c_k * c_l * tree_weight * pcm_weight / std::log(dev + std::exp(1.0));
}

/// Exponents R / sum(R) in rating order.
inline std::vector<double> normalized_exponents(std::span<const Rating> ratings) {
  CompensatedSum total;
  for (const auto& r : ratings) {
    if (!(r.value >= 0.0)) throw Error(ErrorKind::domain, "ratings must be non-negative");
    total.add(r.value);
  }
  const double s = total.value();
  if (!(s > 0.0)) throw Error(ErrorKind::no_data, "all ratings are zero");
  std::vector<double> out;
  out.reserve(ratings.size());
  for (const auto& r : ratings) out.push_back(r.value / s);
  return out;
}

/// Rating-weighted mean over all (k, q, l) replicas of the tree vectors.
/// Each vector is identified by its (expert, tree) source.
inline AggregateResult weighted_aggregate(std::span<const PriorityVector> vectors,
                                          std::span<const Rating> ratings,
                                          Mean mean = Mean::geometric) {
  detail::check_vectors(vectors);
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> slot;
  for (std::size_t t = 0; t < vectors.size(); ++t) {
    if (!vectors[t].expert || !vectors[t].tree) {
      throw Error(ErrorKind::domain, "weighted aggregation needs tree-sourced vectors");
    }
    slot[{*vectors[t].expert, *vectors[t].tree}] = t;
  }
  const auto exponents = normalized_exponents(ratings);
  // Replicas of one tree share its vector, so their exponents add up.
  std::vector<CompensatedSum> per_vector(vectors.size());
  for (std::size_t r = 0; r < ratings.size(); ++r) {
    auto it = slot.find({ratings[r].k, ratings[r].q});
    if (it == slot.end()) throw Error(ErrorKind::domain, "rating refers to an unknown tree");
    per_vector[it->second].add(exponents[r]);
  }
  std::vector<double> weights;
  weights.reserve(vectors.size());
  for (const auto& acc : per_vector) weights.push_back(acc.value());

  AggregateResult result;
  result.w = PriorityVector{detail::weighted_mean(vectors, weights, mean), std::nullopt, std::nullopt};
  result.icpcm = icpcm_from_priorities(result.w);
  result.ratings.assign(ratings.begin(), ratings.end());
  result.T = vectors.size();
  result.T_star = ratings.size();
  return result;
}

}  // namespace spanagg

#endif  // SPANAGG_AGGREGATE_HPP
