#ifndef SPANAGG_SPANTREE_HPP
#define SPANAGG_SPANTREE_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "spanagg/error.hpp"
#include "spanagg/numeric.hpp"
#include "spanagg/pcm.hpp"

namespace spanagg {

/// Trees beyond this count are refused (12^10, a complete graph on 12
/// alternatives).
inline constexpr double kDefaultMaxTrees = 61917364224.0;

struct TreeEdge {
  std::size_t i = 0;
  std::size_t j = 0;
  double value = 1.0;  // a_ij
  Scale scale{};
};

/// A basic comparison set: n-1 comparisons connecting all alternatives.
struct SpanningTree {
  std::size_t expert = 0;
  std::size_t index = 0;
  std::vector<TreeEdge> edges;

  std::size_t alternatives() const noexcept { return edges.size() + 1; }

  std::vector<std::optional<Scale>> scales() const {
    std::vector<std::optional<Scale>> out;
    out.reserve(edges.size());
    for (const auto& e : edges) out.emplace_back(e.scale);
    return out;
  }
};

/// Ideally consistent PCM: a_ij * a_jl == a_il for every triple.
class Icpcm {
 public:
  Icpcm() = default;
  explicit Icpcm(std::size_t n) : n_(n), a_(n * n, 1.0) {}

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }

  std::size_t expert = 0;
  std::size_t tree = 0;

  /// Largest relative violation of a_ij * a_jl = a_il.
  double consistency_error() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j)
        for (std::size_t l = 0; l < n_; ++l) {
          const double lhs = (*this)(i, j) * (*this)(j, l);
          const double rhs = (*this)(i, l);
          worst = std::max(worst, std::abs(lhs - rhs) / rhs);
        }
    return worst;
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> a_;
};

struct PriorityVector {
  std::vector<double> w;
  std::optional<std::size_t> expert;  // nullopt for aggregates
  std::optional<std::size_t> tree;

  std::size_t size() const noexcept { return w.size(); }
  double operator[](std::size_t i) const { return w[i]; }
};

/// Number of spanning trees by the matrix-tree theorem. Only used to refuse
/// enumerations that cannot finish.
inline double count_spanning_trees(const ComparisonGraph& g) {
  const std::size_t n = g.size();
  if (n <= 1) return n == 1 ? 1.0 : 0.0;
  const std::size_t r = n - 1;
  std::vector<long double> lap(r * r, 0.0L);
  for (auto [i, j] : g.edges()) {
    if (i < r) lap[i * r + i] += 1.0L;
    if (j < r) lap[j * r + j] += 1.0L;
    if (i < r && j < r) {
      lap[i * r + j] -= 1.0L;
      lap[j * r + i] -= 1.0L;
    }
  }
  long double det = 1.0L;
  for (std::size_t c = 0; c < r; ++c) {
    std::size_t piv = c;
    for (std::size_t row = c + 1; row < r; ++row)
      if (std::abs(lap[row * r + c]) > std::abs(lap[piv * r + c])) piv = row;
    if (std::abs(lap[piv * r + c]) < 1e-12L) return 0.0;
    if (piv != c) {
      for (std::size_t k = 0; k < r; ++k) std::swap(lap[c * r + k], lap[piv * r + k]);
      det = -det;
    }
    det *= lap[c * r + c];
    for (std::size_t row = c + 1; row < r; ++row) {
      const long double f = lap[row * r + c] / lap[c * r + c];
      for (std::size_t k = c; k < r; ++k) lap[row * r + k] -= f * lap[c * r + k];
    }
  }
  return static_cast<double>(std::round(std::abs(det)));
}

namespace detail {

// Include/exclude recursion over the lexicographically ordered edge list.
// An edge is excluded only if the remaining graph stays connected, so every
// branch ends in at least one tree.
template <class Visitor>
class TreeEnumerator {
 public:
  TreeEnumerator(const ComparisonGraph& g, Visitor& visit)
      : n_(g.size()), edges_(g.edges()), visit_(visit), avail_(n_, 0), parent_(n_), rank_(n_, 0) {
    for (auto [i, j] : edges_) {
      avail_[i] |= bit(j);
      avail_[j] |= bit(i);
    }
    for (std::size_t v = 0; v < n_; ++v) parent_[v] = v;
    chosen_.reserve(n_);
  }

  void run() {
    if (n_ == 1) {
      visit_(std::span<const Pair>());
      return;
    }
    if (!connected()) return;
    recurse(0);
  }

 private:
  static std::uint64_t bit(std::size_t v) { return std::uint64_t{1} << v; }

  std::size_t find(std::size_t v) const {
    while (parent_[v] != v) v = parent_[v];
    return v;
  }

  bool connected() const {
    std::uint64_t seen = 1, frontier = 1;
    while (frontier) {
      std::uint64_t next = 0;
      for (std::uint64_t f = frontier; f; f &= f - 1) {
        next |= avail_[static_cast<std::size_t>(std::countr_zero(f))];
      }
      frontier = next & ~seen;
      seen |= next;
    }
    const std::uint64_t all = n_ == 64 ? ~std::uint64_t{0} : bit(n_) - 1;
    return seen == all;
  }

  void recurse(std::size_t idx) {
    if (chosen_.size() == n_ - 1) {
      visit_(std::span<const Pair>(chosen_));
      return;
    }
    if (idx == edges_.size()) return;
    const auto [u, v] = edges_[idx];
    std::size_t ru = find(u), rv = find(v);
    if (ru != rv) {
      if (rank_[ru] < rank_[rv]) std::swap(ru, rv);
      const bool bump = rank_[ru] == rank_[rv];
      parent_[rv] = ru;
      if (bump) ++rank_[ru];
      chosen_.push_back(edges_[idx]);
      recurse(idx + 1);
      chosen_.pop_back();
      parent_[rv] = rv;
      if (bump) --rank_[ru];

      drop(u, v);
      if (connected()) recurse(idx + 1);
      restore(u, v);
    } else {
      drop(u, v);
      recurse(idx + 1);
      restore(u, v);
    }
  }

  void drop(std::size_t u, std::size_t v) {
    avail_[u] &= ~bit(v);
    avail_[v] &= ~bit(u);
  }
  void restore(std::size_t u, std::size_t v) {
    avail_[u] |= bit(v);
    avail_[v] |= bit(u);
  }

  std::size_t n_;
  const std::vector<Pair>& edges_;
  Visitor& visit_;
  std::vector<std::uint64_t> avail_;
  std::vector<std::size_t> parent_;
  std::vector<int> rank_;
  std::vector<Pair> chosen_;
};

}  // namespace detail

/// Streams every spanning tree of `g` as a span of n-1 (i < j) edges, in a
/// deterministic order. A disconnected graph yields nothing.
template <class Visitor>
void for_each_spanning_tree(const ComparisonGraph& g, Visitor&& visit,
                            double max_trees = kDefaultMaxTrees) {
  if (g.size() < 1) return;
  if (g.size() > 64) {
    throw Error(ErrorKind::resource, "tree enumeration supports at most 64 alternatives");
  }
  const double count = count_spanning_trees(g);
  if (count > max_trees) {
    throw Error(ErrorKind::resource, "graph has about " + std::to_string(count) +
                                         " spanning trees, above the limit of " +
                                         std::to_string(max_trees));
  }
  detail::TreeEnumerator<std::remove_reference_t<Visitor>> e(g, visit);
  e.run();
}

inline std::vector<std::vector<Pair>> enumerate_trees(const ComparisonGraph& g,
                                                      double max_trees = kDefaultMaxTrees) {
  std::vector<std::vector<Pair>> out;
  for_each_spanning_tree(
      g, [&](std::span<const Pair> t) { out.emplace_back(t.begin(), t.end()); }, max_trees);
  return out;
}

/// All spanning trees of an expert's PCM, with the expert's ratios attached.
inline std::vector<SpanningTree> enumerate_trees(const Pcm& pcm,
                                                 double max_trees = kDefaultMaxTrees) {
  std::vector<SpanningTree> out;
  for_each_spanning_tree(
      ComparisonGraph::of(pcm),
      [&](std::span<const Pair> t) {
        SpanningTree tree;
        tree.expert = pcm.expert();
        tree.index = out.size();
        for (auto [i, j] : t) {
          const auto c = pcm.cell(i, j);
          tree.edges.push_back(TreeEdge{i, j, c->value, c->scale});
        }
        out.push_back(std::move(tree));
      },
      max_trees);
  return out;
}

/// Completes a tree into an ICPCM: a_ij is the product of edge ratios along
/// the unique tree path from i to j.
inline Icpcm reconstruct_icpcm(const SpanningTree& tree) {
  const std::size_t n = tree.alternatives();
  std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
  for (const auto& e : tree.edges) {
    if (e.i >= n || e.j >= n) {
      throw Error(ErrorKind::invalid_judgment, "tree edge " + pair_label(e.i, e.j) + " out of range");
    }
    adj[e.i].emplace_back(e.j, e.value);
    adj[e.j].emplace_back(e.i, 1.0 / e.value);
  }
  Icpcm m(n);
  m.expert = tree.expert;
  m.tree = tree.index;
  std::vector<std::size_t> stack;
  std::vector<bool> seen(n);
  for (std::size_t root = 0; root < n; ++root) {
    std::fill(seen.begin(), seen.end(), false);
    seen[root] = true;
    m(root, root) = 1.0;
    stack.assign(1, root);
    std::size_t reached = 1;
    while (!stack.empty()) {
      const std::size_t x = stack.back();
      stack.pop_back();
      for (auto [y, a_xy] : adj[x]) {
        if (seen[y]) continue;
        seen[y] = true;
        ++reached;
        m(root, y) = m(root, x) * a_xy;
        stack.push_back(y);
      }
    }
    if (reached != n) {
      throw Error(ErrorKind::invalid_judgment, "edges do not form a spanning tree");
    }
  }
  return m;
}

/// Priorities of a consistent matrix: one column, normalized to sum 1.
inline PriorityVector priorities_from_icpcm(const Icpcm& m, std::size_t column = 0) {
  const std::size_t n = m.size();
  if (column >= n) throw Error(ErrorKind::domain, "reference column out of range");
  PriorityVector pv;
  pv.expert = m.expert;
  pv.tree = m.tree;
  pv.w.resize(n);
  CompensatedSum total;
  for (std::size_t i = 0; i < n; ++i) total.add(m(i, column));
  const double s = total.value();
  for (std::size_t i = 0; i < n; ++i) pv.w[i] = m(i, column) / s;
  return pv;
}

}  // namespace spanagg

#endif  // SPANAGG_SPANTREE_HPP
