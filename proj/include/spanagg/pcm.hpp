#ifndef SPANAGG_PCM_HPP
#define SPANAGG_PCM_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spanagg/error.hpp"
#include "spanagg/scale.hpp"

namespace spanagg {

/// Which alternative of the pair (i, j) is preferred.
enum class Dominance { row, column };

/// One expert's statement "alternative i relates to j by `grade` on `scale`".
/// With Dominance::row the cell a_ij holds the ratio, otherwise a_ji does.
struct Judgment {
  std::size_t expert = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  double grade = 1.0;
  Scale scale{};
  Dominance direction = Dominance::row;

  friend bool operator==(const Judgment&, const Judgment&) = default;
};

/// Ratio stored at (i, j) for this judgment, in the unified scale.
inline double judgment_ratio(const Judgment& jd, UnifiedScale unified) {
  const double r = unified_ratio(jd.grade, jd.scale, unified);
  return jd.direction == Dominance::row ? r : 1.0 / r;
}

struct Cell {
  double value = 1.0;
  Scale scale{};
};

using Pair = std::pair<std::size_t, std::size_t>;

inline std::string pair_label(std::size_t i, std::size_t j) {
  return "(" + std::to_string(i) + "," + std::to_string(j) + ")";
}

/// Incomplete multiplicative reciprocal pairwise comparison matrix of one
/// expert. Setting a cell always sets its reciprocal.
class Pcm {
 public:
  Pcm() = default;
  explicit Pcm(std::size_t n, std::size_t expert = 0)
      : n_(n), expert_(expert), cells_(n * n) {}

  std::size_t size() const noexcept { return n_; }
  std::size_t expert() const noexcept { return expert_; }

  bool has(std::size_t i, std::size_t j) const {
    check_index(i, j);
    return i != j && cells_[i * n_ + j].has_value();
  }

  /// Diagonal cells are 1; blank off-diagonal cells yield nullopt.
  std::optional<Cell> cell(std::size_t i, std::size_t j) const {
    check_index(i, j);
    if (i == j) return Cell{1.0, Scale{}};
    return cells_[i * n_ + j];
  }

  double value(std::size_t i, std::size_t j) const {
    auto c = cell(i, j);
    if (!c) throw Error(ErrorKind::no_data, "cell " + pair_label(i, j) + " is blank");
    return c->value;
  }

  void set(std::size_t i, std::size_t j, double value, Scale scale) {
    check_index(i, j);
    if (i == j) throw Error(ErrorKind::invalid_judgment, "diagonal cells are fixed at 1");
    if (!(value > 0.0) || !std::isfinite(value)) {
      throw Error(ErrorKind::invalid_judgment,
                  "cell " + pair_label(i, j) + " must be a positive ratio");
    }
    cells_[i * n_ + j] = Cell{value, scale};
    cells_[j * n_ + i] = Cell{1.0 / value, scale};
  }

  void erase(std::size_t i, std::size_t j) {
    check_index(i, j);
    cells_[i * n_ + j].reset();
    cells_[j * n_ + i].reset();
  }

  /// Scales of the n(n-1)/2 upper-triangle cells in row-major order.
  std::vector<std::optional<Scale>> upper_scales() const {
    std::vector<std::optional<Scale>> out;
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = i + 1; j < n_; ++j) {
        const auto& c = cells_[i * n_ + j];
        out.push_back(c ? std::optional<Scale>(c->scale) : std::nullopt);
      }
    }
    return out;
  }

  /// Provided upper-triangle pairs (i < j).
  std::vector<Pair> provided_pairs() const {
    std::vector<Pair> out;
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = i + 1; j < n_; ++j) {
        if (cells_[i * n_ + j]) out.emplace_back(i, j);
      }
    }
    return out;
  }

 private:
  void check_index(std::size_t i, std::size_t j) const {
    if (i >= n_ || j >= n_) {
      throw Error(ErrorKind::invalid_judgment,
                  "alternative index out of range in " + pair_label(i, j));
    }
  }

  std::size_t n_ = 0;
  std::size_t expert_ = 0;
  std::vector<std::optional<Cell>> cells_;
};

inline double pcm_scale_weight(const Pcm& pcm,
                               MissingCellPolicy policy = MissingCellPolicy::exclude,
                               Mean mean = Mean::geometric) {
  const auto scales = pcm.upper_scales();
  return pcm_scale_weight(std::span<const std::optional<Scale>>(scales), policy, mean);
}

/// Builds one expert's PCM. All judgments must belong to `expert`.
inline Pcm build_pcm(std::span<const Judgment> judgments, std::size_t n, UnifiedScale unified,
                     std::size_t expert = 0) {
  Pcm pcm(n, expert);
  for (const auto& jd : judgments) {
    if (jd.expert != expert) {
      throw Error(ErrorKind::invalid_judgment,
                  "judgment of expert " + std::to_string(jd.expert) + " passed to the PCM of expert " +
                      std::to_string(expert));
    }
    if (jd.i >= n || jd.j >= n || jd.i == jd.j) {
      throw Error(ErrorKind::invalid_judgment,
                  "judgment " + pair_label(jd.i, jd.j) + " does not name two distinct alternatives");
    }
    const double ratio = judgment_ratio(jd, unified);
    if (auto existing = pcm.cell(jd.i, jd.j)) {
      const bool same_value = std::abs(existing->value - ratio) <= 1e-12 * std::max(1.0, ratio);
      if (!same_value || !(existing->scale == jd.scale)) {
        throw Error(ErrorKind::conflict, "conflicting judgments for pair " +
                                             pair_label(std::min(jd.i, jd.j), std::max(jd.i, jd.j)) +
                                             " of expert " + std::to_string(expert));
      }
      continue;
    }
    pcm.set(jd.i, jd.j, ratio, jd.scale);
  }
  return pcm;
}

/// Splits a judgment list by expert and builds all m PCMs.
inline std::vector<Pcm> build_pcms(std::span<const Judgment> judgments, std::size_t n,
                                   std::size_t m, UnifiedScale unified) {
  std::vector<std::vector<Judgment>> per(m);
  for (const auto& jd : judgments) {
    if (jd.expert >= m) {
      throw Error(ErrorKind::invalid_judgment, "unknown expert " + std::to_string(jd.expert));
    }
    per[jd.expert].push_back(jd);
  }
  std::vector<Pcm> out;
  out.reserve(m);
  for (std::size_t k = 0; k < m; ++k) out.push_back(build_pcm(per[k], n, unified, k));
  return out;
}

/// Undirected graph over alternatives whose edges are provided comparisons.
class ComparisonGraph {
 public:
  ComparisonGraph() = default;
  explicit ComparisonGraph(std::size_t n) : n_(n), adj_(n, std::vector<bool>(n, false)) {}

  static ComparisonGraph of(const Pcm& pcm) {
    ComparisonGraph g(pcm.size());
    for (auto [i, j] : pcm.provided_pairs()) g.add_edge(i, j);
    return g;
  }

  static ComparisonGraph union_of(std::span<const Pcm> pcms) {
    ComparisonGraph g(pcms.empty() ? 0 : pcms.front().size());
    for (const auto& p : pcms) {
      if (p.size() != g.size()) {
        throw Error(ErrorKind::invalid_judgment, "PCMs disagree on the number of alternatives");
      }
      for (auto [i, j] : p.provided_pairs()) g.add_edge(i, j);
    }
    return g;
  }

  static ComparisonGraph complete(std::size_t n) {
    ComparisonGraph g(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) g.add_edge(i, j);
    return g;
  }

  std::size_t size() const noexcept { return n_; }

  void add_edge(std::size_t i, std::size_t j) {
    if (i >= n_ || j >= n_ || i == j) {
      throw Error(ErrorKind::invalid_judgment, "bad edge " + pair_label(i, j));
    }
    if (adj_[i][j]) return;
    adj_[i][j] = adj_[j][i] = true;
    const Pair e{std::min(i, j), std::max(i, j)};
    edges_.insert(std::lower_bound(edges_.begin(), edges_.end(), e), e);
  }

  bool has_edge(std::size_t i, std::size_t j) const { return adj_.at(i).at(j); }

  /// Edges as (i < j) pairs in lexicographic order.
  const std::vector<Pair>& edges() const noexcept { return edges_; }

  /// Connected components, each sorted, ordered by their lowest vertex.
  std::vector<std::vector<std::size_t>> components() const {
    std::vector<int> label(n_, -1);
    std::vector<std::vector<std::size_t>> comps;
    for (std::size_t s = 0; s < n_; ++s) {
      if (label[s] >= 0) continue;
      const int id = static_cast<int>(comps.size());
      comps.emplace_back();
      std::vector<std::size_t> stack{s};
      label[s] = id;
      while (!stack.empty()) {
        const std::size_t u = stack.back();
        stack.pop_back();
        comps.back().push_back(u);
        for (std::size_t v = 0; v < n_; ++v) {
          if (adj_[u][v] && label[v] < 0) {
            label[v] = id;
            stack.push_back(v);
          }
        }
      }
      std::sort(comps.back().begin(), comps.back().end());
    }
    return comps;
  }

  bool connected() const { return n_ > 0 && components().size() == 1; }

 private:
  std::size_t n_ = 0;
  std::vector<std::vector<bool>> adj_;
  std::vector<Pair> edges_;
};

struct CompletenessReport {
  bool union_connected = false;
  std::vector<bool> expert_connected;
  std::vector<std::vector<std::size_t>> components;
  /// Pairs whose comparison would connect the union graph; empty iff connected.
  std::vector<Pair> suggested_edges;

  std::vector<std::size_t> disconnected_experts() const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < expert_connected.size(); ++k)
      if (!expert_connected[k]) out.push_back(k);
    return out;
  }
};

/// Decides whether at least one spanning tree exists over the pooled
/// comparisons of all experts, and per expert.
inline CompletenessReport check_completeness(std::span<const Pcm> pcms) {
  if (pcms.empty()) throw Error(ErrorKind::no_data, "completeness check needs at least one PCM");
  CompletenessReport report;
  const auto g = ComparisonGraph::union_of(pcms);
  report.components = g.components();
  report.union_connected = report.components.size() == 1;
  for (const auto& p : pcms) report.expert_connected.push_back(ComparisonGraph::of(p).connected());
  if (!report.union_connected) {
    const std::size_t anchor = report.components.front().front();
    for (std::size_t c = 1; c < report.components.size(); ++c) {
      report.suggested_edges.emplace_back(anchor, report.components[c].front());
    }
  }
  return report;
}

}  // namespace spanagg

#endif  // SPANAGG_PCM_HPP
