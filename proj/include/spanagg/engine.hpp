#ifndef SPANAGG_ENGINE_HPP
#define SPANAGG_ENGINE_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spanagg/aggregate.hpp"
#include "spanagg/agreement.hpp"
#include "spanagg/error.hpp"
#include "spanagg/pcm.hpp"
#include "spanagg/scale.hpp"
#include "spanagg/spantree.hpp"

namespace spanagg {

struct EngineConfig {
  double epsilon = 0.01;
  double threshold = 0.7;
  std::size_t cap = 50;
  Mean mean = Mean::geometric;
  MissingCellPolicy missing = MissingCellPolicy::exclude;
  ScaleRegistry scales{};
  std::size_t reference_column = 0;
  double max_trees = kDefaultMaxTrees;

  UnifiedScale unified() const { return scales.unified(); }
};

/// Everything the pipeline needs: n alternatives, one competence per expert
/// and the current judgments.
struct Group {
  std::size_t n = 0;
  std::vector<double> competences;
  std::vector<Judgment> judgments;

  std::size_t experts() const noexcept { return competences.size(); }
};

struct Evaluation {
  std::vector<Pcm> pcms;
  CompletenessReport completeness;
  std::vector<std::size_t> trees_per_expert;
  std::vector<PriorityVector> tree_vectors;
  std::vector<double> tree_weights;  // scale weight of each tree
  std::vector<double> pcm_weights;   // scale weight of each expert's PCM
  std::optional<AggregateResult> aggregate;
  std::optional<PriorityVector> simple;
  std::optional<AgreementReport> agreement;

  /// True when at least one tree exists and the group could be aggregated.
  bool ready() const noexcept { return aggregate.has_value() && agreement.has_value(); }
  std::size_t total_trees() const noexcept { return tree_vectors.size(); }
};

inline void validate_group(const Group& g, const EngineConfig& config) {
  if (g.n < 2) throw Error(ErrorKind::domain, "at least 2 alternatives are required");
  if (g.experts() < 1) throw Error(ErrorKind::domain, "at least 1 expert is required");
  for (double c : g.competences) {
    if (!(c > 0.0) || !std::isfinite(c)) {
      throw Error(ErrorKind::domain, "competences must be positive");
    }
  }
  for (const auto& jd : g.judgments) {
    if (!config.scales.contains(jd.scale)) {
      throw Error(ErrorKind::invalid_judgment,
                  "scale with " + std::to_string(jd.scale.grades) + " grades is not registered");
    }
  }
}

/// Runs the whole pipeline: PCMs, completeness, trees, ICPCMs, tree
/// priorities, ratings, aggregates and the agreement report.
inline Evaluation evaluate(const Group& group, const EngineConfig& config = {}) {
  validate_group(group, config);
  Evaluation ev;
  const std::size_t m = group.experts();
  ev.pcms = build_pcms(group.judgments, group.n, m, config.unified());
  ev.completeness = check_completeness(ev.pcms);
  ev.trees_per_expert.assign(m, 0);
  for (const auto& p : ev.pcms) ev.pcm_weights.push_back(pcm_scale_weight(p, config.missing, config.mean));
  if (!ev.completeness.union_connected) return ev;

  std::vector<Rating> ratings;
  std::vector<double> masses;
  for (std::size_t k = 0; k < m; ++k) {
    if (!ev.completeness.expert_connected[k]) continue;
    const Pcm& pcm = ev.pcms[k];
    std::size_t q = 0;
    for_each_spanning_tree(
        ComparisonGraph::of(pcm),
        [&](std::span<const Pair> edges) {
          SpanningTree tree;
          tree.expert = k;
          tree.index = q;
          tree.edges.reserve(edges.size());
          for (auto [i, j] : edges) {
            const auto c = pcm.cell(i, j);
            tree.edges.push_back(TreeEdge{i, j, c->value, c->scale});
          }
          const Icpcm icpcm = reconstruct_icpcm(tree);
          const auto scales = tree.scales();
          const double s_kq = tree_scale_weight(std::span<const std::optional<Scale>>(scales), config.mean);
          for (std::size_t l = 0; l < m; ++l) {
            ratings.push_back(Rating{k, q, l,
                                     rating(icpcm, ev.pcms[l], group.competences[k],
                                            group.competences[l], s_kq, ev.pcm_weights[l])});
          }
          ev.tree_vectors.push_back(priorities_from_icpcm(icpcm, config.reference_column));
          ev.tree_weights.push_back(s_kq);
          masses.push_back(group.competences[k]);
          ++q;
        },
        config.max_trees);
    ev.trees_per_expert[k] = q;
  }
  if (ev.tree_vectors.empty()) return ev;

  ev.aggregate = weighted_aggregate(ev.tree_vectors, ratings, config.mean);
  ev.simple = simple_aggregate(ev.tree_vectors, config.mean);
  ev.agreement = agreement_report(ev.tree_vectors, masses, AgreementConfig{config.epsilon, config.threshold});
  return ev;
}

}  // namespace spanagg

#endif  // SPANAGG_ENGINE_HPP
