// Shared builders for test groups.
#ifndef SPANAGG_TESTS_FIXTURES_HPP
#define SPANAGG_TESTS_FIXTURES_HPP

#include <algorithm>
#include <cstddef>
#include <random>
#include <vector>

#include "spanagg/engine.hpp"

namespace fixture {

// Judgment stating a(i, j) = ratio on the unified 9-grade scale.
inline spanagg::Judgment ratio_judgment(std::size_t expert, std::size_t i, std::size_t j, double ratio,
                                        int grades = 9) {
  spanagg::Judgment jd;
  jd.expert = expert;
  jd.i = i;
  jd.j = j;
  jd.scale = spanagg::Scale{grades};
  jd.direction = ratio >= 1.0 ? spanagg::Dominance::row : spanagg::Dominance::column;
  jd.grade = ratio >= 1.0 ? ratio : 1.0 / ratio;
  return jd;
}

// Complete judgments for one expert consistent with w.
inline void add_consistent(std::vector<spanagg::Judgment>& out, std::size_t expert, const std::vector<double>& w) {
  for (std::size_t i = 0; i < w.size(); ++i)
    for (std::size_t j = i + 1; j < w.size(); ++j) out.push_back(ratio_judgment(expert, i, j, w[i] / w[j]));
}

// Complete judgments with every ratio drawn independently in [1/9, 9].
inline void add_random(std::vector<spanagg::Judgment>& out, std::size_t expert, std::size_t n,
                       std::mt19937_64& rng) {
  std::uniform_real_distribution<double> g(1.0, 9.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double r = g(rng);
      out.push_back(ratio_judgment(expert, i, j, rng() % 2 ? r : 1.0 / r));
    }
}

// Random subset of cells that still keeps the expert's graph connected:
// a random spanning path plus each remaining cell with probability p.
inline void add_random_sparse(std::vector<spanagg::Judgment>& out, std::size_t expert, std::size_t n,
                              double p, std::mt19937_64& rng) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::vector<bool>> take(n, std::vector<bool>(n, false));
  for (std::size_t t = 0; t + 1 < n; ++t) take[perm[t]][perm[t + 1]] = take[perm[t + 1]][perm[t]] = true;
  std::uniform_real_distribution<double> u(0.0, 1.0), g(1.0, 9.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!take[i][j] && u(rng) >= p) continue;
      const double r = g(rng);
      out.push_back(ratio_judgment(expert, i, j, rng() % 2 ? r : 1.0 / r));
    }
}

}  // namespace fixture

#endif  // SPANAGG_TESTS_FIXTURES_HPP
