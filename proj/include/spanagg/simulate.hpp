#ifndef SPANAGG_SIMULATE_HPP
#define SPANAGG_SIMULATE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "spanagg/error.hpp"
#include "spanagg/feedback.hpp"

namespace spanagg {

enum class CompliancePolicy { accept, decline, compromise };

/// Synthetic experts: each one perturbs the ground-truth ratios w_i/w_j by a
/// multiplicative factor of at most `jitter` grades, where one grade is the
/// mean log step ln(N)/(N-1) of the unified N-grade scale.
struct SimulationSpec {
  std::size_t n = 4;
  std::size_t m = 3;
  std::optional<std::vector<double>> truth;  // random when absent
  double jitter = 1.0;
  std::vector<int> scale_habits;  // grades used by each expert; unified when empty
  CompliancePolicy policy = CompliancePolicy::accept;
  double compromise_fraction = 0.5;
  std::uint64_t seed = 1;
  std::size_t runs = 1;
  EngineConfig config{};
};

struct SimulationRun {
  std::uint64_t seed = 0;
  std::vector<double> truth;
  ConvergenceTrace trace;
  double linf_error = 0.0;  // final aggregate vs truth

  bool converged() const { return trace.status == TerminalStatus::converged; }
};

struct SimulationSummary {
  std::vector<SimulationRun> runs;
  std::size_t converged = 0;
  double converged_fraction = 0.0;
  double mean_rounds = 0.0;  // over converged runs
  std::size_t max_rounds = 0;
  double max_error = 0.0;    // over converged runs
};

namespace detail {

// Uniform double in [0, 1) from the top 53 bits, identical on every platform.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

inline void validate(const SimulationSpec& spec) {
  const int top = spec.config.unified().grades;
  if (spec.n < 2 || spec.n > 9) throw Error(ErrorKind::domain, "simulation needs 2..9 alternatives");
  if (spec.m < 1 || spec.m > 20) throw Error(ErrorKind::domain, "simulation needs 1..20 experts");
  if (!(spec.jitter >= 0.0) || spec.jitter > top - 1) {
    throw Error(ErrorKind::domain, "jitter must lie in [0, " + std::to_string(top - 1) + "] grades");
  }
  if (spec.runs < 1) throw Error(ErrorKind::domain, "at least one run is required");
  if (!(spec.compromise_fraction > 0.0) || spec.compromise_fraction > 1.0) {
    throw Error(ErrorKind::domain, "compromise fraction must lie in (0, 1]");
  }
  if (!spec.scale_habits.empty() && spec.scale_habits.size() != spec.m) {
    throw Error(ErrorKind::domain, "one scale habit per expert is required");
  }
  for (int g : spec.scale_habits) {
    if (!spec.config.scales.contains(Scale{g})) {
      throw Error(ErrorKind::domain, "scale habit " + std::to_string(g) + " is not registered");
    }
  }
  if (spec.truth) {
    if (spec.truth->size() != spec.n) throw Error(ErrorKind::domain, "truth vector has wrong length");
    const auto [lo, hi] = std::minmax_element(spec.truth->begin(), spec.truth->end());
    if (!(*lo > 0.0)) throw Error(ErrorKind::domain, "truth vector must be positive");
    if (*hi / *lo > top) {
      throw Error(ErrorKind::domain, "truth ratios exceed the unified scale");
    }
  }
}

/// Builds one synthetic group from `seed`; returns the normalized truth used.
inline Group synthetic_group(const SimulationSpec& spec, std::uint64_t seed, std::vector<double>& truth) {
  std::mt19937_64 rng(seed);
  const int top = spec.config.unified().grades;
  if (spec.truth) {
    truth = *spec.truth;
  } else {
    truth.resize(spec.n);
    for (double& x : truth) x = 1.0 + 3.0 * detail::unit_uniform(rng);
  }
  double total = 0.0;
  for (double x : truth) total += x;
  for (double& x : truth) x /= total;

  const double grade_step = std::log(static_cast<double>(top)) / (top - 1);
  Group g;
  g.n = spec.n;
  g.competences.assign(spec.m, 1.0 / static_cast<double>(spec.m));
  for (std::size_t k = 0; k < spec.m; ++k) {
    const int habit = spec.scale_habits.empty() ? top : spec.scale_habits[k];
    for (std::size_t i = 0; i < spec.n; ++i) {
      for (std::size_t j = i + 1; j < spec.n; ++j) {
        const double u = 2.0 * detail::unit_uniform(rng) - 1.0;
        double r = truth[i] / truth[j] * std::exp(u * spec.jitter * grade_step);
        r = std::clamp(r, 1.0 / top, static_cast<double>(top));
        Judgment jd;
        jd.expert = k;
        jd.i = i;
        jd.j = j;
        jd.scale = Scale{habit};
        jd.direction = r >= 1.0 ? Dominance::row : Dominance::column;
        double grade = r >= 1.0 ? r : 1.0 / r;
        if (habit != top) {
          grade = std::round((grade - 1.0) * (habit - 1) / (top - 1) + 1.0);
        }
        jd.grade = grade;
        g.judgments.push_back(jd);
      }
    }
  }
  return g;
}

inline Responder responder_for(const SimulationSpec& spec) {
  switch (spec.policy) {
    case CompliancePolicy::accept: return responders::accept_all();
    case CompliancePolicy::decline: return responders::decline_all();
    case CompliancePolicy::compromise: return responders::compromise(spec.compromise_fraction);
  }
  return responders::accept_all();
}

/// Runs `spec.runs` independent facilitations with seeds seed, seed+1, ...
inline SimulationSummary simulate(const SimulationSpec& spec) {
  validate(spec);
  SimulationSummary summary;
  const Responder responder = responder_for(spec);
  double rounds = 0.0;
  for (std::size_t r = 0; r < spec.runs; ++r) {
    SimulationRun run;
    run.seed = spec.seed + r;
    FacilitationState state;
    state.group = synthetic_group(spec, run.seed, run.truth);
    state.config = spec.config;
    run.trace = run_loop(std::move(state), responder, spec.config.cap);
    if (run.trace.final_w) {
      for (std::size_t i = 0; i < spec.n; ++i) {
        run.linf_error = std::max(run.linf_error, std::abs((*run.trace.final_w)[i] - run.truth[i]));
      }
    }
    if (run.converged()) {
      ++summary.converged;
      rounds += static_cast<double>(run.trace.revisions());
      summary.max_rounds = std::max(summary.max_rounds, run.trace.revisions());
      summary.max_error = std::max(summary.max_error, run.linf_error);
    }
    summary.runs.push_back(std::move(run));
  }
  summary.converged_fraction = static_cast<double>(summary.converged) / static_cast<double>(spec.runs);
  summary.mean_rounds = summary.converged ? rounds / static_cast<double>(summary.converged) : 0.0;
  return summary;
}

}  // namespace spanagg

#endif  // SPANAGG_SIMULATE_HPP
