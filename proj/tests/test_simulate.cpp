#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "spanagg/simulate.hpp"

using namespace spanagg;

TEST(Simulate, ZeroNoiseRecoversTruthWithoutRevisions) {
  SimulationSpec spec;
  spec.jitter = 0.0;
  spec.runs = 10;
  const auto s = simulate(spec);
  EXPECT_EQ(s.converged, 10u);
  for (const auto& r : s.runs) {
    EXPECT_EQ(r.trace.revisions(), 0u);
    EXPECT_LT(r.linf_error, 1e-12);
  }
}

TEST(Simulate, GivenTruthIsNormalized) {
  SimulationSpec spec;
  spec.jitter = 0.0;
  spec.truth = std::vector<double>{4, 3, 2, 1};
  const auto s = simulate(spec);
  EXPECT_NEAR(s.runs[0].truth[0], 0.4, 1e-15);
  EXPECT_LT(s.runs[0].linf_error, 1e-12);
}

TEST(Simulate, DeterministicUnderSeed) {
  SimulationSpec spec;
  spec.runs = 5;
  spec.seed = 42;
  const auto a = simulate(spec);
  const auto b = simulate(spec);
  for (std::size_t r = 0; r < 5; ++r) {
    EXPECT_EQ(a.runs[r].seed, 42u + r);
    EXPECT_EQ(a.runs[r].truth, b.runs[r].truth);
    EXPECT_EQ(a.runs[r].trace.revisions(), b.runs[r].trace.revisions());
    EXPECT_EQ(a.runs[r].linf_error, b.runs[r].linf_error);
  }
  // Run r of a longer batch equals a single run started at seed + r.
  SimulationSpec one = spec;
  one.runs = 1;
  one.seed = 44;
  EXPECT_EQ(simulate(one).runs[0].truth, a.runs[2].truth);
}

TEST(Simulate, JitterStaysWithinOneGrade) {
  SimulationSpec spec;
  spec.jitter = 1.0;
  const double step = std::log(9.0) / 8.0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    std::vector<double> truth;
    const Group g = synthetic_group(spec, seed, truth);
    EXPECT_EQ(g.judgments.size(), 3u * 6u);
    for (const auto& jd : g.judgments) {
      const double r = judgment_ratio(jd, UnifiedScale{9});
      EXPECT_LE(std::abs(std::log(r / (truth[jd.i] / truth[jd.j]))), step + 1e-12);
    }
  }
}

TEST(Simulate, ScaleHabitsUseWholeGrades) {
  SimulationSpec spec;
  spec.scale_habits = {5, 7, 9};
  std::vector<double> truth;
  const Group g = synthetic_group(spec, 3, truth);
  for (const auto& jd : g.judgments) {
    EXPECT_EQ(jd.scale.grades, spec.scale_habits[jd.expert]);
    if (jd.scale.grades != 9) {
      EXPECT_EQ(jd.grade, std::round(jd.grade));
    }
  }
  EXPECT_NO_THROW(evaluate(g));
}

TEST(Simulate, AlwaysDeclineNeverConvergesOnFailingGroups) {
  SimulationSpec spec;
  spec.policy = CompliancePolicy::decline;
  spec.runs = 20;
  spec.config.cap = 5;
  const auto s = simulate(spec);
  for (const auto& r : s.runs) {
    const bool passing_at_start = r.trace.rounds.front().min_index > spec.config.threshold;
    EXPECT_EQ(r.converged(), passing_at_start);
    if (!passing_at_start) {
      EXPECT_NE(r.trace.status, TerminalStatus::converged);
    }
  }
}

TEST(Simulate, CompliantExpertsMostlyConverge) {
  SimulationSpec spec;
  spec.runs = 30;
  const auto s = simulate(spec);
  EXPECT_GE(s.converged_fraction, 0.9);
  EXPECT_LE(s.max_rounds, spec.config.cap);
}

TEST(Simulate, ValidatesRanges) {
  SimulationSpec spec;
  spec.n = 1;
  EXPECT_THROW(simulate(spec), Error);
  spec = SimulationSpec{};
  spec.jitter = -1;
  EXPECT_THROW(simulate(spec), Error);
  spec = SimulationSpec{};
  spec.scale_habits = {4, 9, 9};
  EXPECT_THROW(simulate(spec), Error);
  spec = SimulationSpec{};
  spec.truth = std::vector<double>{1, 1, 1, 20};
  EXPECT_THROW(simulate(spec), Error);
  spec = SimulationSpec{};
  spec.compromise_fraction = 0.0;
  EXPECT_THROW(simulate(spec), Error);
}

TEST(Simulate, UnitUniformUsesTop53Bits) {
  std::mt19937_64 a(9), b(9);
  for (int t = 0; t < 1000; ++t) {
    const double u = detail::unit_uniform(a);
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_EQ(u, std::ldexp(static_cast<double>(b() >> 11), -53));
  }
}
