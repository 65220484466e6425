// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "rdfair/fairness_metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rdfair/errors.hpp"
#include "test_util.hpp"

namespace rdfair {
namespace {

// Appends `count` samples of (true, pred, group).
void add(PredictionLog& log, std::size_t y, std::size_t pred, std::size_t g, int count) {
  for (int i = 0; i < count; ++i) {
    log.true_y.push_back(y);
    log.pred_y.push_back(pred);
    log.g.push_back(g);
  }
}

TEST(TprGap, PerfectIsZero) {
  PredictionLog log{{}, {}, {}, 2, 2};
  add(log, 0, 0, 0, 3);
  add(log, 0, 0, 1, 2);
  add(log, 1, 1, 0, 2);
  add(log, 1, 1, 1, 2);
  EXPECT_EQ(tpr_gap(log, 0, 0, 1).gap, 0.0);
  EXPECT_EQ(gap_rms(log).rms, 0.0);
}

TEST(TprGap, DirectCount) {
  PredictionLog log{{}, {}, {}, 2, 2};
  add(log, 0, 0, 0, 3);
  add(log, 0, 1, 0, 1);
  add(log, 0, 0, 1, 1);
  add(log, 0, 1, 1, 1);
  const TprGap gap = tpr_gap(log, 0, 0, 1);
  EXPECT_TRUE(gap.defined);
  EXPECT_NEAR(gap.gap, 0.25, 1e-15);
  EXPECT_NEAR(tpr_gap(log, 0, 1, 0).gap, -0.25, 1e-15);
}

TEST(TprGap, UndefinedIsFlagged) {
  PredictionLog log{{}, {}, {}, 3, 2};
  add(log, 0, 0, 0, 2);
  add(log, 0, 1, 1, 2);
  add(log, 1, 1, 0, 1);
  const TprGap gap = tpr_gap(log, 1, 0, 1);
  EXPECT_FALSE(gap.defined);
  EXPECT_EQ(gap.gap, 0.0);
  const GapSummary s = gap_rms(log);
  EXPECT_EQ(s.undefined_count, 1u);  // class 1 lacks group 1; class 2 never occurs
  // Class 0: group 0 2/2, group 1 0/2.
  EXPECT_NEAR(s.rms, std::sqrt(1.0 / 2.0), 1e-12);
}

// Class 0: group 0 gets 10/10, group 1 7/10 (gap 0.3). Class 1: group 0
// 8/10, group 1 4/10 (gap 0.4).
PredictionLog two_gap_log() {
  PredictionLog log{{}, {}, {}, 2, 2};
  add(log, 0, 0, 0, 10);
  add(log, 0, 0, 1, 7);
  add(log, 0, 1, 1, 3);
  add(log, 1, 1, 0, 8);
  add(log, 1, 0, 0, 2);
  add(log, 1, 1, 1, 4);
  add(log, 1, 0, 1, 6);
  return log;
}

TEST(GapRms, TwoClasses) {
  const GapSummary s = gap_rms(two_gap_log());
  EXPECT_NEAR(s.rms, std::sqrt((0.09 + 0.16) / 2.0), 1e-12);
  EXPECT_NEAR(s.rms, 0.35355, 1e-5);
  double acc = 0.0;
  for (double g : s.per_class) acc += g * g;
  EXPECT_NEAR(std::sqrt(acc / 2.0), s.rms, 1e-12);
}

TEST(GapRms, SingleClass) {
  // Class 1 exists in the universe but never occurs, so only class 0 counts.
  const PredictionLog log{{0, 0, 0, 0}, {0, 0, 0, 1}, {0, 0, 1, 1}, 2, 2};
  const GapSummary s = gap_rms(log);
  EXPECT_NEAR(s.rms, 0.5, 1e-15);
  EXPECT_EQ(s.undefined_count, 0u);
}

TEST(DemographicParity, Extremes) {
  PredictionLog same{{0, 1, 0, 1}, {0, 1, 0, 1}, {0, 0, 1, 1}, 2, 2};
  EXPECT_EQ(demographic_parity(same), 0.0);
  PredictionLog split{{0, 1, 0, 1}, {0, 0, 1, 1}, {0, 0, 1, 1}, 2, 2};
  EXPECT_EQ(demographic_parity(split), 2.0);
}

TEST(DemographicParity, Rates) {
  PredictionLog log{{}, {}, {}, 2, 2};
  add(log, 0, 0, 0, 7);
  add(log, 0, 1, 0, 3);
  add(log, 0, 0, 1, 5);
  add(log, 0, 1, 1, 5);
  EXPECT_NEAR(demographic_parity(log), 0.4, 1e-12);
}

TEST(DemographicParity, MissingGroup) {
  PredictionLog log{{0, 1}, {0, 1}, {0, 0}, 2, 2};
  try {
    demographic_parity(log);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingGroup);
  }
}

TEST(DemographicParity, ClassPermutationInvariant) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> cls(0, 3), grp(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    PredictionLog log{{}, {}, {}, 4, 2};
    for (int i = 0; i < 40; ++i) {
      log.true_y.push_back(cls(rng));
      log.pred_y.push_back(cls(rng));
      log.g.push_back(i % 2 ? 1 : grp(rng));
    }
    std::vector<std::size_t> perm{0, 1, 2, 3};
    std::shuffle(perm.begin(), perm.end(), rng);
    PredictionLog moved = log;
    for (auto& y : moved.true_y) y = perm[y];
    for (auto& y : moved.pred_y) y = perm[y];
    EXPECT_NEAR(demographic_parity(moved), demographic_parity(log), 1e-12);
    EXPECT_NEAR(gap_rms(moved).rms, gap_rms(log).rms, 1e-12);
    EXPECT_EQ(demographic_parity(log), demographic_parity(log));
  }
}

TEST(LastAverage, Basics) {
  const std::vector<double> one{0.7};
  EXPECT_EQ(last_and_average(one).last, 0.7);
  EXPECT_EQ(last_and_average(one).average, 0.7);
  const std::vector<double> two{80.0, 90.0};
  EXPECT_EQ(last_and_average(two).last, 90.0);
  EXPECT_EQ(last_and_average(two).average, 85.0);
  EXPECT_THROW(last_and_average(std::vector<double>{}), Error);
}

TEST(MetricReport, JsonRoundTripIsExact) {
  MetricReport m;
  m.accuracy = 0.1 + 0.2;
  m.dp = 1.0 / 3.0;
  m.gap_rms = std::sqrt(0.125);
  m.leakage = 0.987654321;
  m.leakage_baseline = 0.5;
  m.per_class_gaps = {0.3, -0.4, 1e-17};
  m.undefined_count = 2;
  const MetricReport back = MetricReport::from_json(nlohmann::json::parse(m.to_json().dump()));
  EXPECT_EQ(back.accuracy, m.accuracy);
  EXPECT_EQ(back.dp, m.dp);
  EXPECT_EQ(back.gap_rms, m.gap_rms);
  EXPECT_EQ(back.per_class_gaps, m.per_class_gaps);
  EXPECT_EQ(back.undefined_count, m.undefined_count);
}

TEST(Leakage, ConstantRepresentationsAtBaseline) {
  const std::size_t n = 400;
  std::vector<std::size_t> g;
  for (std::size_t i = 0; i < n; ++i) g.push_back(i % 5 == 0 ? 1 : 0);
  const Matrix reps(4, n, 0.3);
  const LeakageResult r = probe_leakage(reps, Partition(g, 2), 1);
  EXPECT_NEAR(r.accuracy, r.majority_baseline, 1e-12);
}

TEST(Leakage, OneHotIsSeparable) {
  const std::size_t n = 300;
  Matrix reps(2, n);
  std::vector<std::size_t> g;
  for (std::size_t i = 0; i < n; ++i) {
    g.push_back(i % 2);
    reps(i % 2, i) = 1.0;
  }
  EXPECT_GE(probe_leakage(reps, Partition(g, 2), 2).accuracy, 0.99);
}

TEST(Leakage, ShuffledLabelsNearBaseline) {
  std::mt19937_64 rng(4);
  const std::size_t n = 1000;
  const Matrix reps = testing::random_matrix(4, n, rng);
  std::vector<std::size_t> g(n);
  std::bernoulli_distribution coin(0.5);
  for (auto& l : g) l = coin(rng);
  const LeakageResult r = probe_leakage(reps, Partition(g, 2), 3);
  const double sigma = std::sqrt(0.25 / 200.0);
  EXPECT_LT(std::abs(r.accuracy - r.majority_baseline), 3.0 * sigma + 0.02);
}

TEST(Leakage, SingleGroup) {
  try {
    probe_leakage(Matrix(2, 10, 1.0), Partition(std::vector<std::size_t>(10, 1), 2), 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSingleGroup);
  }
}

TEST(Probe, LearnsSeparableClasses) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0.0, 0.1);
  Matrix reps(3, 90);
  std::vector<std::size_t> y;
  for (std::size_t i = 0; i < 90; ++i) {
    const std::size_t c = 2 * (i % 3);  // sparse labels {0, 2, 4}
    y.push_back(c);
    for (std::size_t r = 0; r < 3; ++r) reps(r, i) = (r == i % 3 ? 1.0 : 0.0) + noise(rng);
  }
  const Probe probe(reps, y, {});
  EXPECT_GE(accuracy(y, probe.predict(reps)), 0.98);
}

TEST(GroupFairness, WorstPairOverGroups) {
  PredictionLog log = two_gap_log();
  log.num_groups = 3;
  add(log, 0, 0, 2, 10);
  add(log, 1, 1, 2, 10);
  const GroupFairness gf = group_fairness(log);
  // Group 2 is perfect, so the pair (1, 2) has gaps 0.3 and 0.6.
  EXPECT_NEAR(gf.gaps.rms, std::sqrt((0.09 + 0.36) / 2.0), 1e-12);
}

}  // namespace
}  // namespace rdfair
