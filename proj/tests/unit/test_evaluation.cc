// Copyright 2026 The occlunet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mcnemar_oracle.hpp"
#include "occlunet/evaluation.hpp"

namespace occlunet {
namespace {

Trajectory winner_at(double cx, double cy, int cls, double conf = 0.6) {
  Trajectory t;
  Detection d;
  d.cx = cx;
  d.cy = cy;
  d.w = d.h = 25;
  d.confidence = conf;
  d.class_id = cls;
  t.detections = {d};
  t.class_id = cls;
  t.score = conf;
  return t;
}

OutcomeKind judge(std::optional<Trajectory> w, std::optional<GroundTruth> gt) {
  return judge_sequence("s", w, gt, {}).result;
}

TEST(Judge, BoundaryIsInclusive) {
  EXPECT_EQ(judge(winner_at(115, 120, 0), GroundTruth{0, 100, 100}), OutcomeKind::kTP);
  EXPECT_EQ(judge(winner_at(100, 125.000001, 0), GroundTruth{0, 100, 100}), OutcomeKind::kFPAndFN);
}

TEST(Judge, WrongClassIsBothErrors) {
  EXPECT_EQ(judge(winner_at(103, 104, 3), GroundTruth{2, 100, 100}), OutcomeKind::kFPAndFN);
}

TEST(Judge, NegativesAndMisses) {
  EXPECT_EQ(judge(std::nullopt, std::nullopt), OutcomeKind::kTN);
  EXPECT_EQ(judge(winner_at(10, 10, 0), std::nullopt), OutcomeKind::kFP);
  EXPECT_EQ(judge(std::nullopt, GroundTruth{0, 1, 1}), OutcomeKind::kFN);
}

TEST(Judge, WinnerBelowFloorDoesNotCount) {
  EXPECT_EQ(judge(winner_at(10, 10, 0, 0.005), std::nullopt), OutcomeKind::kTN);
  EXPECT_EQ(judge(winner_at(100, 100, 0, 0.005), GroundTruth{0, 100, 100}), OutcomeKind::kFN);
}

TEST(Judge, OutcomeNamesRoundTrip) {
  for (auto k : {OutcomeKind::kTP, OutcomeKind::kFP, OutcomeKind::kFN, OutcomeKind::kFPAndFN, OutcomeKind::kTN})
    EXPECT_EQ(outcome_from_string(to_string(k)), k);
  EXPECT_THROW(outcome_from_string("maybe"), std::invalid_argument);
}

std::vector<SequenceOutcome> counts(long tp, long fpfn, long fn, long tn, long fp = 0) {
  std::vector<SequenceOutcome> v;
  auto add = [&](long n, OutcomeKind k, std::optional<int> gt, std::optional<int> pred) {
    for (long i = 0; i < n; ++i) v.push_back({"s" + std::to_string(v.size()), gt, pred, k});
  };
  add(tp, OutcomeKind::kTP, 0, 0);
  add(fpfn, OutcomeKind::kFPAndFN, 0, 0);
  add(fn, OutcomeKind::kFN, 0, std::nullopt);
  add(tn, OutcomeKind::kTN, std::nullopt, std::nullopt);
  add(fp, OutcomeKind::kFP, std::nullopt, 0);
  return v;
}

TEST(Metrics, ReconstructedTableRow) {
  const auto r = aggregate(counts(146, 18, 31, 19));
  EXPECT_EQ(r.all.tp, 146);
  EXPECT_EQ(r.all.fp, 18);
  EXPECT_EQ(r.all.fn, 49);
  EXPECT_EQ(r.all.instances, 195);
  EXPECT_EQ(r.all.samples, 214);
  EXPECT_NEAR(100 * r.all.precision(), 89.02, 0.005);
  EXPECT_NEAR(100 * r.all.recall(), 74.87, 0.005);
}

TEST(Metrics, Degenerate) {
  auto r = aggregate(counts(0, 0, 0, 7));
  EXPECT_EQ(r.all.precision(), 0.0);
  EXPECT_EQ(r.all.recall(), 0.0);
  r = aggregate(counts(1, 0, 0, 0));
  EXPECT_EQ(r.all.precision(), 1.0);
  EXPECT_EQ(r.all.recall(), 1.0);
}

TEST(Metrics, PerClassRecallCoversInstances) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> cls(0, 4), kind(0, 4);
  std::vector<SequenceOutcome> v;
  std::map<int, long> instances;
  for (int i = 0; i < 300; ++i) {
    const int gt = cls(rng), pred = cls(rng);
    switch (kind(rng)) {
      case 0: v.push_back({"a", gt, gt, OutcomeKind::kTP}); ++instances[gt]; break;
      case 1: v.push_back({"b", gt, pred, OutcomeKind::kFPAndFN}); ++instances[gt]; break;
      case 2: v.push_back({"c", gt, std::nullopt, OutcomeKind::kFN}); ++instances[gt]; break;
      case 3: v.push_back({"d", std::nullopt, pred, OutcomeKind::kFP}); break;
      default: v.push_back({"e", std::nullopt, std::nullopt, OutcomeKind::kTN});
    }
  }
  const auto r = aggregate(v);
  long fp = 0;
  for (const auto& [c, m] : r.per_class) {
    EXPECT_EQ(m.tp + m.fn, instances[c]);
    EXPECT_EQ(m.instances, instances[c]);
    fp += m.fp;
  }
  EXPECT_EQ(fp, r.all.fp);
}

TEST(Metrics, TableFormatting) {
  const auto text = format_report_table(aggregate(counts(146, 18, 31, 19)), {"occlusion"});
  EXPECT_NE(text.find("89.02"), std::string::npos);
  EXPECT_NE(text.find("74.87"), std::string::npos);
}

TEST(McNemar, Examples) {
  EXPECT_EQ(mcnemar_from_counts(5, 5).p_value, 1.0);
  EXPECT_EQ(mcnemar_from_counts(0, 0).p_value, 1.0);
  EXPECT_NEAR(mcnemar_from_counts(3, 9).p_value, 0.1460, 5e-5);
  EXPECT_NEAR(mcnemar_from_counts(0, 20).p_value, 2.0 * std::pow(0.5, 20), 1e-15);
}

TEST(McNemar, MatchesPascalOracle) {
  for (long b = 0; b <= 30; ++b)
    for (long c = 0; b + c <= 30; ++c)
      EXPECT_NEAR(mcnemar_from_counts(b, c).p_value, testing::pascal_mcnemar(b, c), 1e-10) << b << "," << c;
}

TEST(McNemar, SymmetricAndMonotone) {
  for (long n = 1; n <= 30; ++n) {
    double prev = 2.0;
    for (long b = n / 2 + n % 2; b <= n; ++b) {  // |b - c| grows with b
      const double p = mcnemar_from_counts(b, n - b).p_value;
      EXPECT_EQ(p, mcnemar_from_counts(n - b, b).p_value);
      EXPECT_LE(p, prev);
      prev = p;
    }
  }
}

TEST(McNemar, CountsDiscordantPairs) {
  const bool a[] = {true, true, false, false, true};
  const bool b[] = {true, false, true, false, false};
  const auto r = mcnemar(a, b);
  EXPECT_EQ(r.b, 2);
  EXPECT_EQ(r.c, 1);
  const bool c[] = {true};
  EXPECT_THROW(mcnemar(a, c), std::invalid_argument);
}

}  // namespace
}  // namespace occlunet
