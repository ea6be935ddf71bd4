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

#include "occlunet/trajectory.hpp"
#include "trajectory_oracle.hpp"

namespace occlunet {
namespace {

Detection at(int frame, double cx, double cy, double conf, int cls = 0) {
  Detection d;
  d.frame_index = frame;
  d.cx = cx;
  d.cy = cy;
  d.w = d.h = 25;
  d.confidence = conf;
  d.class_id = cls;
  return d;
}

Trajectory of(std::vector<double> confs, int start = 0) {
  Trajectory t;
  for (std::size_t i = 0; i < confs.size(); ++i) t.detections.push_back(at(start + int(i), 0, 0, confs[i]));
  t.score = score(t);
  return t;
}

TEST(Link, WithinRadiusJoins) {
  const auto t = link({{at(0, 100, 100, 0.5)}, {at(1, 110, 110, 0.5)}}, {});
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].duration(), 2u);
}

TEST(Link, BeyondRadiusSplits) {
  const auto t = link({{at(0, 100, 100, 0.5)}, {at(1, 120, 100, 0.5)}}, {});
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[0].duration(), 1u);
  EXPECT_EQ(t[1].duration(), 1u);
}

TEST(Link, RadiusIsInclusive) {
  EXPECT_EQ(link({{at(0, 100, 100, 0.5)}, {at(1, 109, 112, 0.5)}}, {}).size(), 1u);  // distance 15
}

TEST(Link, EmptyInput) {
  EXPECT_TRUE(link({}, {}).empty());
  EXPECT_TRUE(link({{}, {}}, {}).empty());
}

TEST(Link, ClassesNeverMix) {
  const auto t = link({{at(0, 100, 100, 0.5, 0)}, {at(1, 100, 100, 0.5, 1)}}, {});
  EXPECT_EQ(t.size(), 2u);
}

TEST(Link, NearestWinsThenHigherConfidence) {
  auto t = link({{at(0, 100, 100, 0.5)}, {at(1, 110, 100, 0.9), at(1, 104, 100, 0.1)}}, {});
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[0].detections[1].cx, 104);
  t = link({{at(0, 100, 100, 0.5)}, {at(1, 105, 100, 0.2), at(1, 95, 100, 0.7)}}, {});
  EXPECT_EQ(t[0].detections[1].confidence, 0.7);
}

TEST(Link, GapClosesTrajectory) {
  const std::vector<std::vector<Detection>> frames{{at(0, 100, 100, 0.5)}, {}, {at(2, 100, 100, 0.5)}};
  EXPECT_EQ(link(frames, {}).size(), 2u);
  LinkConfig gap;
  gap.max_gap = 1;
  EXPECT_EQ(link(frames, gap).size(), 1u);
}

TEST(Link, RejectsMisfiledFrame) {
  EXPECT_THROW(link({{at(1, 0, 0, 0.5)}}, {}), std::invalid_argument);
}

TEST(Link, InvalidConfig) {
  LinkConfig c;
  c.radius_px = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.max_gap = -1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Score, Examples) {
  EXPECT_DOUBLE_EQ(of({0.7}).score, 0.7);
  EXPECT_NEAR(of({0.5, 0.6, 0.7}).score, 5.4, 1e-12);
  EXPECT_GT(of({0.3, 0.3, 0.3}).score, of({0.9}).score);
  EXPECT_THROW(score(Trajectory{}), std::invalid_argument);
}

TEST(SelectBest, Examples) {
  EXPECT_FALSE(select_best({}).has_value());
  const auto a = of({0.5, 0.6, 0.7}), b = of({0.9});
  EXPECT_EQ(select_best({b, a})->score, a.score);
  auto long_one = of({0.3, 0.3, 0.3});
  auto short_one = of({0.9});
  long_one.score = short_one.score = 2.0;
  EXPECT_EQ(select_best({short_one, long_one})->duration(), 3u);
  const auto early = of({0.4}, 0), late = of({0.4}, 2);
  EXPECT_EQ(select_best({late, early})->start_frame(), 0);
}

TEST(Trajectory, RepresentativeCenterIsWeighted) {
  Trajectory t;
  t.detections = {at(0, 100, 100, 0.25), at(1, 110, 120, 0.75)};
  const auto [x, y] = t.representative_center();
  EXPECT_DOUBLE_EQ(x, 107.5);
  EXPECT_DOUBLE_EQ(y, 115);
}

TEST(Link, OutputInvariants) {
  for (std::uint64_t seed = 1; seed <= 300; ++seed) {
    const auto inst = testing::random_instance(seed);
    LinkConfig cfg;
    cfg.radius_px = inst.radius;
    cfg.max_gap = inst.max_gap;
    const auto trajs = link(inst.frames, cfg);
    const auto best = select_best(trajs);
    for (const auto& t : trajs) {
      for (std::size_t i = 1; i < t.detections.size(); ++i) {
        EXPECT_LT(t.detections[i - 1].frame_index, t.detections[i].frame_index);
        EXPECT_LE(center_distance(t.detections[i - 1], t.detections[i]), inst.radius);
        EXPECT_EQ(t.detections[i].class_id, t.class_id);
      }
      EXPECT_GE(best->score, t.score);
    }
  }
}

TEST(Link, ConfidenceScalingKeepsWinner) {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    auto inst = testing::random_instance(seed);
    LinkConfig cfg;
    cfg.radius_px = inst.radius;
    cfg.max_gap = inst.max_gap;
    const auto base = select_best(link(inst.frames, cfg));
    for (auto& f : inst.frames)
      for (auto& d : f) d.confidence *= 0.5;
    const auto scaled = select_best(link(inst.frames, cfg));
    ASSERT_EQ(base.has_value(), scaled.has_value());
    if (!base) continue;
    EXPECT_DOUBLE_EQ(scaled->score, base->score * 0.5);
    EXPECT_EQ(scaled->start_frame(), base->start_frame());
    EXPECT_EQ(scaled->duration(), base->duration());
  }
}

TEST(Link, MatchesExhaustiveEnumerator) {
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) EXPECT_TRUE(testing::matches_oracle(seed)) << "seed " << seed;
}

}  // namespace
}  // namespace occlunet
