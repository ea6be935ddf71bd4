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

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "occlunet/synth.hpp"

namespace occlunet {
namespace {

namespace fs = std::filesystem;

SynthConfig small(std::size_t n = 12) {
  SynthConfig c;
  c.n_train = n;
  c.n_val = 2;
  c.n_test = 2;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Synth, SameSeedSameSequences) {
  const auto a = synth_generate(small()), b = synth_generate(small());
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].id, b[i].id);
    EXPECT_EQ(a[i].frames, b[i].frames);
    EXPECT_EQ(a[i].annotation, b[i].annotation);
  }
  auto other = small();
  other.seed = 8;
  EXPECT_FALSE(synth_generate(other)[0].frames == a[0].frames);
}

TEST(Synth, SameSeedByteIdenticalTrees) {
  const auto base = fs::temp_directory_path() / ("occlunet_synth_" + std::to_string(::getpid()));
  fs::remove_all(base);
  save_dataset(base / "a", synth_generate(small(4)));
  save_dataset(base / "b", synth_generate(small(4)));
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(base / "a")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), base / "a");
    EXPECT_EQ(slurp(e.path()), slurp(base / "b" / rel)) << rel;
    ++files;
  }
  EXPECT_EQ(files, 9u);  // manifest + 8 sequences
  fs::remove_all(base);
}

TEST(Synth, IdsAndSplits) {
  const auto seqs = synth_generate(small(3));
  ASSERT_EQ(seqs.size(), 7u);
  EXPECT_EQ(seqs[0].id, "train-0000");
  EXPECT_EQ(seqs[3].id, "val-0000");
  EXPECT_EQ(seqs[6].id, "test-0001");
  EXPECT_EQ(seqs[6].split, "test");
  EXPECT_EQ(seqs[0].frames.shape(), (Shape{8, 128, 128}));
}

TEST(Synth, NoOcclusionsWhenProbabilityZero) {
  auto c = small(20);
  c.occlusion_prob = 0;
  for (const auto& s : synth_generate(c)) {
    EXPECT_FALSE(s.annotation.has_value());
    EXPECT_FALSE(s.ambiguous);
  }
}

TEST(Synth, AnnotationsFitTheImage) {
  auto c = small(60);
  std::size_t positives = 0, ambiguous = 0;
  for (const auto& s : synth_generate(c)) {
    if (!s.annotation) continue;
    ++positives;
    ambiguous += s.ambiguous;
    const auto& a = *s.annotation;
    EXPECT_EQ(a.box, 40);
    EXPECT_GE(a.cx - a.box / 2, 0);
    EXPECT_LE(a.cx + a.box / 2, 128);
    EXPECT_GE(a.cy - a.box / 2, 0);
    EXPECT_LE(a.cy + a.box / 2, 128);
    EXPECT_LE(a.frame_first, a.frame_last);
    EXPECT_EQ(a.frame_last, 7);
    EXPECT_NO_THROW(ClassMap::occlusion_types().index_of(a.class_name));
  }
  EXPECT_GT(positives, 40u);
  EXPECT_GT(ambiguous, 5u);
  EXPECT_LT(ambiguous, positives - 5);
}

TEST(Synth, DistalPixelsNeverDarken) {
  auto c = small(30);
  c.occlusion_prob = 1.0;
  const double bound = c.background - 3 * c.noise_sigma;
  std::size_t checked = 0;
  for (std::size_t i = 0; i < 30; ++i) {
    const auto s = synth_sequence(c, i);
    ASSERT_TRUE(s.seq.annotation.has_value());
    ASSERT_GE(s.geometry.occluded_segment, 0);
    const std::size_t plane = 128 * 128;
    for (auto px : s.geometry.distal)
      for (std::size_t t = 0; t < c.frames; ++t) {
        EXPECT_GE(s.seq.frames[t * plane + px], bound - 1e-6);
        ++checked;
      }
  }
  EXPECT_GT(checked, 1000u);
}

TEST(Synth, OccludedStumpStaysDarkInVisibleCases) {
  auto c = small();
  c.occlusion_prob = 1.0;
  c.ambiguous_fraction = 0.0;
  for (std::size_t i = 0; i < 10; ++i) {
    const auto s = synth_sequence(c, i);
    const auto& a = *s.seq.annotation;
    const auto x = static_cast<std::size_t>(s.geometry.occlusion_point.x);
    const auto y = static_cast<std::size_t>(s.geometry.occlusion_point.y);
    for (int t = a.frame_first; t < 8; ++t) EXPECT_LT(s.seq.frames.at(std::size_t(t), y, x), c.background - 0.15);
  }
}

TEST(Synth, RejectsBadConfig) {
  auto c = small();
  c.occlusion_prob = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = small();
  c.frames = 1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace occlunet
