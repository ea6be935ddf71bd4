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

#include <unistd.h>

#include "occlunet/model.hpp"
#include "occlunet/pipeline.hpp"
#include "occlunet/serialize.hpp"

namespace occlunet {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("occlunet_model_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

ModelConfig toy_config(ModelVariant v) {
  ModelConfig c;
  c.variant = v;
  c.channels = 4;
  c.heads = 2;
  c.input_size = 64;
  return c;
}

Tensor<float> random_frames(std::size_t t, std::size_t size, std::uint64_t seed) {
  Tensor<float> f({t, size, size});
  Rng rng(seed);
  fill_uniform(f, 0.5, rng);
  for (auto& v : f.values()) v += 0.5f;
  return f;
}

TEST(ModelConfig, Validation) {
  auto c = toy_config(ModelVariant::kOccluNet1);
  EXPECT_NO_THROW(c.validate());
  c.heads = 3;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = toy_config(ModelVariant::kOccluNet1);
  c.window = 2;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = toy_config(ModelVariant::kOccluNet1);
  c.input_size = 100;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(ModelConfig, VariantNames) {
  for (auto v : {ModelVariant::kOccluNet1, ModelVariant::kOccluNet2, ModelVariant::kMinipBaseline})
    EXPECT_EQ(variant_from_string(to_string(v)), v);
  EXPECT_THROW(variant_from_string("yolo"), std::invalid_argument);
}

TEST(Model, ParametersAreNamespaced) {
  OccluNetModel<float> m(toy_config(ModelVariant::kOccluNet2));
  m.init(1);
  std::set<std::string> names;
  m.visit([&](const std::string& n, Param<float>&) { EXPECT_TRUE(names.insert(n).second) << n; });
  EXPECT_TRUE(std::any_of(names.begin(), names.end(), [](auto& n) { return n.starts_with("temporal.p5.block0"); }));
  EXPECT_TRUE(std::any_of(names.begin(), names.end(), [](auto& n) { return n.starts_with("head.p3"); }));
  OccluNetModel<float> base(toy_config(ModelVariant::kMinipBaseline));
  base.init(1);
  EXPECT_LT(base.num_parameters(), m.num_parameters());
}

TEST(Model, SameSeedSameInit) {
  OccluNetModel<float> a(toy_config(ModelVariant::kOccluNet1)), b(toy_config(ModelVariant::kOccluNet1));
  a.init(9);
  b.init(9);
  std::vector<Tensor<float>> va;
  a.visit([&](const std::string&, Param<float>& p) { va.push_back(p.value); });
  std::size_t i = 0;
  b.visit([&](const std::string&, Param<float>& p) { EXPECT_EQ(p.value, va[i++]); });
}

TEST(Checkpoint, RoundTripReproducesOutputs) {
  const auto dir = scratch("roundtrip");
  for (auto v : {ModelVariant::kOccluNet1, ModelVariant::kOccluNet2, ModelVariant::kMinipBaseline}) {
    OccluNetModel<float> m(toy_config(v));
    m.init(3);
    save_checkpoint(dir, m);
    const auto back = load_checkpoint(dir);
    EXPECT_EQ(back.config(), m.config());
    const auto frames = random_frames(4, 64, 4);
    PostprocessConfig post;
    post.decode_floor = 0;
    const auto a = infer_sequence(m, frames, post), b = infer_sequence(back, frames, post);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t t = 0; t < a.size(); ++t) EXPECT_EQ(a[t], b[t]);
    fs::remove_all(dir);
  }
}

TEST(Checkpoint, CorruptionIsDetected) {
  const auto dir = scratch("corrupt");
  OccluNetModel<float> m(toy_config(ModelVariant::kOccluNet1));
  m.init(3);
  save_checkpoint(dir, m);
  fs::resize_file(dir / "tensors.bin", 100);
  EXPECT_THROW(load_checkpoint(dir), FormatError);
  fs::remove_all(dir);
  EXPECT_THROW(load_checkpoint(dir), IoError);
}

TEST(Checkpoint, CopyToDoublePrecision) {
  OccluNetModel<float> m(toy_config(ModelVariant::kOccluNet1));
  m.init(6);
  OccluNetModel<double> d(m.config());
  copy_parameters(m, d);
  std::vector<Tensor<float>> vf;
  m.visit([&](const std::string&, Param<float>& p) { vf.push_back(p.value); });
  std::size_t i = 0;
  d.visit([&](const std::string&, Param<double>& p) { EXPECT_EQ(p.value.cast<float>(), vf[i++]); });
}

TEST(Inference, TemporalVariantsEmitPerFrame) {
  PostprocessConfig post;
  for (auto v : {ModelVariant::kOccluNet1, ModelVariant::kOccluNet2}) {
    OccluNetModel<float> m(toy_config(v));
    m.init(7);
    const auto dets = infer_sequence(m, random_frames(5, 64, 8), post);
    ASSERT_EQ(dets.size(), 5u);
    for (std::size_t t = 0; t < 5; ++t)
      for (const auto& d : dets[t]) EXPECT_EQ(d.frame_index, int(t));
  }
  OccluNetModel<float> base(toy_config(ModelVariant::kMinipBaseline));
  base.init(7);
  EXPECT_EQ(infer_sequence(base, random_frames(5, 64, 8), post).size(), 1u);
}

TEST(Inference, OneFrameSequenceMatchesSingleFramePath) {
  PostprocessConfig post;
  post.decode_floor = 0.005;
  OccluNetModel<float> m(toy_config(ModelVariant::kOccluNet1));
  m.init(8);
  const auto frames = random_frames(1, 64, 9);
  const auto seq = infer_sequence(m, frames, post);
  const auto single = infer_single(m, frame_to_input<float>(frames, 0), post, 0);
  ASSERT_EQ(seq.size(), 1u);
  EXPECT_EQ(seq[0].size(), single.size());
  EXPECT_EQ(seq[0], single);
}

TEST(Inference, RejectsWrongInputSize) {
  OccluNetModel<float> m(toy_config(ModelVariant::kOccluNet1));
  m.init(1);
  EXPECT_THROW(infer_sequence(m, random_frames(2, 32, 1), {}), std::invalid_argument);
}

TEST(Pipeline, ParallelForCoversEveryIndexAndRethrows) {
  std::vector<int> hit(50, 0);
  parallel_for(50, 4, [&](std::size_t i) { hit[i] += 1; });
  for (int h : hit) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) { if (i == 7) throw std::runtime_error("x"); }),
               std::runtime_error);
}

TEST(Pipeline, EvaluationIndependentOfJobs) {
  OccluNetModel<float> m(toy_config(ModelVariant::kOccluNet1));
  m.init(2);
  std::vector<PreparedSequence> seqs;
  for (int i = 0; i < 5; ++i) {
    PreparedSequence p;
    p.id = "s" + std::to_string(i);
    p.frames = random_frames(3, 64, 20 + i);
    if (i % 2) p.annotation = Annotation{"M1", 30, 30, 25, 0, 2};
    seqs.push_back(p);
  }
  const auto a = evaluate_model(m, seqs, ClassMap::single_class(), {}, {}, 1);
  const auto b = evaluate_model(m, seqs, ClassMap::single_class(), {}, {}, 3);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].outcome.result, b[i].outcome.result);
    EXPECT_EQ(a[i].outcome.sequence_id, seqs[i].id);
  }
}

}  // namespace
}  // namespace occlunet
