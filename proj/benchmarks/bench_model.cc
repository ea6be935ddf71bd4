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

#include <benchmark/benchmark.h>

#include "occlunet/data.hpp"
#include "occlunet/model.hpp"
#include "occlunet/pipeline.hpp"

namespace occlunet {
namespace {

ModelConfig toy(ModelVariant v, std::size_t size) {
  ModelConfig c;
  c.variant = v;
  c.channels = 16;
  c.input_size = size;
  return c;
}

// One 3-frame window through backbone, neck, temporal module and heads.
void BM_WindowForward(benchmark::State& state) {
  const auto size = static_cast<std::size_t>(state.range(0));
  const auto variant = static_cast<ModelVariant>(state.range(1));
  OccluNetModel<float> model(toy(variant, size));
  model.init(7);
  Tensor<float> frames({3, size, size}, 0.5f);
  std::vector<Tensor<float>> inputs;
  for (std::size_t t = 0; t < 3; ++t) inputs.push_back(frame_to_input<float>(frames, t));
  std::vector<const Tensor<float>*> window;
  const std::size_t slots = model.config().temporal() ? 3 : 1;
  for (std::size_t t = 0; t < slots; ++t) window.push_back(&inputs[t]);
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(window, nullptr));
}
BENCHMARK(BM_WindowForward)
    ->Args({128, static_cast<int>(ModelVariant::kOccluNet1)})
    ->Args({128, static_cast<int>(ModelVariant::kOccluNet2)})
    ->Args({128, static_cast<int>(ModelVariant::kMinipBaseline)})
    ->Unit(benchmark::kMillisecond);

void BM_InferSequence(benchmark::State& state) {
  OccluNetModel<float> model(toy(ModelVariant::kOccluNet1, 128));
  model.init(7);
  Tensor<float> frames({8, 128, 128}, 0.5f);
  const PostprocessConfig post;
  for (auto _ : state) benchmark::DoNotOptimize(infer_sequence(model, frames, post));
}
BENCHMARK(BM_InferSequence)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace occlunet

BENCHMARK_MAIN();
