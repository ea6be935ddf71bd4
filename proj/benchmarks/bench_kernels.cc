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

#include <random>

#include "occlunet/layers.hpp"
#include "occlunet/ops.hpp"
#include "occlunet/temporal.hpp"

namespace occlunet {
namespace {

template <typename T>
Tensor<T> random_tensor(Shape shape, std::uint64_t seed) {
  Tensor<T> t(std::move(shape));
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& v : t.values()) v = static_cast<T>(u(rng));
  return t;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_tensor<float>({n, n}, 1);
  const auto b = random_tensor<float>({n, n}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(ops::matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->RangeMultiplier(2)->Range(32, 256);

// args: channels, spatial extent
void BM_Conv3x3(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto hw = static_cast<std::size_t>(state.range(1));
  const auto x = random_tensor<float>({c, hw, hw}, 3);
  const auto k = random_tensor<float>({c, c, 3, 3}, 4);
  for (auto _ : state) benchmark::DoNotOptimize(ops::conv2d(x, k, 1, 1));
}
BENCHMARK(BM_Conv3x3)->Args({16, 64})->Args({32, 32})->Args({64, 16});

void BM_DividedBlock(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto hw = static_cast<std::size_t>(state.range(1));
  AttentionBlock<float> block(BlockKind::kDivided, c, 4);
  Rng rng(5);
  block.init(rng);
  const auto x = random_tensor<float>({3, c, hw, hw}, 6);
  for (auto _ : state) benchmark::DoNotOptimize(block.forward(x, nullptr));
}
BENCHMARK(BM_DividedBlock)->Args({16, 8})->Args({16, 16})->Args({32, 8});

}  // namespace
}  // namespace occlunet
