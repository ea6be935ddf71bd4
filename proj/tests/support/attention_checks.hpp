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


#ifndef OCCLUNET_TESTS_ATTENTION_CHECKS_HPP_
#define OCCLUNET_TESTS_ATTENTION_CHECKS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "occlunet/layers.hpp"
#include "occlunet/temporal.hpp"

// Structural properties of the attention blocks, shared by the unit tests and
// the acceptance binary.
namespace occlunet::testing {

inline Tensor<double> random_window(std::size_t t, std::size_t c, std::size_t h, std::size_t w, Rng& rng) {
  Tensor<double> x({t, c, h, w});
  fill_uniform(x, 1.0, rng);
  return x;
}

inline AttentionBlock<double> random_block(BlockKind kind, std::size_t c, std::size_t heads, Rng& rng) {
  AttentionBlock<double> b(kind, c, heads);
  b.init(rng);
  // Non-trivial norm affine parameters so they take part in the checks.
  b.visit("", [&](const std::string&, Param<double>& p) { fill_uniform(p.value, 0.6, rng); });
  return b;
}

/// Temporal attention: a perturbation at one (h, w) changes no other location.
inline bool temporal_attention_is_spatially_local(std::uint64_t seed) {
  Rng rng(seed);
  const auto block = random_block(BlockKind::kTemporal, 6, 2, rng);
  const auto x = random_window(3, 6, 4, 5, rng);
  const auto y = block.forward(x, nullptr);
  auto xp = x;
  const std::size_t h1 = seed % 4, w1 = (seed / 4) % 5;
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t c = 0; c < 6; ++c) xp.at(t, c, h1, w1) += 0.75;
  const auto yp = block.forward(xp, nullptr);
  bool changed = false;
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t c = 0; c < 6; ++c)
      for (std::size_t h = 0; h < 4; ++h)
        for (std::size_t w = 0; w < 5; ++w) {
          const bool same = yp.at(t, c, h, w) == y.at(t, c, h, w);
          if (h == h1 && w == w1)
            changed = changed || !same;
          else if (!same)
            return false;
        }
  return changed;
}

/// Spatial attention: a perturbation in one frame leaves every other frame unchanged.
inline bool spatial_attention_is_temporally_local(std::uint64_t seed) {
  Rng rng(seed);
  const auto block = random_block(BlockKind::kSpatial, 6, 3, rng);
  const auto x = random_window(3, 6, 3, 4, rng);
  const auto y = block.forward(x, nullptr);
  auto xp = x;
  const std::size_t t1 = seed % 3;
  xp.at(t1, 0, 1, 1) += 0.5;
  const auto yp = block.forward(xp, nullptr);
  bool changed = false;
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t c = 0; c < 6; ++c)
      for (std::size_t h = 0; h < 3; ++h)
        for (std::size_t w = 0; w < 4; ++w) {
          const bool same = yp.at(t, c, h, w) == y.at(t, c, h, w);
          if (t == t1)
            changed = changed || !same;
          else if (!same)
            return false;
        }
  return changed;
}

/// Max |block(P x) - P block(x)| for a random frame permutation P, no positional encoding.
inline double temporal_permutation_error(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t frames = 4;
  const auto block = random_block(BlockKind::kTemporal, 6, 2, rng);
  const auto x = random_window(frames, 6, 3, 3, rng);
  std::vector<std::size_t> perm(frames);
  for (std::size_t i = 0; i < frames; ++i) perm[i] = i;
  do std::shuffle(perm.begin(), perm.end(), rng);
  while (std::is_sorted(perm.begin(), perm.end()));
  auto permute = [&](const Tensor<double>& a) {
    Tensor<double> out(a.shape());
    const std::size_t frame = a.size() / frames;
    for (std::size_t t = 0; t < frames; ++t)
      std::copy_n(a.data() + perm[t] * frame, frame, out.data() + t * frame);
    return out;
  };
  const auto lhs = block.forward(permute(x), nullptr);
  const auto rhs = permute(block.forward(x, nullptr));
  double err = 0;
  for (std::size_t i = 0; i < lhs.size(); ++i) err = std::max(err, std::abs(lhs[i] - rhs[i]));
  return err;
}

/// With every parameter zero each block kind, and the whole temporal module,
/// reproduce their input bit for bit.
inline bool zero_parameters_are_identity(std::uint64_t seed) {
  Rng rng(seed);
  const auto x = random_window(3, 6, 2, 3, rng);
  for (auto kind : {BlockKind::kTemporal, BlockKind::kSpatial, BlockKind::kDivided}) {
    AttentionBlock<double> b(kind, 6, 2);
    b.init(rng);
    b.visit("", [](const std::string&, Param<double>& p) { p.value.fill(0); });
    if (!(b.forward(x, nullptr) == x)) return false;
  }
  for (auto variant : {TemporalVariant::kTemporal, TemporalVariant::kDivided}) {
    TemporalModule<double> m({variant, 6, 2, 2, 3});
    m.init(rng);
    m.visit("", [](const std::string&, Param<double>& p) { p.value.fill(0); });
    std::vector<FeaturePyramid<double>> pyr(3);
    for (auto& p : pyr) {
      p.height = p.width = 64;
      const auto e = level_extents(64, 64);
      for (std::size_t l = 0; l < kNumLevels; ++l) {
        p.levels[l] = Tensor<double>({6, e[l].first, e[l].second});
        fill_uniform(p.levels[l], 1.0, rng);
      }
    }
    const auto out = m.forward({&pyr[0], &pyr[1], &pyr[2]}, 1, nullptr);
    for (std::size_t l = 0; l < kNumLevels; ++l)
      if (!(out.levels[l] == pyr[1].levels[l])) return false;
  }
  return true;
}

}  // namespace occlunet::testing

#endif  // OCCLUNET_TESTS_ATTENTION_CHECKS_HPP_
