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

#ifndef OCCLUNET_MODEL_HPP_
#define OCCLUNET_MODEL_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "occlunet/detector.hpp"
#include "occlunet/temporal.hpp"

namespace occlunet {

enum class ModelVariant {
  kOccluNet1,      // temporal attention per location
  kOccluNet2,      // divided space-time attention
  kMinipBaseline,  // same detector on a single MinIP image, no temporal module
};

std::string_view to_string(ModelVariant v);
ModelVariant variant_from_string(std::string_view s);

struct ModelConfig {
  ModelVariant variant = ModelVariant::kOccluNet1;
  std::size_t channels = 32;
  std::size_t heads = 4;
  std::size_t blocks = 1;
  std::size_t window = 3;
  std::size_t num_classes = 1;
  std::size_t input_size = 640;

  void validate() const;
  bool temporal() const { return variant != ModelVariant::kMinipBaseline; }
  bool operator==(const ModelConfig&) const = default;
};

/// Backbone + PAFPN per frame, optional temporal module over a window of
/// P-level pyramids, and one decoupled head per level.
template <typename T>
class OccluNetModel {
 public:
  struct SpatialCache {
    typename Backbone<T>::Cache backbone;
    typename Pafpn<T>::Cache neck;
  };
  struct HeadCache {
    std::array<typename DecoupledHead<T>::Cache, kNumLevels> levels;
  };
  struct WindowCache {
    std::vector<SpatialCache> frames;
    typename TemporalModule<T>::Cache temporal;
    HeadCache head;
  };

  OccluNetModel() = default;
  explicit OccluNetModel(const ModelConfig& cfg);

  void init(std::uint64_t seed);

  FeaturePyramid<T> spatial_forward(const Tensor<T>& frame, SpatialCache* cache) const;
  /// Accumulates parameter gradients; returns dL/dframe.
  Tensor<T> spatial_backward(const FeaturePyramid<T>& grad, const SpatialCache& cache);

  FeaturePyramid<T> temporal_forward(const std::vector<const FeaturePyramid<T>*>& window,
                                     typename TemporalModule<T>::Cache* cache) const;
  std::vector<FeaturePyramid<T>> temporal_backward(const FeaturePyramid<T>& grad,
                                                   const typename TemporalModule<T>::Cache& cache);

  HeadOutput<T> head_forward(const FeaturePyramid<T>& p, HeadCache* cache) const;
  FeaturePyramid<T> head_backward(const HeadOutput<T>& grad, const HeadCache& cache);

  /// End-to-end pass over `frames` (window slots in chronological order, or
  /// a single image for the baseline); the center slot is the current frame.
  HeadOutput<T> forward(const std::vector<const Tensor<T>*>& frames, WindowCache* cache) const;
  std::vector<Tensor<T>> backward(const HeadOutput<T>& grad, const WindowCache& cache);

  void visit(const ParamVisitor<T>& fn);
  void zero_grad();
  std::size_t num_parameters();

  const ModelConfig& config() const { return cfg_; }
  TemporalModule<T>& temporal_module() { return temporal_; }

 private:
  ModelConfig cfg_;
  Backbone<T> backbone_;
  Pafpn<T> neck_;
  TemporalModule<T> temporal_;
  std::array<DecoupledHead<T>, kNumLevels> heads_;
};

/// Directory with index.json (config plus {name -> offset, shape}) and
/// tensors.bin, replaced atomically.
void save_checkpoint(const std::filesystem::path& dir, OccluNetModel<float>& model);
OccluNetModel<float> load_checkpoint(const std::filesystem::path& dir);

/// Parameter-wise copy between precisions (same config).
template <typename Dst, typename Src>
void copy_parameters(OccluNetModel<Src>& src, OccluNetModel<Dst>& dst);

}  // namespace occlunet

#endif  // OCCLUNET_MODEL_HPP_
