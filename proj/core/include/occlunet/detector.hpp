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

#ifndef OCCLUNET_DETECTOR_HPP_
#define OCCLUNET_DETECTOR_HPP_

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "occlunet/layers.hpp"
#include "occlunet/tensor.hpp"

namespace occlunet {

inline constexpr std::size_t kNumLevels = 3;
inline constexpr std::array<int, kNumLevels> kLevelStrides{8, 16, 32};

/// Three feature maps [C,H/s,W/s] at strides 8, 16 and 32.
template <typename T>
struct FeaturePyramid {
  std::array<Tensor<T>, kNumLevels> levels;
  std::size_t height = 0;
  std::size_t width = 0;
};

/// Spatial extents of each level for an input of the given size.
std::array<std::pair<std::size_t, std::size_t>, kNumLevels> level_extents(
    std::size_t height, std::size_t width);

struct BackboneConfig {
  std::size_t in_channels = 3;
  std::size_t channels = 32;  // C_f for every emitted level
};

/// Strided conv stack: stride-4 stem (two stride-2 convs) followed by three
/// stride-2 stages, each emitting one of C3/C4/C5.
template <typename T>
class Backbone {
 public:
  struct Cache {
    typename Conv2dLayer<T>::Cache stem1, stem2;
    std::array<typename Conv2dLayer<T>::Cache, kNumLevels> down, refine;
  };

  Backbone() = default;
  explicit Backbone(const BackboneConfig& cfg);

  void init(Rng& rng);
  FeaturePyramid<T> forward(const Tensor<T>& frame, Cache* cache) const;
  Tensor<T> backward(const FeaturePyramid<T>& grad, const Cache& cache);
  void visit(const std::string& prefix, const ParamVisitor<T>& fn);

  const BackboneConfig& config() const { return cfg_; }

 private:
  BackboneConfig cfg_;
  Conv2dLayer<T> stem1_, stem2_;
  std::array<Conv2dLayer<T>, kNumLevels> down_, refine_;
};

/// Path-aggregation neck: top-down (upsample + add + conv) then bottom-up
/// (strided conv + add + conv). Extents are preserved per level.
template <typename T>
class Pafpn {
 public:
  struct Cache {
    typename Conv2dLayer<T>::Cache td4, td3, down3, bu4, down4, bu5;
  };

  Pafpn() = default;
  explicit Pafpn(std::size_t channels);

  void init(Rng& rng);
  FeaturePyramid<T> forward(const FeaturePyramid<T>& c, Cache* cache) const;
  FeaturePyramid<T> backward(const FeaturePyramid<T>& grad, const Cache& cache);
  void visit(const std::string& prefix, const ParamVisitor<T>& fn);

 private:
  Conv2dLayer<T> td4_, td3_, down3_, bu4_, down4_, bu5_;
};

/// Raw per-level head maps: reg [4,H,W] (dx,dy,dw,dh), obj [1,H,W] and
/// cls [K,H,W] logits.
template <typename T>
struct LevelOutput {
  Tensor<T> reg;
  Tensor<T> obj;
  Tensor<T> cls;
};

template <typename T>
struct HeadOutput {
  std::array<LevelOutput<T>, kNumLevels> levels;
};

/// Decoupled head for one level: shared 1x1 stem, then a classification
/// branch and a regression/objectness branch.
template <typename T>
class DecoupledHead {
 public:
  struct Cache {
    typename Conv2dLayer<T>::Cache stem, cls_conv, cls_pred, reg_conv, reg_pred, obj_pred;
  };

  DecoupledHead() = default;
  DecoupledHead(std::size_t channels, std::size_t num_classes);

  /// Objectness and class biases start at the logit of prior_prob.
  void init(Rng& rng, double prior_prob = 0.01);
  LevelOutput<T> forward(const Tensor<T>& x, Cache* cache) const;
  Tensor<T> backward(const LevelOutput<T>& grad, const Cache& cache);
  void visit(const std::string& prefix, const ParamVisitor<T>& fn);

 private:
  Conv2dLayer<T> stem_, cls_conv_, cls_pred_, reg_conv_, reg_pred_, obj_pred_;
};

struct Detection {
  int frame_index = 0;
  double cx = 0, cy = 0, w = 0, h = 0;  // model-input pixels
  double confidence = 0;
  int class_id = 0;
  // Global cell index (level-major, then row-major). Only used to break ties.
  int anchor = 0;
};

bool operator==(const Detection& a, const Detection& b);

/// P(object) * P(class).
double confidence(double obj_logit, double cls_logit);

/// Decodes every cell and keeps detections with confidence >= conf_floor.
template <typename T>
std::vector<Detection> head_decode(const HeadOutput<T>& out, double conf_floor,
                                   int frame_index = 0);

/// Inverse of the box decode for one cell; returns (dx, dy, dw, dh).
std::array<double, 4> encode_box(double cx, double cy, double w, double h, int gx, int gy,
                                 int stride);

/// IoU of two center-format boxes.
double box_iou(double acx, double acy, double aw, double ah, double bcx, double bcy,
               double bw, double bh);

inline double box_iou(const Detection& a, const Detection& b) {
  return box_iou(a.cx, a.cy, a.w, a.h, b.cx, b.cy, b.w, b.h);
}

/// Greedy class-wise NMS in descending confidence; ties by class_id then
/// anchor. Survivors are returned in that order.
std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold);

}  // namespace occlunet

#endif  // OCCLUNET_DETECTOR_HPP_
