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

#include "occlunet/detector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "occlunet/box_codec.hpp"

namespace occlunet {

std::array<std::pair<std::size_t, std::size_t>, kNumLevels> level_extents(std::size_t height,
                                                                        std::size_t width) {
  std::array<std::pair<std::size_t, std::size_t>, kNumLevels> out{};
  for (std::size_t l = 0; l < kNumLevels; ++l) {
    const auto s = static_cast<std::size_t>(kLevelStrides[l]);
    out[l] = {(height + s - 1) / s, (width + s - 1) / s};
  }
  return out;
}

// ---------------------------------------------------------------- Backbone

template <typename T>
Backbone<T>::Backbone(const BackboneConfig& cfg) : cfg_(cfg) {
  if (cfg.channels < 2) throw std::invalid_argument("backbone needs at least 2 channels");
  const std::size_t half = cfg.channels / 2;
  stem1_ = Conv2dLayer<T>(cfg.in_channels, half, 3, 2, true);
  stem2_ = Conv2dLayer<T>(half, cfg.channels, 3, 2, true);
  for (std::size_t l = 0; l < kNumLevels; ++l) {
    down_[l] = Conv2dLayer<T>(cfg.channels, cfg.channels, 3, 2, true);
    refine_[l] = Conv2dLayer<T>(cfg.channels, cfg.channels, 3, 1, true);
  }
}

template <typename T>
void Backbone<T>::init(Rng& rng) {
  stem1_.init(rng);
  stem2_.init(rng);
  for (std::size_t l = 0; l < kNumLevels; ++l) {
    down_[l].init(rng);
    refine_[l].init(rng);
  }
}

template <typename T>
FeaturePyramid<T> Backbone<T>::forward(const Tensor<T>& frame, Cache* cache) const {
  if (frame.rank() != 3 || frame.dim(0) != cfg_.in_channels) {
    throw ShapeError("backbone expects [" + std::to_string(cfg_.in_channels) +
                     ",H,W], got " + shape_to_string(frame.shape()));
  }
  if (frame.dim(1) % 32 != 0 || frame.dim(2) % 32 != 0) {
    throw ShapeError("backbone input extents must be divisible by 32, got " +
                     shape_to_string(frame.shape()));
  }
  FeaturePyramid<T> out;
  out.height = frame.dim(1);
  out.width = frame.dim(2);
  Tensor<T> x = stem1_.forward(frame, cache ? &cache->stem1 : nullptr);
  x = stem2_.forward(x, cache ? &cache->stem2 : nullptr);
  for (std::size_t l = 0; l < kNumLevels; ++l) {
    x = down_[l].forward(x, cache ? &cache->down[l] : nullptr);
    x = refine_[l].forward(x, cache ? &cache->refine[l] : nullptr);
    out.levels[l] = x;
  }
  return out;
}

template <typename T>
Tensor<T> Backbone<T>::backward(const FeaturePyramid<T>& grad, const Cache& cache) {
  Tensor<T> g;
  for (std::size_t i = kNumLevels; i-- > 0;) {
    Tensor<T> gl = grad.levels[i];
    if (!g.empty()) gl += g;
    g = refine_[i].backward(gl, cache.refine[i]);
    g = down_[i].backward(g, cache.down[i]);
  }
  g = stem2_.backward(g, cache.stem2);
  return stem1_.backward(g, cache.stem1);
}

template <typename T>
void Backbone<T>::visit(const std::string& prefix, const ParamVisitor<T>& fn) {
  stem1_.visit(prefix + ".stem1", fn);
  stem2_.visit(prefix + ".stem2", fn);
  for (std::size_t l = 0; l < kNumLevels; ++l) {
    down_[l].visit(prefix + ".c" + std::to_string(l + 3) + ".down", fn);
    refine_[l].visit(prefix + ".c" + std::to_string(l + 3) + ".refine", fn);
  }
}

// ---------------------------------------------------------------- PAFPN

template <typename T>
Pafpn<T>::Pafpn(std::size_t c)
    : td4_(c, c, 3, 1, true),
      td3_(c, c, 3, 1, true),
      down3_(c, c, 3, 2, true),
      bu4_(c, c, 3, 1, true),
      down4_(c, c, 3, 2, true),
      bu5_(c, c, 3, 1, true) {}

template <typename T>
void Pafpn<T>::init(Rng& rng) {
  for (auto* layer : {&td4_, &td3_, &down3_, &bu4_, &down4_, &bu5_}) layer->init(rng);
}

template <typename T>
FeaturePyramid<T> Pafpn<T>::forward(const FeaturePyramid<T>& c, Cache* cache) const {
  const auto& [c3, c4, c5] = c.levels;
  Tensor<T> m4 = upsample2x(c5);
  m4 += c4;
  Tensor<T> t4 = td4_.forward(m4, cache ? &cache->td4 : nullptr);
  Tensor<T> m3 = upsample2x(t4);
  m3 += c3;
  FeaturePyramid<T> p;
  p.height = c.height;
  p.width = c.width;
  p.levels[0] = td3_.forward(m3, cache ? &cache->td3 : nullptr);
  Tensor<T> b4 = down3_.forward(p.levels[0], cache ? &cache->down3 : nullptr);
  b4 += t4;
  p.levels[1] = bu4_.forward(b4, cache ? &cache->bu4 : nullptr);
  Tensor<T> b5 = down4_.forward(p.levels[1], cache ? &cache->down4 : nullptr);
  b5 += c5;
  p.levels[2] = bu5_.forward(b5, cache ? &cache->bu5 : nullptr);
  return p;
}

template <typename T>
FeaturePyramid<T> Pafpn<T>::backward(const FeaturePyramid<T>& grad, const Cache& cache) {
  FeaturePyramid<T> dc;
  dc.height = grad.height;
  dc.width = grad.width;
  Tensor<T> db5 = bu5_.backward(grad.levels[2], cache.bu5);
  Tensor<T> dc5 = db5;
  Tensor<T> dp4 = down4_.backward(db5, cache.down4);
  dp4 += grad.levels[1];
  Tensor<T> db4 = bu4_.backward(dp4, cache.bu4);
  Tensor<T> dt4 = db4;
  Tensor<T> dp3 = down3_.backward(db4, cache.down3);
  dp3 += grad.levels[0];
  Tensor<T> dm3 = td3_.backward(dp3, cache.td3);
  dt4 += upsample2x_backward(dm3);
  Tensor<T> dm4 = td4_.backward(dt4, cache.td4);
  dc5 += upsample2x_backward(dm4);
  dc.levels[0] = std::move(dm3);
  dc.levels[1] = std::move(dm4);
  dc.levels[2] = std::move(dc5);
  return dc;
}

template <typename T>
void Pafpn<T>::visit(const std::string& prefix, const ParamVisitor<T>& fn) {
  td4_.visit(prefix + ".td4", fn);
  td3_.visit(prefix + ".td3", fn);
  down3_.visit(prefix + ".down3", fn);
  bu4_.visit(prefix + ".bu4", fn);
  down4_.visit(prefix + ".down4", fn);
  bu5_.visit(prefix + ".bu5", fn);
}

// ---------------------------------------------------------------- Head

template <typename T>
DecoupledHead<T>::DecoupledHead(std::size_t c, std::size_t k)
    : stem_(c, c, 1, 1, true),
      cls_conv_(c, c, 3, 1, true),
      cls_pred_(c, k, 1, 1, false),
      reg_conv_(c, c, 3, 1, true),
      reg_pred_(c, 4, 1, 1, false),
      obj_pred_(c, 1, 1, 1, false) {}

template <typename T>
void DecoupledHead<T>::init(Rng& rng, double prior_prob) {
  const T prior_bias = static_cast<T>(-std::log((1.0 - prior_prob) / prior_prob));
  stem_.init(rng);
  cls_conv_.init(rng);
  cls_pred_.init(rng, prior_bias);
  reg_conv_.init(rng);
  reg_pred_.init(rng);
  obj_pred_.init(rng, prior_bias);
}

template <typename T>
LevelOutput<T> DecoupledHead<T>::forward(const Tensor<T>& x, Cache* cache) const {
  Tensor<T> s = stem_.forward(x, cache ? &cache->stem : nullptr);
  Tensor<T> c = cls_conv_.forward(s, cache ? &cache->cls_conv : nullptr);
  Tensor<T> r = reg_conv_.forward(s, cache ? &cache->reg_conv : nullptr);
  LevelOutput<T> out;
  out.cls = cls_pred_.forward(c, cache ? &cache->cls_pred : nullptr);
  out.reg = reg_pred_.forward(r, cache ? &cache->reg_pred : nullptr);
  out.obj = obj_pred_.forward(r, cache ? &cache->obj_pred : nullptr);
  return out;
}

template <typename T>
Tensor<T> DecoupledHead<T>::backward(const LevelOutput<T>& grad, const Cache& cache) {
  Tensor<T> dr = reg_pred_.backward(grad.reg, cache.reg_pred);
  dr += obj_pred_.backward(grad.obj, cache.obj_pred);
  Tensor<T> ds = reg_conv_.backward(dr, cache.reg_conv);
  ds += cls_conv_.backward(cls_pred_.backward(grad.cls, cache.cls_pred), cache.cls_conv);
  return stem_.backward(ds, cache.stem);
}

template <typename T>
void DecoupledHead<T>::visit(const std::string& prefix, const ParamVisitor<T>& fn) {
  stem_.visit(prefix + ".stem", fn);
  cls_conv_.visit(prefix + ".cls_conv", fn);
  cls_pred_.visit(prefix + ".cls_pred", fn);
  reg_conv_.visit(prefix + ".reg_conv", fn);
  reg_pred_.visit(prefix + ".reg_pred", fn);
  obj_pred_.visit(prefix + ".obj_pred", fn);
}

// ---------------------------------------------------------------- Decode / NMS

bool operator==(const Detection& a, const Detection& b) {
  return a.frame_index == b.frame_index && a.cx == b.cx && a.cy == b.cy && a.w == b.w &&
         a.h == b.h && a.confidence == b.confidence && a.class_id == b.class_id &&
         a.anchor == b.anchor;
}

double confidence(double obj_logit, double cls_logit) {
  return ops::sigmoid(obj_logit) * ops::sigmoid(cls_logit);
}

template <typename T>
std::vector<Detection> head_decode(const HeadOutput<T>& out, double conf_floor,
                                   int frame_index) {
  if (!(conf_floor >= 0.0 && conf_floor <= 1.0))
    throw std::invalid_argument("conf_floor must lie in [0, 1]");
  std::vector<Detection> dets;
  int anchor_base = 0;
  for (std::size_t l = 0; l < kNumLevels; ++l) {
    const auto& lv = out.levels[l];
    const int stride = kLevelStrides[l];
    const std::size_t h = lv.obj.dim(1), w = lv.obj.dim(2), k = lv.cls.dim(0);
    const std::size_t plane = h * w;
    for (std::size_t gy = 0; gy < h; ++gy) {
      for (std::size_t gx = 0; gx < w; ++gx) {
        const std::size_t cell = gy * w + gx;
        std::size_t best = 0;
        for (std::size_t c = 1; c < k; ++c)
          if (lv.cls[c * plane + cell] > lv.cls[best * plane + cell]) best = c;
        const double conf = confidence(static_cast<double>(lv.obj[cell]),
                                       static_cast<double>(lv.cls[best * plane + cell]));
        if (conf < conf_floor) continue;
        const auto box = decode_box(static_cast<double>(lv.reg[cell]),
                                    static_cast<double>(lv.reg[plane + cell]),
                                    static_cast<double>(lv.reg[2 * plane + cell]),
                                    static_cast<double>(lv.reg[3 * plane + cell]),
                                    static_cast<int>(gx), static_cast<int>(gy), stride);
        Detection d;
        d.frame_index = frame_index;
        d.cx = box[0];
        d.cy = box[1];
        d.w = box[2];
        d.h = box[3];
        d.confidence = conf;
        d.class_id = static_cast<int>(best);
        d.anchor = anchor_base + static_cast<int>(cell);
        dets.push_back(d);
      }
    }
    anchor_base += static_cast<int>(plane);
  }
  return dets;
}

std::array<double, 4> encode_box(double cx, double cy, double w, double h, int gx, int gy,
                                 int stride) {
  const double s = stride;
  return {cx / s - gx, cy / s - gy, std::log(w / s), std::log(h / s)};
}

double box_iou(double acx, double acy, double aw, double ah, double bcx, double bcy,
               double bw, double bh) {
  const double ix = std::min(acx + aw / 2, bcx + bw / 2) - std::max(acx - aw / 2, bcx - bw / 2);
  const double iy = std::min(acy + ah / 2, bcy + bh / 2) - std::max(acy - ah / 2, bcy - bh / 2);
  if (ix <= 0 || iy <= 0) return 0.0;
  const double inter = ix * iy;
  return inter / (aw * ah + bw * bh - inter);
}

std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold) {
  auto key = [](const Detection& d) {
    return std::make_tuple(-d.confidence, d.class_id, d.anchor, d.frame_index, d.cx, d.cy,
                           d.w, d.h);
  };
  std::sort(dets.begin(), dets.end(),
            [&](const Detection& a, const Detection& b) { return key(a) < key(b); });
  std::vector<Detection> keep;
  for (const auto& d : dets) {
    bool suppressed = false;
    for (const auto& k : keep) {
      if (k.class_id == d.class_id && box_iou(k, d) >= iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) keep.push_back(d);
  }
  return keep;
}

template class Backbone<float>;
template class Backbone<double>;
template class Pafpn<float>;
template class Pafpn<double>;
template class DecoupledHead<float>;
template class DecoupledHead<double>;
template std::vector<Detection> head_decode<float>(const HeadOutput<float>&, double, int);
template std::vector<Detection> head_decode<double>(const HeadOutput<double>&, double, int);

}  // namespace occlunet
