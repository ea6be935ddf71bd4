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

#include "occlunet/temporal.hpp"

#include <cmath>
#include <stdexcept>

namespace occlunet {

std::string_view to_string(TemporalVariant v) {
  return v == TemporalVariant::kTemporal ? "occlunet1" : "occlunet2";
}

namespace {

template <typename T>
void check_window(const Tensor<T>& x) {
  if (x.rank() != 4) {
    throw ShapeError("level window must be [T,C,H,W], got " + shape_to_string(x.shape()));
  }
}

}  // namespace

template <typename T>
Tensor<T> to_tokens(const Tensor<T>& x, AttentionAxis axis) {
  check_window(x);
  const std::size_t t = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  Tensor<T> tok({t * hw, c});
  for (std::size_t f = 0; f < t; ++f) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const T* src = x.data() + (f * c + ch) * hw;
      for (std::size_t p = 0; p < hw; ++p) {
        const std::size_t row = axis == AttentionAxis::kFrames ? p * t + f : f * hw + p;
        tok[row * c + ch] = src[p];
      }
    }
  }
  return tok;
}

template <typename T>
Tensor<T> from_tokens(const Tensor<T>& tokens, const Shape& shape, AttentionAxis axis) {
  Tensor<T> x(shape);
  check_window(x);
  const std::size_t t = shape[0], c = shape[1], hw = shape[2] * shape[3];
  if (tokens.rank() != 2 || tokens.dim(0) != t * hw || tokens.dim(1) != c) {
    throw ShapeError("token matrix " + shape_to_string(tokens.shape()) +
                     " does not match window " + shape_to_string(shape));
  }
  for (std::size_t f = 0; f < t; ++f) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      T* dst = x.data() + (f * c + ch) * hw;
      for (std::size_t p = 0; p < hw; ++p) {
        const std::size_t row = axis == AttentionAxis::kFrames ? p * t + f : f * hw + p;
        dst[p] = tokens[row * c + ch];
      }
    }
  }
  return x;
}

// ---------------------------------------------------------------- attention

template <typename T>
AttentionSublayer<T>::AttentionSublayer(std::size_t channels, std::size_t heads)
    : norm(channels),
      wq(channels, channels),
      wk(channels, channels),
      wv(channels, channels),
      wo(channels, channels),
      heads_(heads) {
  if (heads == 0 || channels % heads != 0) {
    throw std::invalid_argument("channels (" + std::to_string(channels) +
                                ") must be divisible by heads (" + std::to_string(heads) + ")");
  }
}

template <typename T>
void AttentionSublayer<T>::init(Rng& rng) {
  wq.init(rng);
  wk.init(rng);
  wv.init(rng);
  wo.init(rng);
  wo.weight.value *= T(0.5);
}

template <typename T>
Tensor<T> AttentionSublayer<T>::forward(const Tensor<T>& x, std::size_t groups,
                                        std::size_t len, Cache* cache) const {
  if (x.rank() != 2 || x.dim(0) != groups * len) {
    throw ShapeError("attention tokens " + shape_to_string(x.shape()) + " do not form " +
                     std::to_string(groups) + " groups of " + std::to_string(len));
  }
  const std::size_t c = x.dim(1);
  const std::size_t dh = c / heads_;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));

  ops::LayerNormCache<T> ln;
  Tensor<T> normed = ops::layer_norm(x, norm.gamma.value, norm.beta.value, T(1e-5), &ln);
  Tensor<T> q = wq.forward(normed);
  Tensor<T> k = wk.forward(normed);
  Tensor<T> v = wv.forward(normed);
  Tensor<T> context({groups * len, c});
  std::vector<T> probs(groups * heads_ * len * len);

  std::vector<T> qh(len * dh), kt(dh * len), vh(len * dh), oh(len * dh), s(len * len);
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t h = 0; h < heads_; ++h) {
      for (std::size_t i = 0; i < len; ++i) {
        const std::size_t row = (g * len + i) * c + h * dh;
        for (std::size_t d = 0; d < dh; ++d) {
          qh[i * dh + d] = q[row + d];
          kt[d * len + i] = k[row + d];
          vh[i * dh + d] = v[row + d];
        }
      }
      ops::gemm(len, len, dh, qh.data(), kt.data(), s.data(), false);
      T* p = probs.data() + (g * heads_ + h) * len * len;
      for (std::size_t i = 0; i < len; ++i) {
        T* si = s.data() + i * len;
        T mx = si[0] * scale;
        for (std::size_t j = 0; j < len; ++j) mx = std::max(mx, si[j] * scale);
        T* pi = p + i * len;
        for (std::size_t j = 0; j < len; ++j) pi[j] = si[j] * scale - mx;
        ops::exp_inplace(pi, len);
        T sum = 0;
        for (std::size_t j = 0; j < len; ++j) sum += pi[j];
        const T inv = T(1) / sum;
        for (std::size_t j = 0; j < len; ++j) p[i * len + j] *= inv;
      }
      ops::gemm(len, dh, len, p, vh.data(), oh.data(), false);
      for (std::size_t i = 0; i < len; ++i) {
        const std::size_t row = (g * len + i) * c + h * dh;
        for (std::size_t d = 0; d < dh; ++d) context[row + d] = oh[i * dh + d];
      }
    }
  }

  Tensor<T> y = wo.forward(context);
  y += x;
  if (cache) {
    cache->ln = std::move(ln);
    cache->normed = std::move(normed);
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->context = std::move(context);
    cache->probs = std::move(probs);
    cache->groups = groups;
    cache->len = len;
  }
  return y;
}

template <typename T>
Tensor<T> AttentionSublayer<T>::backward(const Tensor<T>& dy, const Cache& cache) {
  const std::size_t groups = cache.groups, len = cache.len;
  const std::size_t c = dy.dim(1);
  const std::size_t dh = c / heads_;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));

  Tensor<T> dctx = wo.backward(cache.context, dy);
  Tensor<T> dq(dy.shape()), dk(dy.shape()), dv(dy.shape());

  std::vector<T> qh(len * dh), kh(len * dh), vt(dh * len), doh(len * dh);
  std::vector<T> dp(len * len), ds(len * len);
  std::vector<T> dqh(len * dh), dkh(len * dh), dvh(len * dh);
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t h = 0; h < heads_; ++h) {
      for (std::size_t i = 0; i < len; ++i) {
        const std::size_t row = (g * len + i) * c + h * dh;
        for (std::size_t d = 0; d < dh; ++d) {
          qh[i * dh + d] = cache.q[row + d];
          kh[i * dh + d] = cache.k[row + d];
          vt[d * len + i] = cache.v[row + d];
          doh[i * dh + d] = dctx[row + d];
        }
      }
      const T* p = cache.probs.data() + (g * heads_ + h) * len * len;
      ops::gemm(len, len, dh, doh.data(), vt.data(), dp.data(), false);
      ops::gemm_tn(len, dh, len, p, doh.data(), dvh.data(), false);
      for (std::size_t i = 0; i < len; ++i) {
        T dot = 0;
        for (std::size_t j = 0; j < len; ++j) dot += p[i * len + j] * dp[i * len + j];
        for (std::size_t j = 0; j < len; ++j) {
          ds[i * len + j] = p[i * len + j] * (dp[i * len + j] - dot) * scale;
        }
      }
      ops::gemm(len, dh, len, ds.data(), kh.data(), dqh.data(), false);
      ops::gemm_tn(len, dh, len, ds.data(), qh.data(), dkh.data(), false);
      for (std::size_t i = 0; i < len; ++i) {
        const std::size_t row = (g * len + i) * c + h * dh;
        for (std::size_t d = 0; d < dh; ++d) {
          dq[row + d] = dqh[i * dh + d];
          dk[row + d] = dkh[i * dh + d];
          dv[row + d] = dvh[i * dh + d];
        }
      }
    }
  }

  Tensor<T> dn = wq.backward(cache.normed, dq);
  dn += wk.backward(cache.normed, dk);
  dn += wv.backward(cache.normed, dv);
  auto lg = ops::layer_norm_backward(cache.ln, norm.gamma.value, dn);
  norm.gamma.grad += lg.dgamma;
  norm.beta.grad += lg.dbeta;
  Tensor<T> dx = dy;
  dx += lg.dx;
  return dx;
}

template <typename T>
void AttentionSublayer<T>::visit(const std::string& prefix, const ParamVisitor<T>& fn) {
  norm.visit(prefix + ".norm", fn);
  wq.visit(prefix + ".q", fn);
  wk.visit(prefix + ".k", fn);
  wv.visit(prefix + ".v", fn);
  wo.visit(prefix + ".o", fn);
}

// ---------------------------------------------------------------- MLP

template <typename T>
MlpSublayer<T>::MlpSublayer(std::size_t channels)
    : norm(channels), fc1(channels, 2 * channels), fc2(2 * channels, channels) {}

template <typename T>
void MlpSublayer<T>::init(Rng& rng) {
  fc1.init(rng);
  fc2.init(rng);
  fc2.weight.value *= T(0.5);
}

template <typename T>
Tensor<T> MlpSublayer<T>::forward(const Tensor<T>& x, Cache* cache) const {
  ops::LayerNormCache<T> ln;
  Tensor<T> normed = ops::layer_norm(x, norm.gamma.value, norm.beta.value, T(1e-5), &ln);
  Tensor<T> pre = fc1.forward(normed);
  Tensor<T> hidden = ops::silu(pre);
  Tensor<T> y = fc2.forward(hidden);
  y += x;
  if (cache) {
    cache->ln = std::move(ln);
    cache->normed = std::move(normed);
    cache->hidden_pre = std::move(pre);
    cache->hidden = std::move(hidden);
  }
  return y;
}

template <typename T>
Tensor<T> MlpSublayer<T>::backward(const Tensor<T>& dy, const Cache& cache) {
  Tensor<T> dh = fc2.backward(cache.hidden, dy);
  Tensor<T> dpre = ops::silu_backward(cache.hidden_pre, dh);
  Tensor<T> dn = fc1.backward(cache.normed, dpre);
  auto lg = ops::layer_norm_backward(cache.ln, norm.gamma.value, dn);
  norm.gamma.grad += lg.dgamma;
  norm.beta.grad += lg.dbeta;
  Tensor<T> dx = dy;
  dx += lg.dx;
  return dx;
}

template <typename T>
void MlpSublayer<T>::visit(const std::string& prefix, const ParamVisitor<T>& fn) {
  norm.visit(prefix + ".norm", fn);
  fc1.visit(prefix + ".fc1", fn);
  fc2.visit(prefix + ".fc2", fn);
}

// ---------------------------------------------------------------- block

template <typename T>
AttentionBlock<T>::AttentionBlock(BlockKind kind, std::size_t channels, std::size_t heads)
    : mlp(channels), kind_(kind) {
  if (kind != BlockKind::kSpatial) temporal = AttentionSublayer<T>(channels, heads);
  if (kind != BlockKind::kTemporal) spatial = AttentionSublayer<T>(channels, heads);
}

template <typename T>
void AttentionBlock<T>::init(Rng& rng) {
  if (kind_ != BlockKind::kSpatial) temporal.init(rng);
  if (kind_ != BlockKind::kTemporal) spatial.init(rng);
  mlp.init(rng);
}

template <typename T>
Tensor<T> AttentionBlock<T>::forward(const Tensor<T>& x, Cache* cache) const {
  check_window(x);
  const std::size_t t = x.dim(0), hw = x.dim(2) * x.dim(3);
  if (cache) cache->shape = x.shape();
  Tensor<T> tok;
  AttentionAxis axis = AttentionAxis::kFrames;
  if (kind_ == BlockKind::kSpatial) {
    axis = AttentionAxis::kPositions;
    tok = spatial.forward(to_tokens(x, axis), t, hw, cache ? &cache->spatial : nullptr);
  } else {
    tok = temporal.forward(to_tokens(x, axis), hw, t, cache ? &cache->temporal : nullptr);
    if (kind_ == BlockKind::kDivided) {
      axis = AttentionAxis::kPositions;
      Tensor<T> mid = from_tokens(tok, x.shape(), AttentionAxis::kFrames);
      tok = spatial.forward(to_tokens(mid, axis), t, hw, cache ? &cache->spatial : nullptr);
    }
  }
  tok = mlp.forward(tok, cache ? &cache->mlp : nullptr);
  return from_tokens(tok, x.shape(), axis);
}

template <typename T>
Tensor<T> AttentionBlock<T>::backward(const Tensor<T>& dy, const Cache& cache) {
  const AttentionAxis out_axis =
      kind_ == BlockKind::kTemporal ? AttentionAxis::kFrames : AttentionAxis::kPositions;
  Tensor<T> dtok = mlp.backward(to_tokens(dy, out_axis), cache.mlp);
  if (kind_ == BlockKind::kSpatial) {
    return from_tokens(spatial.backward(dtok, cache.spatial), cache.shape,
                       AttentionAxis::kPositions);
  }
  if (kind_ == BlockKind::kDivided) {
    dtok = spatial.backward(dtok, cache.spatial);
    dtok = to_tokens(from_tokens(dtok, cache.shape, AttentionAxis::kPositions),
                     AttentionAxis::kFrames);
  }
  return from_tokens(temporal.backward(dtok, cache.temporal), cache.shape,
                     AttentionAxis::kFrames);
}

template <typename T>
void AttentionBlock<T>::visit(const std::string& prefix, const ParamVisitor<T>& fn) {
  if (kind_ != BlockKind::kSpatial) temporal.visit(prefix + ".temporal", fn);
  if (kind_ != BlockKind::kTemporal) spatial.visit(prefix + ".spatial", fn);
  mlp.visit(prefix + ".mlp", fn);
}

// ---------------------------------------------------------------- positional

template <typename T>
Tensor<T> add_positional(const Tensor<T>& x, const PositionalEncoding<T>& pe) {
  check_window(x);
  const std::size_t t = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  if (t > pe.table.value.dim(0)) {
    throw std::invalid_argument("window of " + std::to_string(t) +
                                " frames exceeds positional table of " +
                                std::to_string(pe.table.value.dim(0)));
  }
  if (c != pe.table.value.dim(1)) throw ShapeError("positional table channel mismatch");
  Tensor<T> y = x;
  for (std::size_t f = 0; f < t; ++f)
    for (std::size_t ch = 0; ch < c; ++ch) {
      const T r = pe.table.value[f * c + ch];
      T* p = y.data() + (f * c + ch) * hw;
      for (std::size_t i = 0; i < hw; ++i) p[i] += r;
    }
  return y;
}

template <typename T>
void add_positional_backward(const Tensor<T>& dy, PositionalEncoding<T>& pe) {
  const std::size_t t = dy.dim(0), c = dy.dim(1), hw = dy.dim(2) * dy.dim(3);
  for (std::size_t f = 0; f < t; ++f)
    for (std::size_t ch = 0; ch < c; ++ch) {
      const T* p = dy.data() + (f * c + ch) * hw;
      T acc = 0;
      for (std::size_t i = 0; i < hw; ++i) acc += p[i];
      pe.table.grad[f * c + ch] += acc;
    }
}

// ---------------------------------------------------------------- module

template <typename T>
Tensor<T> stack_frames(const std::vector<const Tensor<T>*>& frames) {
  if (frames.empty()) throw ShapeError("cannot stack zero frames");
  const Shape& s = frames.front()->shape();
  if (s.size() != 3) throw ShapeError("frame maps must be [C,H,W]");
  Tensor<T> out({frames.size(), s[0], s[1], s[2]});
  const std::size_t n = frames.front()->size();
  for (std::size_t f = 0; f < frames.size(); ++f) {
    if (frames[f]->shape() != s) throw ShapeError("window frames differ in shape");
    std::copy(frames[f]->data(), frames[f]->data() + n, out.data() + f * n);
  }
  return out;
}

template <typename T>
Tensor<T> frame_slice(const Tensor<T>& x, std::size_t index) {
  check_window(x);
  Tensor<T> out({x.dim(1), x.dim(2), x.dim(3)});
  const std::size_t n = out.size();
  std::copy(x.data() + index * n, x.data() + (index + 1) * n, out.data());
  return out;
}

template <typename T>
TemporalModule<T>::TemporalModule(const TemporalConfig& cfg) : cfg_(cfg) {
  const BlockKind kind =
      cfg.variant == TemporalVariant::kTemporal ? BlockKind::kTemporal : BlockKind::kDivided;
  for (std::size_t l = 0; l < kNumLevels; ++l) {
    pe_[l] = PositionalEncoding<T>(cfg.max_frames, cfg.channels);
    for (std::size_t b = 0; b < cfg.blocks; ++b)
      blocks_[l].emplace_back(kind, cfg.channels, cfg.heads);
  }
}

template <typename T>
void TemporalModule<T>::init(Rng& rng) {
  for (std::size_t l = 0; l < kNumLevels; ++l) {
    pe_[l].init(rng);
    for (auto& b : blocks_[l]) b.init(rng);
  }
}

template <typename T>
Tensor<T> TemporalModule<T>::forward_level(std::size_t level, const Tensor<T>& window,
                                           LevelCache* cache) const {
  Tensor<T> x = add_positional(window, pe_[level]);
  if (cache) {
    cache->shape = window.shape();
    cache->blocks.resize(blocks_[level].size());
  }
  for (std::size_t b = 0; b < blocks_[level].size(); ++b)
    x = blocks_[level][b].forward(x, cache ? &cache->blocks[b] : nullptr);
  return x;
}

template <typename T>
Tensor<T> TemporalModule<T>::backward_level(std::size_t level, const Tensor<T>& dy,
                                            const LevelCache& cache) {
  Tensor<T> g = dy;
  for (std::size_t b = blocks_[level].size(); b-- > 0;)
    g = blocks_[level][b].backward(g, cache.blocks[b]);
  add_positional_backward(g, pe_[level]);
  return g;
}

template <typename T>
FeaturePyramid<T> TemporalModule<T>::forward(
    const std::vector<const FeaturePyramid<T>*>& window, std::size_t center,
    Cache* cache) const {
  if (window.empty() || center >= window.size())
    throw std::invalid_argument("temporal window center out of range");
  FeaturePyramid<T> out;
  out.height = window[center]->height;
  out.width = window[center]->width;
  if (cache) {
    cache->frames = window.size();
    cache->center = center;
  }
  for (std::size_t l = 0; l < kNumLevels; ++l) {
    std::vector<const Tensor<T>*> maps;
    maps.reserve(window.size());
    for (const auto* p : window) maps.push_back(&p->levels[l]);
    Tensor<T> y = forward_level(l, stack_frames(maps), cache ? &cache->levels[l] : nullptr);
    out.levels[l] = frame_slice(y, center);
  }
  return out;
}

template <typename T>
std::vector<FeaturePyramid<T>> TemporalModule<T>::backward(const FeaturePyramid<T>& grad,
                                                           const Cache& cache) {
  std::vector<FeaturePyramid<T>> out(cache.frames);
  for (std::size_t l = 0; l < kNumLevels; ++l) {
    const Shape& s = cache.levels[l].shape;
    Tensor<T> dy(s);
    const std::size_t n = grad.levels[l].size();
    std::copy(grad.levels[l].data(), grad.levels[l].data() + n, dy.data() + cache.center * n);
    Tensor<T> dx = backward_level(l, dy, cache.levels[l]);
    for (std::size_t f = 0; f < cache.frames; ++f) out[f].levels[l] = frame_slice(dx, f);
  }
  for (auto& p : out) {
    p.height = grad.height;
    p.width = grad.width;
  }
  return out;
}

template <typename T>
void TemporalModule<T>::visit(const std::string& prefix, const ParamVisitor<T>& fn) {
  for (std::size_t l = 0; l < kNumLevels; ++l) {
    const std::string lp = prefix + ".p" + std::to_string(l + 3);
    fn(lp + ".pos", pe_[l].table);
    for (std::size_t b = 0; b < blocks_[l].size(); ++b)
      blocks_[l][b].visit(lp + ".block" + std::to_string(b), fn);
  }
}

#define OCCLUNET_INSTANTIATE_TEMPORAL(T)                                              \
  template Tensor<T> to_tokens<T>(const Tensor<T>&, AttentionAxis);                    \
  template Tensor<T> from_tokens<T>(const Tensor<T>&, const Shape&, AttentionAxis);    \
  template class AttentionSublayer<T>;                                                 \
  template class MlpSublayer<T>;                                                       \
  template class AttentionBlock<T>;                                                    \
  template Tensor<T> add_positional<T>(const Tensor<T>&, const PositionalEncoding<T>&); \
  template void add_positional_backward<T>(const Tensor<T>&, PositionalEncoding<T>&);  \
  template Tensor<T> stack_frames<T>(const std::vector<const Tensor<T>*>&);            \
  template Tensor<T> frame_slice<T>(const Tensor<T>&, std::size_t);                    \
  template class TemporalModule<T>;

OCCLUNET_INSTANTIATE_TEMPORAL(float)
OCCLUNET_INSTANTIATE_TEMPORAL(double)

#undef OCCLUNET_INSTANTIATE_TEMPORAL

}  // namespace occlunet
