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

#ifndef OCCLUNET_TEMPORAL_HPP_
#define OCCLUNET_TEMPORAL_HPP_

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "occlunet/detector.hpp"
#include "occlunet/layers.hpp"
#include "occlunet/ops.hpp"

// Attention over a window of T frames for one pyramid level. A level window
// is a [T,C,H,W] tensor; tokens are the C-vectors at each (frame, position).
namespace occlunet {

enum class TemporalVariant {
  kTemporal,  // per-location attention across frames
  kDivided,   // temporal then spatial attention per block
};

std::string_view to_string(TemporalVariant v);

/// Which axis a sublayer attends over. kFrames groups tokens by spatial
/// position (L = T); kPositions groups them by frame (L = H*W).
enum class AttentionAxis { kFrames, kPositions };

/// [T,C,H,W] -> token rows [G*L, C] ordered group-major for the given axis.
template <typename T>
Tensor<T> to_tokens(const Tensor<T>& x, AttentionAxis axis);

/// Inverse of to_tokens.
template <typename T>
Tensor<T> from_tokens(const Tensor<T>& tokens, const Shape& shape, AttentionAxis axis);

/// Pre-norm multi-head self-attention with a residual connection:
/// y = x + Wo * MHA(LN(x)), attention restricted to groups of L rows.
template <typename T>
class AttentionSublayer {
 public:
  struct Cache {
    ops::LayerNormCache<T> ln;
    Tensor<T> normed;
    Tensor<T> q, k, v;
    Tensor<T> context;         // concatenated head outputs, input to Wo
    std::vector<T> probs;      // [G][heads][L][L]
    std::size_t groups = 0;
    std::size_t len = 0;
  };

  AttentionSublayer() = default;
  AttentionSublayer(std::size_t channels, std::size_t heads);

  void init(Rng& rng);
  Tensor<T> forward(const Tensor<T>& x, std::size_t groups, std::size_t len,
                    Cache* cache) const;
  Tensor<T> backward(const Tensor<T>& dy, const Cache& cache);
  void visit(const std::string& prefix, const ParamVisitor<T>& fn);

  std::size_t heads() const { return heads_; }

  LayerNormParams<T> norm;
  Linear<T> wq, wk, wv, wo;

 private:
  std::size_t heads_ = 1;
};

/// Pre-norm two-layer MLP (hidden = 2C, SiLU) with residual connection.
template <typename T>
class MlpSublayer {
 public:
  struct Cache {
    ops::LayerNormCache<T> ln;
    Tensor<T> normed;
    Tensor<T> hidden_pre;
    Tensor<T> hidden;
  };

  MlpSublayer() = default;
  explicit MlpSublayer(std::size_t channels);

  void init(Rng& rng);
  Tensor<T> forward(const Tensor<T>& x, Cache* cache) const;
  Tensor<T> backward(const Tensor<T>& dy, const Cache& cache);
  void visit(const std::string& prefix, const ParamVisitor<T>& fn);

  LayerNormParams<T> norm;
  Linear<T> fc1, fc2;
};

enum class BlockKind {
  kTemporal,  // temporal attention + MLP
  kSpatial,   // spatial attention + MLP
  kDivided,   // temporal attention + spatial attention + MLP
};

/// One transformer block over a level window [T,C,H,W].
template <typename T>
class AttentionBlock {
 public:
  struct Cache {
    typename AttentionSublayer<T>::Cache temporal, spatial;
    typename MlpSublayer<T>::Cache mlp;
    Shape shape;
  };

  AttentionBlock() = default;
  AttentionBlock(BlockKind kind, std::size_t channels, std::size_t heads);

  void init(Rng& rng);
  Tensor<T> forward(const Tensor<T>& x, Cache* cache) const;
  Tensor<T> backward(const Tensor<T>& dy, const Cache& cache);
  void visit(const std::string& prefix, const ParamVisitor<T>& fn);

  BlockKind kind() const { return kind_; }

  AttentionSublayer<T> temporal;
  AttentionSublayer<T> spatial;
  MlpSublayer<T> mlp;

 private:
  BlockKind kind_ = BlockKind::kTemporal;
};

/// Learned per-slot embedding added to every position of a frame.
template <typename T>
struct PositionalEncoding {
  Param<T> table;  // [T_max, C]

  PositionalEncoding() = default;
  PositionalEncoding(std::size_t max_frames, std::size_t channels)
      : table(Tensor<T>({max_frames, channels})) {}

  void init(Rng& rng) { fill_uniform(table.value, 0.02, rng); }
};

template <typename T>
Tensor<T> add_positional(const Tensor<T>& x, const PositionalEncoding<T>& pe);

/// Accumulates the table gradient; dL/dx is dy itself.
template <typename T>
void add_positional_backward(const Tensor<T>& dy, PositionalEncoding<T>& pe);

struct TemporalConfig {
  TemporalVariant variant = TemporalVariant::kTemporal;
  std::size_t channels = 32;
  std::size_t heads = 4;
  std::size_t blocks = 1;
  std::size_t max_frames = 3;
};

/// Per-level positional encoding and attention stack (parameters are not
/// shared across levels). Emits the center frame's enhanced pyramid.
template <typename T>
class TemporalModule {
 public:
  struct LevelCache {
    std::vector<typename AttentionBlock<T>::Cache> blocks;
    Shape shape;
  };
  struct Cache {
    std::array<LevelCache, kNumLevels> levels;
    std::size_t frames = 0;
    std::size_t center = 0;
  };

  TemporalModule() = default;
  explicit TemporalModule(const TemporalConfig& cfg);

  void init(Rng& rng);

  /// Runs one level window [T,C,H,W] through positional encoding and all
  /// blocks; returns the full window output.
  Tensor<T> forward_level(std::size_t level, const Tensor<T>& window,
                          LevelCache* cache) const;
  Tensor<T> backward_level(std::size_t level, const Tensor<T>& dy, const LevelCache& cache);

  /// `window[i]` is the pyramid of window slot i; returns the pyramid of slot
  /// `center` after attention.
  FeaturePyramid<T> forward(const std::vector<const FeaturePyramid<T>*>& window,
                            std::size_t center, Cache* cache) const;

  /// Gradients w.r.t. each window slot's input pyramid.
  std::vector<FeaturePyramid<T>> backward(const FeaturePyramid<T>& grad_center,
                                          const Cache& cache);

  void visit(const std::string& prefix, const ParamVisitor<T>& fn);

  const TemporalConfig& config() const { return cfg_; }
  std::array<PositionalEncoding<T>, kNumLevels>& encodings() { return pe_; }
  std::array<std::vector<AttentionBlock<T>>, kNumLevels>& blocks() { return blocks_; }

 private:
  TemporalConfig cfg_;
  std::array<PositionalEncoding<T>, kNumLevels> pe_;
  std::array<std::vector<AttentionBlock<T>>, kNumLevels> blocks_;
};

/// Stacks per-frame maps [C,H,W] into [T,C,H,W].
template <typename T>
Tensor<T> stack_frames(const std::vector<const Tensor<T>*>& frames);

/// Slice of frame `index` from [T,C,H,W].
template <typename T>
Tensor<T> frame_slice(const Tensor<T>& x, std::size_t index);

}  // namespace occlunet

#endif  // OCCLUNET_TEMPORAL_HPP_
