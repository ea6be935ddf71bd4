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

#ifndef OCCLUNET_LAYERS_HPP_
#define OCCLUNET_LAYERS_HPP_

#include <cstddef>
#include <functional>
#include <random>
#include <string>

#include "occlunet/ops.hpp"
#include "occlunet/tensor.hpp"

namespace occlunet {

using Rng = std::mt19937_64;

template <typename T>
using ParamVisitor = std::function<void(const std::string& name, Param<T>& param)>;

/// Fills t with U(-bound, bound).
template <typename T>
void fill_uniform(Tensor<T>& t, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : t.values()) v = static_cast<T>(dist(rng));
}

/// Convolution + bias, optionally followed by SiLU. Padding keeps "same"
/// extents at stride 1.
template <typename T>
class Conv2dLayer {
 public:
  struct Cache {
    Tensor<T> input;
    Tensor<T> pre;  // pre-activation, only kept when activate
  };

  Conv2dLayer() = default;
  Conv2dLayer(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
              int stride, bool activate);

  /// He-uniform weights for activated layers, fan-in scaling otherwise.
  void init(Rng& rng, T bias_value = T(0));

  Tensor<T> forward(const Tensor<T>& x, Cache* cache) const;

  /// Accumulates weight/bias gradients and returns dL/dx.
  Tensor<T> backward(const Tensor<T>& dy, const Cache& cache);

  void visit(const std::string& prefix, const ParamVisitor<T>& fn);

  std::size_t out_channels() const { return weight.value.dim(0); }

  Param<T> weight;
  Param<T> bias;
  int stride = 1;
  int pad = 0;
  bool activate = true;
};

/// Dense layer applied to rows: Y[N,out] = X[N,in] * W[in,out] + b.
template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(std::size_t in, std::size_t out);

  void init(Rng& rng);
  Tensor<T> forward(const Tensor<T>& x) const;
  /// x is the forward input; accumulates grads, returns dL/dx.
  Tensor<T> backward(const Tensor<T>& x, const Tensor<T>& dy);
  void visit(const std::string& prefix, const ParamVisitor<T>& fn);

  Param<T> weight;
  Param<T> bias;
};

template <typename T>
struct LayerNormParams {
  Param<T> gamma;
  Param<T> beta;

  explicit LayerNormParams(std::size_t c = 1)
      : gamma(Tensor<T>({c}, T(1))), beta(Tensor<T>({c})) {}

  void visit(const std::string& prefix, const ParamVisitor<T>& fn) {
    fn(prefix + ".gamma", gamma);
    fn(prefix + ".beta", beta);
  }
};

/// Nearest-neighbour 2x upsampling of [C,H,W].
template <typename T>
Tensor<T> upsample2x(const Tensor<T>& x);

/// Adjoint of upsample2x: sums each 2x2 block.
template <typename T>
Tensor<T> upsample2x_backward(const Tensor<T>& dy);

}  // namespace occlunet

#endif  // OCCLUNET_LAYERS_HPP_
