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

#include "occlunet/layers.hpp"

#include <cmath>

namespace occlunet {

template <typename T>
Conv2dLayer<T>::Conv2dLayer(std::size_t in_channels, std::size_t out_channels,
                            std::size_t kernel, int stride_, bool activate_)
    : weight(Tensor<T>({out_channels, in_channels, kernel, kernel})),
      bias(Tensor<T>({out_channels})),
      stride(stride_),
      pad(static_cast<int>(kernel / 2)),
      activate(activate_) {}

template <typename T>
void Conv2dLayer<T>::init(Rng& rng, T bias_value) {
  const auto& s = weight.value.shape();
  const double fan_in = static_cast<double>(s[1] * s[2] * s[3]);
  const double bound = activate ? std::sqrt(6.0 / fan_in) : std::sqrt(1.0 / fan_in);
  fill_uniform(weight.value, bound, rng);
  bias.value.fill(bias_value);
}

template <typename T>
Tensor<T> Conv2dLayer<T>::forward(const Tensor<T>& x, Cache* cache) const {
  Tensor<T> y = ops::conv2d(x, weight.value, stride, pad);
  const std::size_t c = y.dim(0);
  const std::size_t plane = y.dim(1) * y.dim(2);
  for (std::size_t ch = 0; ch < c; ++ch) {
    const T b = bias.value[ch];
    T* p = y.data() + ch * plane;
    for (std::size_t i = 0; i < plane; ++i) p[i] += b;
  }
  if (cache) cache->input = x;
  if (!activate) return y;
  if (cache) cache->pre = y;
  for (auto& v : y.values()) v = ops::silu(v);
  return y;
}

template <typename T>
Tensor<T> Conv2dLayer<T>::backward(const Tensor<T>& dy, const Cache& cache) {
  Tensor<T> dpre = activate ? ops::silu_backward(cache.pre, dy) : dy;
  const std::size_t c = dpre.dim(0);
  const std::size_t plane = dpre.dim(1) * dpre.dim(2);
  for (std::size_t ch = 0; ch < c; ++ch) {
    const T* p = dpre.data() + ch * plane;
    T acc = 0;
    for (std::size_t i = 0; i < plane; ++i) acc += p[i];
    bias.grad[ch] += acc;
  }
  auto g = ops::conv2d_backward(cache.input, weight.value, dpre, stride, pad);
  weight.grad += g.dkernels;
  return std::move(g.dx);
}

template <typename T>
void Conv2dLayer<T>::visit(const std::string& prefix, const ParamVisitor<T>& fn) {
  fn(prefix + ".weight", weight);
  fn(prefix + ".bias", bias);
}

template <typename T>
Linear<T>::Linear(std::size_t in, std::size_t out)
    : weight(Tensor<T>({in, out})), bias(Tensor<T>({out})) {}

template <typename T>
void Linear<T>::init(Rng& rng) {
  fill_uniform(weight.value, std::sqrt(3.0 / static_cast<double>(weight.value.dim(0))), rng);
  bias.value.fill(T(0));
}

template <typename T>
Tensor<T> Linear<T>::forward(const Tensor<T>& x) const {
  Tensor<T> y = ops::matmul(x, weight.value);
  const std::size_t out = y.dim(1);
  for (std::size_t r = 0; r < y.dim(0); ++r)
    for (std::size_t j = 0; j < out; ++j) y[r * out + j] += bias.value[j];
  return y;
}

template <typename T>
Tensor<T> Linear<T>::backward(const Tensor<T>& x, const Tensor<T>& dy) {
  auto g = ops::matmul_backward(x, weight.value, dy);
  weight.grad += g.db;
  const std::size_t out = dy.dim(1);
  for (std::size_t r = 0; r < dy.dim(0); ++r)
    for (std::size_t j = 0; j < out; ++j) bias.grad[j] += dy[r * out + j];
  return std::move(g.da);
}

template <typename T>
void Linear<T>::visit(const std::string& prefix, const ParamVisitor<T>& fn) {
  fn(prefix + ".weight", weight);
  fn(prefix + ".bias", bias);
}

template <typename T>
Tensor<T> upsample2x(const Tensor<T>& x) {
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor<T> y({c, 2 * h, 2 * w});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t yy = 0; yy < 2 * h; ++yy)
      for (std::size_t xx = 0; xx < 2 * w; ++xx)
        y[(ch * 2 * h + yy) * 2 * w + xx] = x[(ch * h + yy / 2) * w + xx / 2];
  return y;
}

template <typename T>
Tensor<T> upsample2x_backward(const Tensor<T>& dy) {
  const std::size_t c = dy.dim(0), h = dy.dim(1) / 2, w = dy.dim(2) / 2;
  Tensor<T> dx({c, h, w});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t yy = 0; yy < 2 * h; ++yy)
      for (std::size_t xx = 0; xx < 2 * w; ++xx)
        dx[(ch * h + yy / 2) * w + xx / 2] += dy[(ch * 2 * h + yy) * 2 * w + xx];
  return dx;
}

template class Conv2dLayer<float>;
template class Conv2dLayer<double>;
template class Linear<float>;
template class Linear<double>;
template Tensor<float> upsample2x<float>(const Tensor<float>&);
template Tensor<double> upsample2x<double>(const Tensor<double>&);
template Tensor<float> upsample2x_backward<float>(const Tensor<float>&);
template Tensor<double> upsample2x_backward<double>(const Tensor<double>&);

}  // namespace occlunet
