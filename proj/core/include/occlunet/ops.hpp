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

#ifndef OCCLUNET_OPS_HPP_
#define OCCLUNET_OPS_HPP_

#include <cmath>
#include <cstddef>
#include <vector>

#include "occlunet/tensor.hpp"

// Numeric kernels with analytic backward passes. Every reduction sums in
// ascending index order along the reduced axis, so results are reproducible
// against straightforward loop implementations at the same precision.
namespace occlunet::ops {

/// C[M,N] = A[M,K] * B[K,N] (or C += when accumulate), row-major raw buffers.
template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b,
          T* c, bool accumulate);

/// C[M,N] = A^T * B with A stored as [K,M].
template <typename T>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b,
             T* c, bool accumulate);

/// x = e^x elementwise. The float version is a polynomial accurate to about
/// one ulp for x in [-87, 88] (inputs are clamped to that range).
template <typename T>
void exp_inplace(T* x, std::size_t n);

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
struct MatmulGrads {
  Tensor<T> da;
  Tensor<T> db;
};

/// dA = dC * B^T, dB = A^T * dC.
template <typename T>
MatmulGrads<T> matmul_backward(const Tensor<T>& a, const Tensor<T>& b,
                               const Tensor<T>& dc);

template <typename T>
Tensor<T> transpose(const Tensor<T>& a);

/// Softmax along the last axis with max subtraction.
template <typename T>
Tensor<T> softmax_lastdim(const Tensor<T>& x);

/// Given y = softmax(x) and dL/dy, returns dL/dx.
template <typename T>
Tensor<T> softmax_lastdim_backward(const Tensor<T>& y, const Tensor<T>& dy);

struct ConvGeometry {
  std::size_t in_channels = 0;
  std::size_t in_h = 0;
  std::size_t in_w = 0;
  std::size_t out_h = 0;
  std::size_t out_w = 0;
  std::size_t kernel = 0;
  int stride = 1;
  int pad = 0;
};

ConvGeometry conv_geometry(const Shape& input, const Shape& kernels, int stride, int pad);

/// Cross-correlation of x[C_in,H,W] with kernels[C_out,C_in,k,k].
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& kernels, int stride, int pad);

template <typename T>
struct Conv2dGrads {
  Tensor<T> dx;
  Tensor<T> dkernels;
};

template <typename T>
Conv2dGrads<T> conv2d_backward(const Tensor<T>& x, const Tensor<T>& kernels,
                               const Tensor<T>& dy, int stride, int pad);

template <typename T>
struct LayerNormCache {
  Tensor<T> xhat;
  std::vector<T> rstd;
};

/// Normalizes each row of x[N,C] over its C channels, then applies gamma/beta.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     T eps = T(1e-5), LayerNormCache<T>* cache = nullptr);

template <typename T>
struct LayerNormGrads {
  Tensor<T> dx;
  Tensor<T> dgamma;
  Tensor<T> dbeta;
};

template <typename T>
LayerNormGrads<T> layer_norm_backward(const LayerNormCache<T>& cache,
                                      const Tensor<T>& gamma, const Tensor<T>& dy);

template <typename T>
inline T sigmoid(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <typename T>
inline T silu(T x) {
  return x * sigmoid(x);
}

template <typename T>
inline T silu_grad(T x) {
  const T s = sigmoid(x);
  return s * (T(1) + x * (T(1) - s));
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x);

template <typename T>
Tensor<T> silu(const Tensor<T>& x);

/// dL/dx for y = silu(x).
template <typename T>
Tensor<T> silu_backward(const Tensor<T>& x, const Tensor<T>& dy);

}  // namespace occlunet::ops

#endif  // OCCLUNET_OPS_HPP_
