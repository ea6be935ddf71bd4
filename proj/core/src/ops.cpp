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

#include "occlunet/ops.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

namespace occlunet::ops {
namespace {

// Register tile: R rows by W columns of C stay in accumulators while k
// sweeps. Each C element still sums its products in ascending k. With TransA
// the row r, column kk element of A sits at a[kk * lda + r].
template <typename T, std::size_t R, std::size_t W, bool TransA>
void gemm_tile(std::size_t rows, std::size_t width, std::size_t n, std::size_t k, std::size_t lda,
               const T* a, const T* b, T* c) {
  T acc[R][W];
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t j = 0; j < W; ++j) acc[r][j] = (r < rows && j < width) ? c[r * n + j] : T(0);
  for (std::size_t kk = 0; kk < k; ++kk) {
    const T* brow = b + kk * n;
    T bv[W];
    for (std::size_t j = 0; j < W; ++j) bv[j] = j < width ? brow[j] : T(0);
    for (std::size_t r = 0; r < R; ++r) {
      const T av = r < rows ? (TransA ? a[kk * lda + r] : a[r * lda + kk]) : T(0);
      for (std::size_t j = 0; j < W; ++j) acc[r][j] += av * bv[j];
    }
  }
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < width; ++j) c[r * n + j] = acc[r][j];
}

template <typename T, std::size_t W, bool TransA>
void gemm_columns(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c,
                  std::size_t j0, std::size_t width) {
  constexpr std::size_t R = W >= 16 ? 4 : 8;
  const std::size_t lda = TransA ? m : k;
  for (std::size_t i = 0; i < m; i += R) {
    const T* ai = TransA ? a + i : a + i * k;
    gemm_tile<T, R, W, TransA>(std::min(R, m - i), width, n, k, lda, ai, b + j0, c + i * n + j0);
  }
}

template <typename T, bool TransA>
void gemm_dispatch(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c,
                   bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, T(0));
  std::size_t j0 = 0;
  for (; j0 + 16 <= n; j0 += 16) gemm_columns<T, 16, TransA>(m, n, k, a, b, c, j0, 16);
  const std::size_t rest = n - j0;
  if (rest > 8) gemm_columns<T, 16, TransA>(m, n, k, a, b, c, j0, rest);
  else if (rest > 4) gemm_columns<T, 8, TransA>(m, n, k, a, b, c, j0, rest);
  else if (rest > 0) gemm_columns<T, 4, TransA>(m, n, k, a, b, c, j0, rest);
}

template <typename T>
void im2col(const T* x, const ConvGeometry& g, T* cols) {
  const std::size_t k = g.kernel;
  const std::size_t p_count = g.out_h * g.out_w;
  std::size_t row = 0;
  for (std::size_t ci = 0; ci < g.in_channels; ++ci) {
    const T* plane = x + ci * g.in_h * g.in_w;
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx, ++row) {
        T* dst = cols + row * p_count;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const long iy = static_cast<long>(oy) * g.stride - g.pad + static_cast<long>(ky);
          T* drow = dst + oy * g.out_w;
          if (iy < 0 || iy >= static_cast<long>(g.in_h)) {
            std::fill(drow, drow + g.out_w, T(0));
            continue;
          }
          const T* srow = plane + static_cast<std::size_t>(iy) * g.in_w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const long ix = static_cast<long>(ox) * g.stride - g.pad + static_cast<long>(kx);
            drow[ox] = (ix < 0 || ix >= static_cast<long>(g.in_w))
                           ? T(0)
                           : srow[static_cast<std::size_t>(ix)];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* cols, const ConvGeometry& g, T* dx) {
  const std::size_t k = g.kernel;
  const std::size_t p_count = g.out_h * g.out_w;
  std::size_t row = 0;
  for (std::size_t ci = 0; ci < g.in_channels; ++ci) {
    T* plane = dx + ci * g.in_h * g.in_w;
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx, ++row) {
        const T* src = cols + row * p_count;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const long iy = static_cast<long>(oy) * g.stride - g.pad + static_cast<long>(ky);
          if (iy < 0 || iy >= static_cast<long>(g.in_h)) continue;
          T* drow = plane + static_cast<std::size_t>(iy) * g.in_w;
          const T* srow = src + oy * g.out_w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const long ix = static_cast<long>(ox) * g.stride - g.pad + static_cast<long>(kx);
            if (ix < 0 || ix >= static_cast<long>(g.in_w)) continue;
            drow[static_cast<std::size_t>(ix)] += srow[ox];
          }
        }
      }
    }
  }
}

void require_rank(const Shape& s, std::size_t rank, const char* what) {
  if (s.size() != rank) {
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) +
                     ", got shape " + shape_to_string(s));
  }
}

}  // namespace

template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c,
          bool accumulate) {
  gemm_dispatch<T, false>(m, n, k, a, b, c, accumulate);
}

template <typename T>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c,
             bool accumulate) {
  gemm_dispatch<T, true>(m, n, k, a, b, c, accumulate);
}

template <>
void exp_inplace<float>(float* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = std::max(std::min(x[i], 88.0f), -87.0f);
  for (std::size_t i = 0; i < n; ++i) {
    const float v = x[i];
    // floor(v * log2(e) + 0.5); the operand is positive after the clamp.
    const std::int32_t e = static_cast<std::int32_t>(v * 1.44269504088896341f + 200.5f) - 200;
    const float fn = static_cast<float>(e);
    const float r = (v - fn * 0.693359375f) + fn * 2.12194440e-4f;
    float p = 1.9875691500e-4f;
    p = p * r + 1.3981999507e-3f;
    p = p * r + 8.3334519073e-3f;
    p = p * r + 4.1665795894e-2f;
    p = p * r + 1.6666665459e-1f;
    p = p * r + 5.0000001201e-1f;
    const float y = p * r * r + r + 1.0f;
    x[i] = y * std::bit_cast<float>((e + 127) << 23);
  }
}

template <>
void exp_inplace<double>(double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = std::exp(x[i]);
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank(a.shape(), 2, "matmul lhs");
  require_rank(b.shape(), 2, "matmul rhs");
  if (a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul inner extents differ: " + shape_to_string(a.shape()) +
                     " x " + shape_to_string(b.shape()));
  }
  Tensor<T> c({a.dim(0), b.dim(1)});
  gemm(a.dim(0), b.dim(1), a.dim(1), a.data(), b.data(), c.data(), false);
  return c;
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
  require_rank(a.shape(), 2, "transpose");
  const std::size_t rows = a.dim(0), cols = a.dim(1);
  Tensor<T> t({cols, rows});
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) t[j * rows + i] = a[i * cols + j];
  return t;
}

template <typename T>
MatmulGrads<T> matmul_backward(const Tensor<T>& a, const Tensor<T>& b,
                               const Tensor<T>& dc) {
  if (dc.rank() != 2 || dc.dim(0) != a.dim(0) || dc.dim(1) != b.dim(1)) {
    throw ShapeError("matmul_backward: upstream gradient shape " +
                     shape_to_string(dc.shape()) + " inconsistent with operands");
  }
  return {matmul(dc, transpose(b)), matmul(transpose(a), dc)};
}

template <typename T>
Tensor<T> softmax_lastdim(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  const std::size_t n = x.shape().back();
  const std::size_t rows = x.size() / n;
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x.data() + r * n;
    T* yr = y.data() + r * n;
    T mx = xr[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, xr[i]);
    T sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      yr[i] = std::exp(xr[i] - mx);
      sum += yr[i];
    }
    const T inv = T(1) / sum;
    for (std::size_t i = 0; i < n; ++i) yr[i] *= inv;
  }
  return y;
}

template <typename T>
Tensor<T> softmax_lastdim_backward(const Tensor<T>& y, const Tensor<T>& dy) {
  y.require_same_shape(dy, "softmax_lastdim_backward");
  Tensor<T> dx(y.shape());
  const std::size_t n = y.shape().back();
  const std::size_t rows = y.size() / n;
  for (std::size_t r = 0; r < rows; ++r) {
    const T* yr = y.data() + r * n;
    const T* gr = dy.data() + r * n;
    T dot = 0;
    for (std::size_t i = 0; i < n; ++i) dot += yr[i] * gr[i];
    T* dr = dx.data() + r * n;
    for (std::size_t i = 0; i < n; ++i) dr[i] = yr[i] * (gr[i] - dot);
  }
  return dx;
}

ConvGeometry conv_geometry(const Shape& input, const Shape& kernels, int stride, int pad) {
  require_rank(input, 3, "conv2d input");
  require_rank(kernels, 4, "conv2d kernels");
  if (kernels[1] != input[0]) {
    throw ShapeError("conv2d: kernel expects " + std::to_string(kernels[1]) +
                     " input channels, input has " + std::to_string(input[0]));
  }
  if (kernels[2] != kernels[3] || kernels[2] % 2 == 0) {
    throw ShapeError("conv2d: kernel must be square with odd extent, got " +
                     shape_to_string(kernels));
  }
  if (stride < 1 || pad < 0) throw ShapeError("conv2d: stride must be >= 1 and pad >= 0");
  const long k = static_cast<long>(kernels[2]);
  const long oh = (static_cast<long>(input[1]) + 2 * pad - k) / stride + 1;
  const long ow = (static_cast<long>(input[2]) + 2 * pad - k) / stride + 1;
  if (static_cast<long>(input[1]) + 2 * pad - k < 0 ||
      static_cast<long>(input[2]) + 2 * pad - k < 0 || oh < 1 || ow < 1) {
    throw ShapeError("conv2d: non-positive output extent for input " +
                     shape_to_string(input) + " and kernel " + shape_to_string(kernels));
  }
  ConvGeometry g;
  g.in_channels = input[0];
  g.in_h = input[1];
  g.in_w = input[2];
  g.out_h = static_cast<std::size_t>(oh);
  g.out_w = static_cast<std::size_t>(ow);
  g.kernel = kernels[2];
  g.stride = stride;
  g.pad = pad;
  return g;
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& kernels, int stride, int pad) {
  const ConvGeometry g = conv_geometry(x.shape(), kernels.shape(), stride, pad);
  const std::size_t out_c = kernels.dim(0);
  const std::size_t ck = g.in_channels * g.kernel * g.kernel;
  const std::size_t p_count = g.out_h * g.out_w;
  Tensor<T> y({out_c, g.out_h, g.out_w});
  if (g.kernel == 1 && stride == 1 && pad == 0) {
    gemm(out_c, p_count, ck, kernels.data(), x.data(), y.data(), false);
    return y;
  }
  std::vector<T> cols(ck * p_count);
  im2col(x.data(), g, cols.data());
  gemm(out_c, p_count, ck, kernels.data(), cols.data(), y.data(), false);
  return y;
}

template <typename T>
Conv2dGrads<T> conv2d_backward(const Tensor<T>& x, const Tensor<T>& kernels,
                               const Tensor<T>& dy, int stride, int pad) {
  const ConvGeometry g = conv_geometry(x.shape(), kernels.shape(), stride, pad);
  const std::size_t out_c = kernels.dim(0);
  const std::size_t ck = g.in_channels * g.kernel * g.kernel;
  const std::size_t p_count = g.out_h * g.out_w;
  if (dy.shape() != Shape{out_c, g.out_h, g.out_w}) {
    throw ShapeError("conv2d_backward: upstream gradient shape " +
                     shape_to_string(dy.shape()));
  }
  const bool pointwise = g.kernel == 1 && stride == 1 && pad == 0;
  std::vector<T> cols;
  const T* cols_ptr = x.data();
  if (!pointwise) {
    cols.resize(ck * p_count);
    im2col(x.data(), g, cols.data());
    cols_ptr = cols.data();
  }

  // dK[co, ck] = sum_p dY[co, p] * cols[ck, p]; computed against cols^T.
  std::vector<T> cols_t(p_count * ck);
  for (std::size_t r = 0; r < ck; ++r)
    for (std::size_t p = 0; p < p_count; ++p) cols_t[p * ck + r] = cols_ptr[r * p_count + p];
  Tensor<T> dk(kernels.shape());
  gemm(out_c, ck, p_count, dy.data(), cols_t.data(), dk.data(), false);

  // dcols[ck, p] = sum_co K[co, ck] * dY[co, p].
  std::vector<T> k_t(ck * out_c);
  for (std::size_t co = 0; co < out_c; ++co)
    for (std::size_t r = 0; r < ck; ++r) k_t[r * out_c + co] = kernels[co * ck + r];
  Tensor<T> dx(x.shape());
  if (pointwise) {
    gemm(ck, p_count, out_c, k_t.data(), dy.data(), dx.data(), false);
  } else {
    std::vector<T> dcols(ck * p_count);
    gemm(ck, p_count, out_c, k_t.data(), dy.data(), dcols.data(), false);
    col2im_add(dcols.data(), g, dx.data());
  }
  return {std::move(dx), std::move(dk)};
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     T eps, LayerNormCache<T>* cache) {
  require_rank(x.shape(), 2, "layer_norm");
  const std::size_t rows = x.dim(0), c = x.dim(1);
  if (gamma.size() != c || beta.size() != c) {
    throw ShapeError("layer_norm: affine parameters must have " + std::to_string(c) +
                     " entries");
  }
  if (!(eps > T(0))) throw std::invalid_argument("layer_norm: eps must be positive");
  Tensor<T> y(x.shape());
  Tensor<T> xhat(x.shape());
  std::vector<T> rstd(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x.data() + r * c;
    T mean = 0;
    for (std::size_t i = 0; i < c; ++i) mean += xr[i];
    mean /= static_cast<T>(c);
    T var = 0;
    for (std::size_t i = 0; i < c; ++i) var += (xr[i] - mean) * (xr[i] - mean);
    var /= static_cast<T>(c);
    const T rs = T(1) / std::sqrt(var + eps);
    rstd[r] = rs;
    T* hr = xhat.data() + r * c;
    T* yr = y.data() + r * c;
    for (std::size_t i = 0; i < c; ++i) {
      hr[i] = (xr[i] - mean) * rs;
      yr[i] = gamma[i] * hr[i] + beta[i];
    }
  }
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->rstd = std::move(rstd);
  }
  return y;
}

template <typename T>
LayerNormGrads<T> layer_norm_backward(const LayerNormCache<T>& cache,
                                      const Tensor<T>& gamma, const Tensor<T>& dy) {
  cache.xhat.require_same_shape(dy, "layer_norm_backward");
  const std::size_t rows = dy.dim(0), c = dy.dim(1);
  LayerNormGrads<T> g{Tensor<T>(dy.shape()), Tensor<T>({c}), Tensor<T>({c})};
  std::vector<T> dxhat(c);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* hr = cache.xhat.data() + r * c;
    const T* gr = dy.data() + r * c;
    T mean_d = 0, mean_dh = 0;
    for (std::size_t i = 0; i < c; ++i) {
      dxhat[i] = gr[i] * gamma[i];
      mean_d += dxhat[i];
      mean_dh += dxhat[i] * hr[i];
      g.dgamma[i] += gr[i] * hr[i];
      g.dbeta[i] += gr[i];
    }
    mean_d /= static_cast<T>(c);
    mean_dh /= static_cast<T>(c);
    T* dr = g.dx.data() + r * c;
    for (std::size_t i = 0; i < c; ++i)
      dr[i] = cache.rstd[r] * (dxhat[i] - mean_d - hr[i] * mean_dh);
  }
  return g;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = sigmoid(x[i]);
  return y;
}

template <typename T>
Tensor<T> silu(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = silu(x[i]);
  return y;
}

template <typename T>
Tensor<T> silu_backward(const Tensor<T>& x, const Tensor<T>& dy) {
  x.require_same_shape(dy, "silu_backward");
  Tensor<T> dx(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) dx[i] = dy[i] * silu_grad(x[i]);
  return dx;
}

#define OCCLUNET_INSTANTIATE_OPS(T)                                                   \
  template void gemm<T>(std::size_t, std::size_t, std::size_t, const T*, const T*, T*, \
                        bool);                                                        \
  template void gemm_tn<T>(std::size_t, std::size_t, std::size_t, const T*, const T*,  \
                           T*, bool);                                                 \
  template Tensor<T> matmul<T>(const Tensor<T>&, const Tensor<T>&);                    \
  template MatmulGrads<T> matmul_backward<T>(const Tensor<T>&, const Tensor<T>&,       \
                                             const Tensor<T>&);                        \
  template Tensor<T> transpose<T>(const Tensor<T>&);                                   \
  template Tensor<T> softmax_lastdim<T>(const Tensor<T>&);                             \
  template Tensor<T> softmax_lastdim_backward<T>(const Tensor<T>&, const Tensor<T>&);  \
  template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&, int, int);          \
  template Conv2dGrads<T> conv2d_backward<T>(const Tensor<T>&, const Tensor<T>&,       \
                                             const Tensor<T>&, int, int);              \
  template Tensor<T> layer_norm<T>(const Tensor<T>&, const Tensor<T>&,                 \
                                   const Tensor<T>&, T, LayerNormCache<T>*);           \
  template LayerNormGrads<T> layer_norm_backward<T>(const LayerNormCache<T>&,          \
                                                    const Tensor<T>&, const Tensor<T>&); \
  template Tensor<T> sigmoid<T>(const Tensor<T>&);                                     \
  template Tensor<T> silu<T>(const Tensor<T>&);                                        \
  template Tensor<T> silu_backward<T>(const Tensor<T>&, const Tensor<T>&);

OCCLUNET_INSTANTIATE_OPS(float)
OCCLUNET_INSTANTIATE_OPS(double)

#undef OCCLUNET_INSTANTIATE_OPS

}  // namespace occlunet::ops
