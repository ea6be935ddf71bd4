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


#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "occlunet/gradcheck.hpp"
#include "occlunet/layers.hpp"
#include "occlunet/ops.hpp"

namespace occlunet {
namespace {

Tensor<double> random_tensor(Shape shape, std::uint64_t seed) {
  Tensor<double> t(std::move(shape));
  Rng rng(seed);
  fill_uniform(t, 1.0, rng);
  return t;
}

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  Tensor<double> eye({2, 2}, {1, 0, 0, 1});
  Tensor<double> m({2, 2}, {1, 2, 3, 4});
  EXPECT_EQ(ops::matmul(eye, m), m);
}

TEST(Matmul, RowTimesColumn) {
  const auto c = ops::matmul(Tensor<double>({1, 2}, {1, 2}), Tensor<double>({2, 1}, {3, 4}));
  EXPECT_EQ(c.shape(), (Shape{1, 1}));
  EXPECT_EQ(c[0], 11.0);
}

TEST(Matmul, MatchesTripleLoop) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto a = random_tensor({5, 4}, seed), b = random_tensor({4, 3}, seed + 100);
    const auto c = ops::matmul(a, b);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 3; ++j) {
        double acc = 0;
        for (std::size_t k = 0; k < 4; ++k) acc += a.at(i, k) * b.at(k, j);
        EXPECT_EQ(c.at(i, j), acc);
      }
  }
}

TEST(Matmul, LargeShapesMatchTripleLoop) {
  const auto a = random_tensor({37, 70}, 3), b = random_tensor({70, 45}, 4);
  const auto c = ops::matmul(a, b);
  for (std::size_t i = 0; i < 37; ++i)
    for (std::size_t j = 0; j < 45; ++j) {
      double acc = 0;
      for (std::size_t k = 0; k < 70; ++k) acc += a.at(i, k) * b.at(k, j);
      EXPECT_NEAR(c.at(i, j), acc, 1e-12);
    }
}

TEST(Gemm, EveryWidthMatchesTripleLoopBitForBit) {
  for (std::size_t n = 1; n <= 37; ++n) {
    const std::size_t m = 1 + n % 11, k = 1 + (3 * n) % 13;
    Tensor<float> a({m, k}), at({k, m}), b({k, n}), c0({m, n});
    Rng rng(n);
    std::uniform_real_distribution<float> u(-1, 1);
    for (auto& v : a.values()) v = u(rng);
    for (auto& v : b.values()) v = u(rng);
    for (auto& v : c0.values()) v = u(rng);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t kk = 0; kk < k; ++kk) at.at(kk, i) = a.at(i, kk);
    for (bool accumulate : {false, true}) {
      auto c = c0, ct = c0;
      ops::gemm(m, n, k, a.data(), b.data(), c.data(), accumulate);
      ops::gemm_tn(m, n, k, at.data(), b.data(), ct.data(), accumulate);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          float acc = accumulate ? c0.at(i, j) : 0.0f;
          for (std::size_t kk = 0; kk < k; ++kk) {
            const float prod = a.at(i, kk) * b.at(kk, j);
            acc += prod;
          }
          ASSERT_EQ(c.at(i, j), acc) << m << "x" << n << "x" << k;
          ASSERT_EQ(ct.at(i, j), acc) << m << "x" << n << "x" << k;
        }
    }
  }
}

TEST(ExpInplace, FloatWithinTwoUlpOfLibm) {
  std::vector<float> x;
  for (float v = -87.0f; v <= 88.0f; v += 0.0137f) x.push_back(v);
  x.push_back(0.0f);
  auto y = x;
  ops::exp_inplace(y.data(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    ASSERT_NEAR(y[i] / std::exp(static_cast<double>(x[i])), 1.0, 2.4e-7) << x[i];
  EXPECT_EQ(y.back(), 1.0f);
  std::vector<float> far = {-1000.0f, 1000.0f};
  ops::exp_inplace(far.data(), far.size());
  EXPECT_GT(far[0], 0.0f);
  EXPECT_LT(far[0], 1e-37f);
  EXPECT_TRUE(std::isfinite(far[1]));
}

TEST(Matmul, RejectsMismatchedInnerDims) {
  EXPECT_THROW(ops::matmul(Tensor<double>({2, 3}), Tensor<double>({2, 3})), std::invalid_argument);
}

TEST(Softmax, ClosedForms) {
  auto y = ops::softmax_lastdim(Tensor<double>({2}, {0, 0}));
  EXPECT_DOUBLE_EQ(y[0], 0.5);
  EXPECT_DOUBLE_EQ(y[1], 0.5);
  y = ops::softmax_lastdim(Tensor<double>({2}, {1000, 1000}));
  EXPECT_DOUBLE_EQ(y[0], 0.5);
  EXPECT_DOUBLE_EQ(y[1], 0.5);
  y = ops::softmax_lastdim(Tensor<double>({2}, {0, std::log(3.0)}));
  EXPECT_NEAR(y[0], 0.25, 1e-15);
  EXPECT_NEAR(y[1], 0.75, 1e-15);
}

TEST(Softmax, RowsSumToOneInOpenInterval) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> d(-300, 300);
  Tensor<double> x({16, 7});
  for (auto& v : x.values()) v = d(rng);
  const auto y = ops::softmax_lastdim(x);
  for (std::size_t r = 0; r < 16; ++r) {
    double sum = 0;
    for (std::size_t c = 0; c < 7; ++c) {
      EXPECT_GE(y.at(r, c), 0.0);
      EXPECT_LE(y.at(r, c), 1.0);
      sum += y.at(r, c);
    }
    EXPECT_NEAR(sum, 1.0, 1e-6);
  }
}

TEST(Softmax, ShiftInvariant) {
  const auto x = random_tensor({4, 5}, 11);
  for (double c : {-64.0, 0.5, 3.0, 1024.0}) {
    auto shifted = x;
    for (auto& v : shifted.values()) v += c;
    const auto a = ops::softmax_lastdim(x), b = ops::softmax_lastdim(shifted);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
  }
}

Tensor<double> naive_conv(const Tensor<double>& x, const Tensor<double>& k, int stride, int pad) {
  const long ci = x.dim(0), h = x.dim(1), w = x.dim(2), co = k.dim(0), ks = k.dim(2);
  const long oh = (h + 2 * pad - ks) / stride + 1, ow = (w + 2 * pad - ks) / stride + 1;
  Tensor<double> y({std::size_t(co), std::size_t(oh), std::size_t(ow)});
  for (long o = 0; o < co; ++o)
    for (long r = 0; r < oh; ++r)
      for (long c = 0; c < ow; ++c) {
        double acc = 0;
        for (long i = 0; i < ci; ++i)
          for (long u = 0; u < ks; ++u)
            for (long v = 0; v < ks; ++v) {
              const long yy = r * stride + u - pad, xx = c * stride + v - pad;
              if (yy < 0 || xx < 0 || yy >= h || xx >= w) continue;
              acc += x.at(i, yy, xx) * k.at(o, i, u, v);
            }
        y.at(o, r, c) = acc;
      }
  return y;
}

TEST(Conv2d, IdentityKernel) {
  const auto x = random_tensor({1, 4, 5}, 2);
  EXPECT_EQ(ops::conv2d(x, Tensor<double>({1, 1, 1, 1}, 1.0), 1, 0), x);
}

TEST(Conv2d, OnesKernelSums) {
  const auto y = ops::conv2d(Tensor<double>({1, 3, 3}, 1.0), Tensor<double>({1, 1, 3, 3}, 1.0), 1, 0);
  EXPECT_EQ(y.shape(), (Shape{1, 1, 1}));
  EXPECT_EQ(y[0], 9.0);
}

TEST(Conv2d, MatchesNaiveLoop) {
  const auto x = random_tensor({2, 5, 5}, 5), k = random_tensor({3, 2, 3, 3}, 6);
  const auto y = ops::conv2d(x, k, 1, 0);
  const auto ref = naive_conv(x, k, 1, 0);
  ASSERT_EQ(y.shape(), ref.shape());
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_EQ(y[i], ref[i]);
}

TEST(Conv2d, StridedPaddedMatchesNaiveLoop) {
  const auto x = random_tensor({3, 9, 8}, 7), k = random_tensor({4, 3, 3, 3}, 8);
  for (int stride : {1, 2})
    for (int pad : {0, 1}) {
      const auto y = ops::conv2d(x, k, stride, pad);
      const auto ref = naive_conv(x, k, stride, pad);
      ASSERT_EQ(y.shape(), ref.shape());
      for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], ref[i], 1e-13);
    }
}

TEST(LayerNorm, ConstantInputIsZero) {
  const auto y = ops::layer_norm(Tensor<double>({2, 4}, 3.5), Tensor<double>({4}, 1.0), Tensor<double>({4}, 0.0));
  for (double v : y.values()) EXPECT_EQ(v, 0.0);
}

TEST(LayerNorm, TwoValueClosedForm) {
  const auto y = ops::layer_norm(Tensor<double>({1, 2}, {1, 3}), Tensor<double>({2}, 1.0), Tensor<double>({2}, 0.0),
                                 1e-15);
  EXPECT_NEAR(y[0], -1.0, 1e-12);
  EXPECT_NEAR(y[1], 1.0, 1e-12);
}

TEST(LayerNorm, ZeroGammaCollapsesToBeta) {
  const auto y = ops::layer_norm(random_tensor({3, 5}, 4), Tensor<double>({5}, 0.0), Tensor<double>({5}, 0.7));
  for (double v : y.values()) EXPECT_EQ(v, 0.7);
}

TEST(GradCheck, QuadraticIsExact) {
  const ScalarFn f = [](const Tensor<double>& x, Tensor<double>* g) {
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      s += x[i] * x[i];
      if (g) (*g)[i] = 2 * x[i];
    }
    return s;
  };
  Tensor<double> x({3}, {1, 2, 3});
  Tensor<double> g({3});
  f(x, &g);
  EXPECT_EQ(g, Tensor<double>({3}, {2, 4, 6}));
  EXPECT_LT(finite_diff_check(f, x), 1e-8);
}

TEST(GradCheck, SoftmaxCrossEntropy) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto logits = random_tensor({3, 6}, seed);
    const ScalarFn f = [](const Tensor<double>& x, Tensor<double>* g) {
      const auto p = ops::softmax_lastdim(x);
      double loss = 0;
      for (std::size_t r = 0; r < 3; ++r) {
        const std::size_t label = r * 2;
        loss -= std::log(p.at(r, label));
        if (g)
          for (std::size_t c = 0; c < 6; ++c) g->at(r, c) = p.at(r, c) - (c == label ? 1.0 : 0.0);
      }
      return loss;
    };
    EXPECT_LT(finite_diff_check(f, logits), 1e-6) << "seed " << seed;
  }
}

TEST(GradCheck, DetectsWrongGradient) {
  const ScalarFn f = [](const Tensor<double>& x, Tensor<double>* g) {
    if (g) (*g)[0] = 3 * x[0];
    return x[0] * x[0];
  };
  EXPECT_GT(finite_diff_check(f, Tensor<double>({1}, {2.0})), 0.1);
}

TEST(Silu, ValuesAndSaturation) {
  EXPECT_EQ(ops::silu(0.0), 0.0);
  EXPECT_NEAR(ops::silu(1.0), 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(ops::sigmoid(-800.0), 0.0, 1e-300);
  EXPECT_EQ(ops::sigmoid(800.0), 1.0);
}

}  // namespace
}  // namespace occlunet
