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

#include "occlunet/gradsuite.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "occlunet/gradcheck.hpp"
#include "occlunet/model.hpp"
#include "occlunet/ops.hpp"
#include "occlunet/temporal.hpp"
#include "occlunet/training.hpp"

namespace occlunet {

namespace {

using D = double;

Tensor<D> random_tensor(Shape shape, Rng& rng, double bound = 1.0) {
  Tensor<D> t(std::move(shape));
  fill_uniform(t, bound, rng);
  return t;
}

double weighted_sum(const Tensor<D>& y, const Tensor<D>& w) {
  double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y.data()[i] * w.data()[i];
  return s;
}

struct Target {
  Tensor<D>* value;
  const Tensor<D>* grad;
};

// `loss(true)` must recompute from the current values and refresh every
// target's gradient tensor.
double check_targets(const std::function<double(bool)>& loss, const std::vector<Target>& targets,
                     Rng& rng, std::size_t max_coords, bool corrupt) {
  double worst = 0;
  for (const auto& tg : targets) {
    const Tensor<D> base = *tg.value;
    std::vector<std::size_t> idx(base.size());
    std::iota(idx.begin(), idx.end(), 0);
    if (idx.size() > max_coords) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(max_coords);
    }
    Tensor<D> z0({idx.size()});
    for (std::size_t i = 0; i < idx.size(); ++i) z0.data()[i] = base.data()[idx[i]];
    ScalarFn f = [&](const Tensor<D>& z, Tensor<D>* g) {
      for (std::size_t i = 0; i < idx.size(); ++i) tg.value->data()[idx[i]] = z.data()[i];
      const double l = loss(g != nullptr);
      if (g) {
        *g = Tensor<D>({idx.size()});
        for (std::size_t i = 0; i < idx.size(); ++i) {
          const double a = tg.grad->data()[idx[i]];
          g->data()[i] = corrupt ? a * 1.5 + 0.01 : a;
        }
      }
      return l;
    };
    worst = std::max(worst, finite_diff_check(f, z0));
    *tg.value = base;
  }
  return worst;
}

template <typename Module>
std::vector<Target> param_targets(Module& m) {
  std::vector<Target> out;
  m.visit("m", [&](const std::string&, Param<D>& p) { out.push_back({&p.value, &p.grad}); });
  return out;
}

double case_matmul(std::uint64_t seed, bool corrupt) {
  Rng rng(seed);
  Tensor<D> a = random_tensor({5, 4}, rng), b = random_tensor({4, 3}, rng);
  const Tensor<D> w = random_tensor({5, 3}, rng);
  ops::MatmulGrads<D> g;
  auto loss = [&](bool grad) {
    const auto c = ops::matmul(a, b);
    if (grad) g = ops::matmul_backward(a, b, w);
    return weighted_sum(c, w);
  };
  return check_targets(loss, {{&a, &g.da}, {&b, &g.db}}, rng, 64, corrupt);
}

double case_conv2d(std::uint64_t seed, bool corrupt) {
  Rng rng(seed);
  const int stride = 1 + static_cast<int>(seed % 2), pad = static_cast<int>((seed / 2) % 2);
  Tensor<D> x = random_tensor({2, 5, 5}, rng), k = random_tensor({3, 2, 3, 3}, rng);
  const auto geo = ops::conv_geometry(x.shape(), k.shape(), stride, pad);
  const Tensor<D> w = random_tensor({3, geo.out_h, geo.out_w}, rng);
  ops::Conv2dGrads<D> g;
  auto loss = [&](bool grad) {
    const auto y = ops::conv2d(x, k, stride, pad);
    if (grad) g = ops::conv2d_backward(x, k, w, stride, pad);
    return weighted_sum(y, w);
  };
  return check_targets(loss, {{&x, &g.dx}, {&k, &g.dkernels}}, rng, 128, corrupt);
}

double case_layer_norm(std::uint64_t seed, bool corrupt) {
  Rng rng(seed);
  Tensor<D> x = random_tensor({6, 5}, rng, 2.0);
  Tensor<D> gamma = random_tensor({5}, rng), beta = random_tensor({5}, rng);
  const Tensor<D> w = random_tensor({6, 5}, rng);
  ops::LayerNormGrads<D> g;
  auto loss = [&](bool grad) {
    ops::LayerNormCache<D> cache;
    const auto y = ops::layer_norm(x, gamma, beta, 1e-5, &cache);
    if (grad) g = ops::layer_norm_backward(cache, gamma, w);
    return weighted_sum(y, w);
  };
  return check_targets(loss, {{&x, &g.dx}, {&gamma, &g.dgamma}, {&beta, &g.dbeta}}, rng, 64, corrupt);
}

double case_softmax_xent(std::uint64_t seed, bool corrupt) {
  Rng rng(seed);
  Tensor<D> x = random_tensor({4, 6}, rng, 3.0);
  std::vector<std::size_t> label(4);
  for (auto& l : label) l = std::uniform_int_distribution<std::size_t>(0, 5)(rng);
  Tensor<D> dx;
  auto loss = [&](bool grad) {
    const auto y = ops::softmax_lastdim(x);
    double l = 0;
    Tensor<D> dy = Tensor<D>::zeros_like(y);
    for (std::size_t r = 0; r < 4; ++r) {
      l -= std::log(y.at(r, label[r]));
      dy.at(r, label[r]) = -1.0 / y.at(r, label[r]);
    }
    if (grad) dx = ops::softmax_lastdim_backward(y, dy);
    return l;
  };
  return check_targets(loss, {{&x, &dx}}, rng, 64, corrupt);
}

double case_silu(std::uint64_t seed, bool corrupt) {
  Rng rng(seed);
  Tensor<D> x = random_tensor({24}, rng, 4.0);
  const Tensor<D> w = random_tensor({24}, rng);
  Tensor<D> dx;
  auto loss = [&](bool grad) {
    if (grad) dx = ops::silu_backward(x, w);
    return weighted_sum(ops::silu(x), w);
  };
  return check_targets(loss, {{&x, &dx}}, rng, 64, corrupt);
}

double case_block(BlockKind kind, std::uint64_t seed, bool corrupt) {
  Rng rng(seed);
  AttentionBlock<D> block(kind, 3, 3);
  block.init(rng);
  // Exercise the norms' affine parameters away from their identity init.
  block.visit("b", [&](const std::string& name, Param<D>& p) {
    if (name.find(".norm.") != std::string::npos) fill_uniform(p.value, 1.0, rng);
  });
  Tensor<D> x = random_tensor({2, 3, 2, 2}, rng);
  const Tensor<D> w = random_tensor({2, 3, 2, 2}, rng);
  Tensor<D> dx;
  auto loss = [&](bool grad) {
    typename AttentionBlock<D>::Cache cache;
    const auto y = block.forward(x, &cache);
    if (grad) {
      block.visit("b", [](const std::string&, Param<D>& p) { p.zero_grad(); });
      dx = block.backward(w, cache);
    }
    return weighted_sum(y, w);
  };
  auto targets = param_targets(block);
  targets.insert(targets.begin(), Target{&x, &dx});
  return check_targets(loss, targets, rng, 48, corrupt);
}

Targets random_targets(Rng& rng, std::size_t size, std::size_t classes) {
  std::uniform_real_distribution<double> pos(8.0, static_cast<double>(size) - 8.0);
  std::uniform_real_distribution<double> box(18.0, 30.0);
  BoxTarget b{pos(rng), pos(rng), box(rng), box(rng),
              std::uniform_int_distribution<int>(0, static_cast<int>(classes) - 1)(rng)};
  return assign_targets(b, size, size);
}

double case_detection_loss(std::uint64_t seed, bool corrupt) {
  Rng rng(seed);
  const std::size_t size = 64, k = 2;
  const Targets targets = random_targets(rng, size, k);
  HeadOutput<D> out;
  const auto ext = level_extents(size, size);
  for (std::size_t l = 0; l < kNumLevels; ++l) {
    out.levels[l].reg = random_tensor({4, ext[l].first, ext[l].second}, rng);
    out.levels[l].obj = random_tensor({1, ext[l].first, ext[l].second}, rng, 3.0);
    out.levels[l].cls = random_tensor({k, ext[l].first, ext[l].second}, rng, 3.0);
  }
  // Start positives near the box so the IoU term is active.
  const double s = kLevelStrides[targets.level];
  auto& reg = out.levels[targets.level].reg;
  std::uniform_real_distribution<double> jitter(-0.15, 0.15);
  for (auto [gx, gy] : targets.cells) {
    reg.at(0, gy, gx) = targets.box->cx / s - static_cast<double>(gx) + jitter(rng);
    reg.at(1, gy, gx) = targets.box->cy / s - static_cast<double>(gy) + jitter(rng);
    reg.at(2, gy, gx) = std::log(targets.box->w / s) + jitter(rng);
    reg.at(3, gy, gx) = std::log(targets.box->h / s) + jitter(rng);
  }
  HeadOutput<D> g;
  auto loss = [&](bool grad) { return detection_loss(out, targets, grad ? &g : nullptr).total; };
  loss(true);
  std::vector<Target> tg;
  for (std::size_t l = 0; l < kNumLevels; ++l) {
    tg.push_back({&out.levels[l].reg, &g.levels[l].reg});
    tg.push_back({&out.levels[l].obj, &g.levels[l].obj});
    tg.push_back({&out.levels[l].cls, &g.levels[l].cls});
  }
  return check_targets(loss, tg, rng, 96, corrupt);
}

double case_full_model(std::uint64_t seed, bool corrupt) {
  Rng rng(seed);
  ModelConfig cfg;
  const ModelVariant variants[] = {ModelVariant::kOccluNet1, ModelVariant::kOccluNet2,
                                   ModelVariant::kMinipBaseline};
  cfg.variant = variants[seed % 3];
  cfg.channels = 8;
  cfg.heads = 2;
  cfg.num_classes = 2;
  cfg.input_size = 64;
  OccluNetModel<D> model(cfg);
  model.init(seed);
  const std::size_t n_frames = cfg.temporal() ? cfg.window : 1;
  std::vector<Tensor<D>> frames;
  for (std::size_t i = 0; i < n_frames; ++i) frames.push_back(random_tensor({3, 64, 64}, rng));
  const Targets targets = random_targets(rng, 64, cfg.num_classes);
  std::vector<Tensor<D>> dframes;
  auto loss = [&](bool grad) {
    std::vector<const Tensor<D>*> in;
    for (const auto& f : frames) in.push_back(&f);
    typename OccluNetModel<D>::WindowCache cache;
    const auto out = model.forward(in, &cache);
    HeadOutput<D> g;
    const double l = detection_loss(out, targets, grad ? &g : nullptr).total;
    if (grad) {
      model.zero_grad();
      auto d = model.backward(g, cache);
      dframes.resize(d.size());
      for (std::size_t i = 0; i < d.size(); ++i) dframes[i] = std::move(d[i]);
    }
    return l;
  };
  loss(true);
  std::vector<Target> tg;
  for (std::size_t i = 0; i < n_frames; ++i) tg.push_back({&frames[i], &dframes[i]});
  std::vector<Target> params;
  model.visit([&](const std::string&, Param<D>& p) { params.push_back({&p.value, &p.grad}); });
  std::shuffle(params.begin(), params.end(), rng);
  params.resize(std::min<std::size_t>(params.size(), 16));
  tg.insert(tg.end(), params.begin(), params.end());
  return check_targets(loss, tg, rng, 6, corrupt);
}

}  // namespace

const std::vector<GradCase>& gradient_cases() {
  static const std::vector<GradCase> cases = {
      {"matmul", case_matmul},
      {"conv2d", case_conv2d},
      {"layer_norm", case_layer_norm},
      {"softmax_xent", case_softmax_xent},
      {"silu", case_silu},
      {"temporal_attention", [](std::uint64_t s, bool c) { return case_block(BlockKind::kTemporal, s, c); }},
      {"spatial_attention", [](std::uint64_t s, bool c) { return case_block(BlockKind::kSpatial, s, c); }},
      {"divided_block", [](std::uint64_t s, bool c) { return case_block(BlockKind::kDivided, s, c); }},
      {"detection_loss", case_detection_loss},
      {"full_model", case_full_model},
  };
  return cases;
}

std::vector<GradSuiteRow> run_gradient_suite(const GradSuiteOptions& opts) {
  std::vector<GradSuiteRow> rows;
  for (const auto& c : gradient_cases()) {
    if (!opts.only.empty() && !opts.only.count(c.name)) continue;
    const bool corrupt = opts.corrupt.count(c.name) > 0;
    GradSuiteRow row{c.name, opts.seeds, 0.0, true};
    for (std::size_t i = 0; i < opts.seeds; ++i) {
      const double e = c.run(opts.first_seed + i, corrupt);
      row.max_error = std::max(row.max_error, std::isnan(e) ? std::numeric_limits<double>::infinity() : e);
    }
    row.passed = row.max_error < opts.threshold;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace occlunet
