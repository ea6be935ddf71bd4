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

#include "occlunet/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <ostream>
#include <random>

#include "json.hpp"
#include "occlunet/box_codec.hpp"
#include "occlunet/serialize.hpp"

namespace occlunet {

namespace fs = std::filesystem;

void LrSchedule::validate() const {
  if (!(base_lr > 0)) throw std::invalid_argument("base_lr must be positive");
  if (warmup_epochs < 0 || fixed_epochs < 0 || !(warmup_epochs + fixed_epochs <= epochs))
    throw std::invalid_argument("warmup + fixed epochs must fit in the run");
  if (!(min_ratio > 0) || min_ratio > 1) throw std::invalid_argument("min_ratio must be in (0, 1]");
}

double LrSchedule::lr_at(double progress) const {
  if (!(progress >= 0 && progress <= epochs))
    throw std::out_of_range("schedule progress " + std::to_string(progress) + " outside [0, " +
                            std::to_string(epochs) + "]");
  if (progress < warmup_epochs) {
    const double r = progress / warmup_epochs;
    return base_lr * r * r;
  }
  const double lo = min_lr();
  const double end = anneal_end();
  if (progress < end) {
    const double phase = (progress - warmup_epochs) / (end - warmup_epochs);
    return lo + (base_lr - lo) * 0.5 * (1.0 + std::cos(std::numbers::pi * phase));
  }
  return lo;
}

void OptimizerConfig::validate() const {
  if (!(momentum > 0) || momentum >= 1) throw std::invalid_argument("momentum must be in (0, 1)");
  if (!(base_lr > 0)) throw std::invalid_argument("base_lr must be positive");
  if (!(weight_decay > 0)) throw std::invalid_argument("weight_decay must be positive");
  if (train_batch == 0 || val_batch == 0) throw std::invalid_argument("batch sizes must be positive");
  if (epochs == 0) throw std::invalid_argument("epochs must be positive");
  if (!(max_grad_norm >= 0)) throw std::invalid_argument("max_grad_norm must be non-negative");
}

template <typename T>
void SgdNesterov<T>::step(const std::vector<Param<T>*>& params, double lr) {
  if (velocity_.empty()) {
    for (auto* p : params) velocity_.push_back(Tensor<T>::zeros_like(p->value));
  }
  if (velocity_.size() != params.size()) throw std::logic_error("optimizer parameter set changed");
  const T decay = static_cast<T>(1.0 - lr * weight_decay_);
  const T mu = static_cast<T>(momentum_);
  const T rate = static_cast<T>(lr);
  for (std::size_t i = 0; i < params.size(); ++i) {
    T* w = params[i]->value.data();
    const T* g = params[i]->grad.data();
    T* v = velocity_[i].data();
    for (std::size_t j = 0, n = params[i]->value.size(); j < n; ++j) {
      w[j] *= decay;
      v[j] = mu * v[j] + g[j];
      w[j] -= rate * (g[j] + mu * v[j]);
    }
  }
}

template <typename T>
void SgdNesterov<T>::step(OccluNetModel<T>& model, double lr) {
  std::vector<Param<T>*> params;
  model.visit([&](const std::string&, Param<T>& p) { params.push_back(&p); });
  step(params, lr);
}

template <typename T>
double clip_grad_norm(OccluNetModel<T>& model, double max_norm) {
  double sq = 0;
  model.visit([&](const std::string&, Param<T>& p) {
    for (const T g : p.grad.values()) sq += static_cast<double>(g) * static_cast<double>(g);
  });
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const T scale = static_cast<T>(max_norm / norm);
    model.visit([&](const std::string&, Param<T>& p) {
      for (T& g : p.grad.values()) g *= scale;
    });
  }
  return norm;
}

template double clip_grad_norm(OccluNetModel<float>&, double);
template double clip_grad_norm(OccluNetModel<double>&, double);

template class SgdNesterov<float>;
template class SgdNesterov<double>;

std::size_t select_level(double box_size) {
  if (!(box_size > 0)) throw std::invalid_argument("box size must be positive");
  std::size_t best = 0;
  double best_err = 0;
  for (std::size_t l = 0; l < kNumLevels; ++l) {
    const double err = std::abs(std::log2(box_size / (4.0 * kLevelStrides[l])));
    if (l == 0 || err < best_err) {
      best = l;
      best_err = err;
    }
  }
  return best;
}

Targets assign_targets(const std::optional<BoxTarget>& box, std::size_t height, std::size_t width) {
  Targets t;
  const auto ext = level_extents(height, width);
  for (std::size_t l = 0; l < kNumLevels; ++l) t.extents[l] = ext[l];
  if (!box) return t;
  if (!(box->cx >= 0 && box->cx < static_cast<double>(width) && box->cy >= 0 &&
        box->cy < static_cast<double>(height)))
    throw std::invalid_argument("gt center outside the image");
  t.box = box;
  t.level = select_level(std::max(box->w, box->h));
  const double s = kLevelStrides[t.level];
  const auto [lh, lw] = ext[t.level];
  const long bx = std::min(static_cast<long>(std::floor(box->cx / s)), static_cast<long>(lw) - 1);
  const long by = std::min(static_cast<long>(std::floor(box->cy / s)), static_cast<long>(lh) - 1);
  for (long dy = -1; dy <= 1; ++dy)
    for (long dx = -1; dx <= 1; ++dx) {
      const long x = bx + dx, y = by + dy;
      if (x < 0 || y < 0 || x >= static_cast<long>(lw) || y >= static_cast<long>(lh)) continue;
      t.cells.emplace_back(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
    }
  return t;
}

double iou_with_grad(const std::array<double, 4>& p, const std::array<double, 4>& g,
                     std::array<double, 4>* grad) {
  const double px1 = p[0] - p[2] / 2, px2 = p[0] + p[2] / 2;
  const double py1 = p[1] - p[3] / 2, py2 = p[1] + p[3] / 2;
  const double gx1 = g[0] - g[2] / 2, gx2 = g[0] + g[2] / 2;
  const double gy1 = g[1] - g[3] / 2, gy2 = g[1] + g[3] / 2;
  const double iw = std::min(px2, gx2) - std::max(px1, gx1);
  const double ih = std::min(py2, gy2) - std::max(py1, gy1);
  const double inter = (iw > 0 && ih > 0) ? iw * ih : 0.0;
  const double area_p = p[2] * p[3];
  const double uni = area_p + g[2] * g[3] - inter;
  const double iou = uni > 0 ? inter / uni : 0.0;
  if (grad) {
    *grad = {0, 0, 0, 0};
    if (uni <= 0) return iou;
    const double d_inter = (uni + inter) / (uni * uni);
    const double d_area = -inter / (uni * uni);
    if (inter > 0) {
      const double dx1 = px1 > gx1 ? -ih : 0.0, dx2 = px2 < gx2 ? ih : 0.0;
      const double dy1 = py1 > gy1 ? -iw : 0.0, dy2 = py2 < gy2 ? iw : 0.0;
      (*grad)[0] = d_inter * (dx1 + dx2);
      (*grad)[1] = d_inter * (dy1 + dy2);
      (*grad)[2] = d_inter * 0.5 * (dx2 - dx1);
      (*grad)[3] = d_inter * 0.5 * (dy2 - dy1);
    }
    (*grad)[2] += d_area * p[3];
    (*grad)[3] += d_area * p[2];
  }
  return iou;
}

namespace {

// BCE with logits: softplus(x) - y*x, computed stably.
double bce_logit(double x, double y) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))) - y * x; }

}  // namespace

template <typename T>
LossParts detection_loss(const HeadOutput<T>& out, const Targets& targets, HeadOutput<T>* grad,
                         double grad_scale) {
  LossParts parts;
  parts.num_pos = targets.num_positive();
  const double norm = 1.0 / static_cast<double>(std::max<std::size_t>(1, parts.num_pos));
  const double gs = norm * grad_scale;
  if (grad) {
    for (std::size_t l = 0; l < kNumLevels; ++l) {
      grad->levels[l].reg = Tensor<T>::zeros_like(out.levels[l].reg);
      grad->levels[l].obj = Tensor<T>::zeros_like(out.levels[l].obj);
      grad->levels[l].cls = Tensor<T>::zeros_like(out.levels[l].cls);
    }
  }
  for (std::size_t l = 0; l < kNumLevels; ++l) {
    const auto& lo = out.levels[l];
    const std::size_t h = lo.obj.dim(1), w = lo.obj.dim(2);
    if (targets.extents[l] != std::make_pair(h, w))
      throw ShapeError("head level " + std::to_string(l) + " extents disagree with targets");
    std::vector<char> positive(h * w, 0);
    if (l == targets.level)
      for (auto [gx, gy] : targets.cells) positive[gy * w + gx] = 1;
    const T* obj = lo.obj.data();
    for (std::size_t i = 0; i < h * w; ++i) {
      const double y = positive[i] ? 1.0 : 0.0;
      parts.obj += bce_logit(obj[i], y);
      if (grad) grad->levels[l].obj.data()[i] = static_cast<T>((ops::sigmoid(static_cast<double>(obj[i])) - y) * gs);
    }
  }
  if (targets.box) {
    const auto& b = *targets.box;
    const auto& lo = out.levels[targets.level];
    const std::size_t w = lo.obj.dim(2), plane = lo.obj.dim(1) * w;
    const std::size_t k_count = lo.cls.dim(0);
    if (b.class_id < 0 || static_cast<std::size_t>(b.class_id) >= k_count)
      throw std::invalid_argument("target class outside the head's class range");
    const double s = kLevelStrides[targets.level];
    for (auto [gx, gy] : targets.cells) {
      const std::size_t cell = gy * w + gx;
      for (std::size_t k = 0; k < k_count; ++k) {
        const double x = lo.cls.data()[k * plane + cell];
        const double y = static_cast<int>(k) == b.class_id ? 1.0 : 0.0;
        parts.cls += bce_logit(x, y);
        if (grad) grad->levels[targets.level].cls.data()[k * plane + cell] = static_cast<T>((ops::sigmoid(x) - y) * gs);
      }
      const double dx = lo.reg.data()[0 * plane + cell], dy = lo.reg.data()[1 * plane + cell];
      const double dw = lo.reg.data()[2 * plane + cell], dh = lo.reg.data()[3 * plane + cell];
      const auto box = decode_box(dx, dy, dw, dh, static_cast<int>(gx), static_cast<int>(gy), kLevelStrides[targets.level]);
      std::array<double, 4> g{};
      const double iou = iou_with_grad(box, {b.cx, b.cy, b.w, b.h}, &g);
      parts.iou += 1.0 - iou;
      if (grad) {
        auto* r = grad->levels[targets.level].reg.data();
        r[0 * plane + cell] = static_cast<T>(-g[0] * s * gs);
        r[1 * plane + cell] = static_cast<T>(-g[1] * s * gs);
        r[2 * plane + cell] = static_cast<T>(dw < kMaxLogSize ? -g[2] * box[2] * gs : 0.0);
        r[3 * plane + cell] = static_cast<T>(dh < kMaxLogSize ? -g[3] * box[3] * gs : 0.0);
      }
    }
  }
  parts.iou *= norm;
  parts.obj *= norm;
  parts.cls *= norm;
  parts.total = parts.iou + parts.obj + parts.cls;
  return parts;
}

template LossParts detection_loss(const HeadOutput<float>&, const Targets&, HeadOutput<float>*, double);
template LossParts detection_loss(const HeadOutput<double>&, const Targets&, HeadOutput<double>*, double);

std::optional<BoxTarget> box_target(const std::optional<Annotation>& ann, const ClassMap& classes) {
  if (!ann) return std::nullopt;
  return BoxTarget{ann->cx, ann->cy, ann->box, ann->box, classes.index_of(ann->class_name)};
}

namespace {

struct Chunk {
  std::size_t seq = 0;
  std::size_t first = 0;  // center frames [first, last) or sequence range for the baseline
  std::size_t last = 0;
};

void add_into(FeaturePyramid<float>& acc, const FeaturePyramid<float>& g) {
  for (std::size_t l = 0; l < kNumLevels; ++l) {
    if (acc.levels[l].empty()) {
      acc.levels[l] = g.levels[l];
    } else {
      acc.levels[l] += g.levels[l];
    }
  }
}

std::optional<BoxTarget> frame_target(const PreparedSequence& seq, std::size_t t, const ClassMap& classes) {
  if (!seq.annotation) return std::nullopt;
  const int f = static_cast<int>(t);
  if (f < seq.annotation->frame_first || f > seq.annotation->frame_last) return std::nullopt;
  return box_target(seq.annotation, classes);
}

double check_finite(double loss, const std::string& where) {
  if (!std::isfinite(loss)) throw NumericError("non-finite loss (" + std::to_string(loss) + ") at " + where);
  return loss;
}

// One temporal-variant batch: consecutive center frames of one sequence,
// sharing each frame's spatial pass.
double temporal_batch(OccluNetModel<float>& model, const PreparedSequence& seq, std::size_t first,
                      std::size_t last, const ClassMap& classes, const std::string& where) {
  const std::size_t t_count = seq.num_frames(), size = seq.frames.dim(1);
  const std::size_t window = model.config().window;
  std::map<std::size_t, FeaturePyramid<float>> pyr;
  std::map<std::size_t, OccluNetModel<float>::SpatialCache> caches;
  std::map<std::size_t, FeaturePyramid<float>> grads;
  for (std::size_t t = first; t < last; ++t)
    for (auto i : window_indices(t_count, t, window))
      if (!pyr.count(i)) pyr.emplace(i, model.spatial_forward(frame_to_input<float>(seq.frames, i), &caches[i]));
  const double scale = 1.0 / static_cast<double>(last - first);
  double loss = 0;
  for (std::size_t t = first; t < last; ++t) {
    const auto idx = window_indices(t_count, t, window);
    std::vector<const FeaturePyramid<float>*> slots;
    for (auto i : idx) slots.push_back(&pyr.at(i));
    TemporalModule<float>::Cache tcache;
    OccluNetModel<float>::HeadCache hcache;
    const auto head = model.head_forward(model.temporal_forward(slots, &tcache), &hcache);
    HeadOutput<float> dhead;
    const auto parts = detection_loss(head, assign_targets(frame_target(seq, t, classes), size, size), &dhead, scale);
    loss += check_finite(parts.total, where + " frame " + std::to_string(t)) * scale;
    const auto dslots = model.temporal_backward(model.head_backward(dhead, hcache), tcache);
    for (std::size_t k = 0; k < idx.size(); ++k) add_into(grads[idx[k]], dslots[k]);
  }
  for (auto& [i, g] : grads) model.spatial_backward(g, caches.at(i));
  return loss;
}

double baseline_batch(OccluNetModel<float>& model, const std::vector<const PreparedSequence*>& seqs,
                      const ClassMap& classes, const std::string& where) {
  const double scale = 1.0 / static_cast<double>(seqs.size());
  double loss = 0;
  for (const auto* seq : seqs) {
    const auto input = image_to_input<float>(minip(seq->frames));
    OccluNetModel<float>::WindowCache cache;
    const auto head = model.forward({&input}, &cache);
    HeadOutput<float> dhead;
    const std::size_t size = seq->frames.dim(1);
    const auto parts = detection_loss(head, assign_targets(box_target(seq->annotation, classes), size, size), &dhead, scale);
    loss += check_finite(parts.total, where + " " + seq->id) * scale;
    model.backward(dhead, cache);
  }
  return loss;
}

std::vector<Tensor<float>> snapshot(OccluNetModel<float>& model) {
  std::vector<Tensor<float>> out;
  model.visit([&](const std::string&, Param<float>& p) { out.push_back(p.value); });
  return out;
}

void restore(OccluNetModel<float>& model, const std::vector<Tensor<float>>& values) {
  std::size_t i = 0;
  model.visit([&](const std::string&, Param<float>& p) { p.value = values[i++]; });
}

}  // namespace

TrainResult train(OccluNetModel<float>& model, const std::vector<PreparedSequence>& train_set,
                  const std::vector<PreparedSequence>& val_set, const ClassMap& classes,
                  const TrainConfig& cfg, std::ostream* log) {
  cfg.optimizer.validate();
  cfg.post.validate();
  cfg.judge.validate();
  LrSchedule schedule = cfg.schedule;
  schedule.base_lr = cfg.optimizer.base_lr;
  schedule.epochs = static_cast<double>(cfg.optimizer.epochs);
  schedule.validate();
  if (train_set.empty()) throw std::invalid_argument("training set is empty");
  if (model.config().num_classes != classes.num_classes())
    throw std::invalid_argument("model class count disagrees with the class map");

  const bool temporal = model.config().temporal();
  const std::size_t batch = cfg.optimizer.train_batch;
  std::vector<Chunk> chunks;
  if (temporal) {
    for (std::size_t s = 0; s < train_set.size(); ++s)
      for (std::size_t t = 0; t < train_set[s].num_frames(); t += batch)
        chunks.push_back({s, t, std::min(t + batch, train_set[s].num_frames())});
  } else {
    for (std::size_t s = 0; s < train_set.size(); s += batch)
      chunks.push_back({0, s, std::min(s + batch, train_set.size())});
  }

  std::ofstream file_log;
  if (!cfg.out_dir.empty()) {
    fs::create_directories(cfg.out_dir);
    file_log.open(cfg.out_dir / "train_log.jsonl", std::ios::trunc);
    if (!file_log) throw IoError("cannot write " + (cfg.out_dir / "train_log.jsonl").string());
  }

  Rng rng(cfg.seed ^ 0xA5A5F00DULL);
  SgdNesterov<float> opt(cfg.optimizer.momentum, cfg.optimizer.weight_decay);
  TrainResult result;
  std::vector<Tensor<float>> best;
  double best_recall = -1, best_precision = -1;
  std::size_t step = 0;
  const double steps_per_epoch = static_cast<double>(chunks.size());

  for (std::size_t epoch = 0; epoch < cfg.optimizer.epochs; ++epoch) {
    std::vector<PreparedSequence> flipped(train_set.size());
    std::vector<char> use_flip(train_set.size(), 0);
    std::bernoulli_distribution coin(0.5);
    for (std::size_t s = 0; s < train_set.size(); ++s) {
      use_flip[s] = cfg.flip && coin(rng);
      if (use_flip[s]) flipped[s] = flip_prepared(train_set[s]);
    }
    auto seq_at = [&](std::size_t s) -> const PreparedSequence& {
      return use_flip[s] ? flipped[s] : train_set[s];
    };
    std::vector<std::size_t> order(chunks.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0, lr = 0, max_norm = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const Chunk& c = chunks[order[k]];
      lr = schedule.lr_at(static_cast<double>(epoch) + static_cast<double>(k) / steps_per_epoch);
      result.step_lrs.push_back(lr);
      model.zero_grad();
      const std::string where = "epoch " + std::to_string(epoch + 1) + " step " + std::to_string(step + 1);
      if (temporal) {
        const auto& seq = seq_at(c.seq);
        loss_sum += temporal_batch(model, seq, c.first, c.last, classes, where + " sequence " + seq.id);
      } else {
        std::vector<const PreparedSequence*> group;
        for (std::size_t s = c.first; s < c.last; ++s) group.push_back(&seq_at(s));
        loss_sum += baseline_batch(model, group, classes, where);
      }
      max_norm = std::max(max_norm, clip_grad_norm(model, cfg.optimizer.max_grad_norm));
      opt.step(model, lr);
      ++step;
    }

    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.step = step;
    rec.lr = lr;
    rec.loss = loss_sum / steps_per_epoch;
    rec.max_grad_norm = max_norm;
    if (!val_set.empty()) {
      const auto evals = evaluate_model(model, val_set, classes, cfg.post, cfg.judge, cfg.jobs);
      const auto outcomes = outcomes_of(evals);
      const auto report = aggregate(outcomes);
      rec.val_precision = report.all.precision();
      rec.val_recall = report.all.recall();
    }
    result.history.push_back(rec);
    const nlohmann::json line = {{"epoch", rec.epoch}, {"step", rec.step}, {"lr", rec.lr}, {"loss", rec.loss},
                                 {"grad_norm", rec.max_grad_norm},
                                 {"val_precision", rec.val_precision}, {"val_recall", rec.val_recall}};
    if (log) *log << line.dump() << "\n" << std::flush;
    if (file_log) file_log << line.dump() << "\n" << std::flush;

    if (rec.val_recall > best_recall || (rec.val_recall == best_recall && rec.val_precision > best_precision)) {
      best_recall = rec.val_recall;
      best_precision = rec.val_precision;
      result.best_epoch = rec.epoch;
      best = snapshot(model);
      if (!cfg.out_dir.empty()) save_checkpoint(cfg.out_dir / "best", model);
    }
  }
  if (!cfg.out_dir.empty()) save_checkpoint(cfg.out_dir / "last", model);
  restore(model, best);
  return result;
}

}  // namespace occlunet
