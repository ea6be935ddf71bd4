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

#ifndef OCCLUNET_TRAINING_HPP_
#define OCCLUNET_TRAINING_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "occlunet/detector.hpp"
#include "occlunet/model.hpp"
#include "occlunet/pipeline.hpp"

namespace occlunet {

/// Raised when training produces a non-finite loss or parameter.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LrSchedule {
  double base_lr = 0.005;
  double warmup_epochs = 2.0;  // quadratic ramp from 0
  double fixed_epochs = 2.0;   // constant minimum at the end
  double epochs = 20.0;
  double min_ratio = 0.001;    // annealing floor relative to base_lr

  void validate() const;
  double min_lr() const { return base_lr * min_ratio; }
  double anneal_end() const { return epochs - fixed_epochs; }
  /// Learning rate at fractional epoch progress in [0, epochs].
  double lr_at(double progress) const;
};

struct OptimizerConfig {
  double momentum = 0.9;
  double base_lr = 0.005;
  double weight_decay = 5e-4;
  double max_grad_norm = 10.0;  // global L2 clip before each step; 0 disables
  std::size_t train_batch = 4;
  std::size_t val_batch = 1;
  std::size_t epochs = 20;

  void validate() const;
};

/// Rescales all gradients so their joint L2 norm is at most `max_norm`
/// (no-op when 0). Returns the norm before clipping.
template <typename T>
double clip_grad_norm(OccluNetModel<T>& model, double max_norm);

/// SGD with Nesterov momentum and decoupled weight decay:
/// p *= (1 - lr*wd); v = mu*v + g; p -= lr*(g + mu*v).
template <typename T>
class SgdNesterov {
 public:
  SgdNesterov(double momentum, double weight_decay) : momentum_(momentum), weight_decay_(weight_decay) {}

  void step(OccluNetModel<T>& model, double lr);
  /// Same update over an explicit parameter list.
  void step(const std::vector<Param<T>*>& params, double lr);

 private:
  double momentum_;
  double weight_decay_;
  std::vector<Tensor<T>> velocity_;
};

struct BoxTarget {
  double cx = 0, cy = 0, w = 0, h = 0;
  int class_id = 0;
};

struct Targets {
  std::optional<BoxTarget> box;
  std::size_t level = 0;
  std::vector<std::pair<std::size_t, std::size_t>> cells;  // (gx, gy) positives at `level`
  std::array<std::pair<std::size_t, std::size_t>, kNumLevels> extents{};  // (H, W) per level

  std::size_t num_positive() const { return cells.size(); }
};

/// Level whose stride best matches the box: argmin |log2(box / (4*stride))|.
std::size_t select_level(double box_size);

/// Positives: the cell holding the gt center and its in-bounds 8-neighbours at
/// the selected level. No box yields no positives.
Targets assign_targets(const std::optional<BoxTarget>& box, std::size_t height, std::size_t width);

struct LossParts {
  double total = 0;
  double iou = 0;
  double obj = 0;
  double cls = 0;
  std::size_t num_pos = 0;
};

/// (sum of 1-IoU over positives + objectness BCE over every cell + class BCE
/// over positives) / max(1, positives). Writes d(total)/d(head) into `grad`
/// when given, scaled by `grad_scale`.
template <typename T>
LossParts detection_loss(const HeadOutput<T>& out, const Targets& targets, HeadOutput<T>* grad,
                         double grad_scale = 1.0);

/// Axis-aligned IoU of (cx,cy,w,h) boxes and its gradient w.r.t. the first box.
double iou_with_grad(const std::array<double, 4>& pred, const std::array<double, 4>& gt,
                     std::array<double, 4>* grad);

struct TrainConfig {
  OptimizerConfig optimizer;
  LrSchedule schedule;
  PostprocessConfig post;
  JudgeConfig judge;
  bool flip = true;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::filesystem::path out_dir;  // best/ and last/ checkpoints, train_log.jsonl
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  std::size_t step = 0;   // optimizer steps so far
  double lr = 0;          // at the last step of the epoch
  double loss = 0;        // mean batch loss
  double val_precision = 0;
  double val_recall = 0;
  double max_grad_norm = 0;  // largest pre-clip gradient norm seen
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::vector<double> step_lrs;
  std::size_t best_epoch = 0;
};

/// Trains `model` in place, leaving the best-by-validation-recall weights in
/// it (ties: higher precision, then earlier epoch). Log lines go to `log`
/// when given and to out_dir/train_log.jsonl when out_dir is set.
TrainResult train(OccluNetModel<float>& model, const std::vector<PreparedSequence>& train_set,
                  const std::vector<PreparedSequence>& val_set, const ClassMap& classes,
                  const TrainConfig& cfg, std::ostream* log = nullptr);

/// Box target for a prepared annotation, if any.
std::optional<BoxTarget> box_target(const std::optional<Annotation>& ann, const ClassMap& classes);

}  // namespace occlunet

#endif  // OCCLUNET_TRAINING_HPP_
