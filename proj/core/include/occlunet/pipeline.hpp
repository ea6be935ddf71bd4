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

#ifndef OCCLUNET_PIPELINE_HPP_
#define OCCLUNET_PIPELINE_HPP_

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "occlunet/data.hpp"
#include "occlunet/evaluation.hpp"
#include "occlunet/model.hpp"
#include "occlunet/trajectory.hpp"

namespace occlunet {

struct PreprocessConfig {
  std::size_t input_size = 640;
  NormalizeMode normalize = NormalizeMode::kSequenceMinMax;
};

/// A sequence in model-input space: normalized, squared, resized.
struct PreparedSequence {
  std::string id;
  Tensor<float> frames;  // [T, S, S]
  std::optional<Annotation> annotation;
  bool ambiguous = false;
  double scale = 1.0;

  std::size_t num_frames() const { return frames.dim(0); }
};

PreparedSequence prepare_sequence(const DsaSequence& seq, const PreprocessConfig& cfg);
std::vector<PreparedSequence> prepare_all(const std::vector<DsaSequence>& seqs,
                                          const PreprocessConfig& cfg);
PreparedSequence flip_prepared(const PreparedSequence& seq);

struct PostprocessConfig {
  double decode_floor = 0.01;  // detections below this confidence are dropped
  double nms_iou = 0.65;
  LinkConfig link;

  void validate() const;
};

/// Per-frame detections after decode and NMS. Temporal variants return one
/// list per frame; the baseline returns a single list for the MinIP image.
std::vector<std::vector<Detection>> infer_sequence(const OccluNetModel<float>& model,
                                                   const Tensor<float>& frames,
                                                   const PostprocessConfig& cfg);

/// Single-frame path: decode + NMS of one model input.
std::vector<Detection> infer_single(const OccluNetModel<float>& model, const Tensor<float>& input,
                                    const PostprocessConfig& cfg, int frame_index);

std::optional<Trajectory> postprocess(const std::vector<std::vector<Detection>>& dets_by_frame,
                                      const LinkConfig& cfg);

std::optional<GroundTruth> ground_truth(const std::optional<Annotation>& ann, const ClassMap& classes);

struct EvaluatedSequence {
  SequenceOutcome outcome;
  std::optional<Trajectory> winner;
  bool ambiguous = false;
};

/// Full inference + post-processing + judgment, parallel over sequences.
std::vector<EvaluatedSequence> evaluate_model(const OccluNetModel<float>& model,
                                              const std::vector<PreparedSequence>& seqs,
                                              const ClassMap& classes, const PostprocessConfig& post,
                                              const JudgeConfig& judge, std::size_t jobs = 1);

std::vector<SequenceOutcome> outcomes_of(const std::vector<EvaluatedSequence>& evals,
                                         bool ambiguous_only = false);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

}  // namespace occlunet

#endif  // OCCLUNET_PIPELINE_HPP_
