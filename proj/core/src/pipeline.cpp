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

#include "occlunet/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace occlunet {

PreparedSequence prepare_sequence(const DsaSequence& seq, const PreprocessConfig& cfg) {
  const auto squared = pad_to_square(normalize(seq, cfg.normalize));
  auto resized = resize_bicubic(squared, cfg.input_size);
  PreparedSequence out;
  out.id = seq.id;
  out.frames = std::move(resized.seq.frames);
  out.annotation = resized.seq.annotation;
  out.ambiguous = seq.ambiguous;
  out.scale = resized.scale;
  return out;
}

std::vector<PreparedSequence> prepare_all(const std::vector<DsaSequence>& seqs,
                                          const PreprocessConfig& cfg) {
  std::vector<PreparedSequence> out;
  out.reserve(seqs.size());
  for (const auto& s : seqs) out.push_back(prepare_sequence(s, cfg));
  return out;
}

PreparedSequence flip_prepared(const PreparedSequence& seq) {
  DsaSequence tmp;
  tmp.frames = seq.frames;
  tmp.annotation = seq.annotation;
  auto flipped = flip_lr(tmp, true);
  PreparedSequence out = seq;
  out.frames = std::move(flipped.frames);
  out.annotation = flipped.annotation;
  return out;
}

void PostprocessConfig::validate() const {
  if (decode_floor < 0 || decode_floor > 1) throw std::invalid_argument("decode floor must be in [0, 1]");
  if (!(nms_iou > 0) || nms_iou > 1) throw std::invalid_argument("nms IoU threshold must be in (0, 1]");
  link.validate();
}

std::vector<Detection> infer_single(const OccluNetModel<float>& model, const Tensor<float>& input,
                                    const PostprocessConfig& cfg, int frame_index) {
  std::vector<const Tensor<float>*> frames(model.config().temporal() ? model.config().window : 1, &input);
  const auto out = model.forward(frames, nullptr);
  return nms(head_decode(out, cfg.decode_floor, frame_index), cfg.nms_iou);
}

std::vector<std::vector<Detection>> infer_sequence(const OccluNetModel<float>& model,
                                                   const Tensor<float>& frames,
                                                   const PostprocessConfig& cfg) {
  cfg.validate();
  const auto& mc = model.config();
  if (frames.dim(1) != mc.input_size || frames.dim(2) != mc.input_size)
    throw std::invalid_argument("frames are " + shape_to_string(frames.shape()) + ", model expects " +
                                std::to_string(mc.input_size) + " px inputs");
  std::vector<std::vector<Detection>> out;
  if (!mc.temporal()) {
    const auto input = image_to_input<float>(minip(frames));
    out.push_back(infer_single(model, input, cfg, 0));
    return out;
  }
  const std::size_t t_count = frames.dim(0);
  std::vector<FeaturePyramid<float>> pyr;
  pyr.reserve(t_count);
  for (std::size_t t = 0; t < t_count; ++t)
    pyr.push_back(model.spatial_forward(frame_to_input<float>(frames, t), nullptr));
  for (std::size_t t = 0; t < t_count; ++t) {
    std::vector<const FeaturePyramid<float>*> window;
    for (auto i : window_indices(t_count, t, mc.window)) window.push_back(&pyr[i]);
    const auto head = model.head_forward(model.temporal_forward(window, nullptr), nullptr);
    out.push_back(nms(head_decode(head, cfg.decode_floor, static_cast<int>(t)), cfg.nms_iou));
  }
  return out;
}

std::optional<Trajectory> postprocess(const std::vector<std::vector<Detection>>& dets_by_frame,
                                      const LinkConfig& cfg) {
  return select_best(link(dets_by_frame, cfg));
}

std::optional<GroundTruth> ground_truth(const std::optional<Annotation>& ann, const ClassMap& classes) {
  if (!ann) return std::nullopt;
  return GroundTruth{classes.index_of(ann->class_name), ann->cx, ann->cy};
}

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < jobs; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<EvaluatedSequence> evaluate_model(const OccluNetModel<float>& model,
                                              const std::vector<PreparedSequence>& seqs,
                                              const ClassMap& classes, const PostprocessConfig& post,
                                              const JudgeConfig& judge, std::size_t jobs) {
  judge.validate();
  std::vector<EvaluatedSequence> out(seqs.size());
  parallel_for(seqs.size(), jobs, [&](std::size_t i) {
    const auto dets = infer_sequence(model, seqs[i].frames, post);
    out[i].winner = postprocess(dets, post.link);
    out[i].ambiguous = seqs[i].ambiguous;
    out[i].outcome = judge_sequence(seqs[i].id, out[i].winner, ground_truth(seqs[i].annotation, classes), judge);
  });
  return out;
}

std::vector<SequenceOutcome> outcomes_of(const std::vector<EvaluatedSequence>& evals, bool ambiguous_only) {
  std::vector<SequenceOutcome> out;
  for (const auto& e : evals)
    if (!ambiguous_only || e.ambiguous) out.push_back(e.outcome);
  return out;
}

}  // namespace occlunet
