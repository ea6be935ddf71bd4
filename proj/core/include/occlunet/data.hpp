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

#ifndef OCCLUNET_DATA_HPP_
#define OCCLUNET_DATA_HPP_

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "occlunet/tensor.hpp"

namespace occlunet {

inline constexpr std::array<std::string_view, 5> kOcclusionClasses{
    "Extracranial ICA", "Intracranial ICA", "M1", "M2", "Unknown"};

enum class View { kAnteroposterior, kLateral };

std::string_view to_string(View v);
View view_from_string(std::string_view s);

/// Ground-truth occlusion. Coordinates follow the frames they are attached to
/// (native resolution on disk, model-input pixels after preprocessing).
struct Annotation {
  std::string class_name;
  double cx = 0;
  double cy = 0;
  double box = 40.0;  // square side length
  int frame_first = 0;
  int frame_last = 0;

  bool operator==(const Annotation&) const = default;
};

struct DsaSequence {
  std::string id;
  Tensor<float> frames;  // [T, H, W]
  double frame_rate = 2.0;
  double pixel_spacing = 0.3;
  View view = View::kAnteroposterior;
  std::string split = "train";
  bool ambiguous = false;  // occlusion visible only through stagnant contrast
  std::optional<Annotation> annotation;

  std::size_t num_frames() const { return frames.empty() ? 0 : frames.dim(0); }
  std::size_t height() const { return frames.dim(1); }
  std::size_t width() const { return frames.dim(2); }
};

/// Maps annotation class names to head channels. With a single class every
/// occlusion type collapses to channel 0.
class ClassMap {
 public:
  static ClassMap single_class() { return ClassMap(true); }
  static ClassMap occlusion_types() { return ClassMap(false); }

  std::size_t num_classes() const { return single_ ? 1 : kOcclusionClasses.size(); }
  bool is_single() const { return single_; }
  int index_of(std::string_view name) const;
  std::string name_of(int index) const;
  std::vector<std::string> names() const;

 private:
  explicit ClassMap(bool single) : single_(single) {}
  bool single_;
};

enum class NormalizeMode { kSequenceMinMax, kFrameMinMax, kZScore };

std::string_view to_string(NormalizeMode m);
NormalizeMode normalize_mode_from_string(std::string_view s);

/// Min-max to [0,1] over the whole sequence (default) or per frame; z-score
/// uses sequence statistics. Constant input maps to zeros.
DsaSequence normalize(const DsaSequence& seq, NormalizeMode mode = NormalizeMode::kSequenceMinMax);

/// Pads bottom/right to a square with the sequence maximum (the contrast-free
/// background in DSA), so annotation coordinates are unchanged.
DsaSequence pad_to_square(const DsaSequence& seq);

struct Resized {
  DsaSequence seq;
  double scale = 1.0;
};

/// Catmull-Rom (a = -0.5) resampling of a square sequence to target x target
/// with half-pixel alignment and replicated borders. Annotation centers map as
/// (c + 0.5) * scale - 0.5 and the box side as box * scale.
Resized resize_bicubic(const DsaSequence& seq, std::size_t target);

/// Catmull-Rom kernel weight at distance x.
double cubic_weight(double x);

/// Maps native-resolution annotation geometry through a resize by `scale`.
Annotation scale_annotation(Annotation a, double scale);

/// Mirrors every frame left-right when `coin` is set; cx' = W - 1 - cx.
DsaSequence flip_lr(const DsaSequence& seq, bool coin);

/// Per-pixel minimum over frames of a [T,H,W] stack.
Tensor<float> minip(const Tensor<float>& frames);

/// Window of `length` frame indices centered on t, edges replicated.
std::vector<std::size_t> window_indices(std::size_t num_frames, std::size_t t,
                                        std::size_t length = 3);

/// [H,W] intensity frame to a 3-channel [3,H,W] model input.
template <typename T>
Tensor<T> frame_to_input(const Tensor<float>& frames, std::size_t index);
template <typename T>
Tensor<T> image_to_input(const Tensor<float>& image);

// Dataset directory: manifest.json plus one tensor blob per sequence.
inline constexpr int kManifestFormat = 1;

void save_dataset(const std::filesystem::path& root, const std::vector<DsaSequence>& seqs);
std::vector<DsaSequence> load_dataset(const std::filesystem::path& root);

std::vector<DsaSequence> filter_split(const std::vector<DsaSequence>& seqs,
                                      std::string_view split);

}  // namespace occlunet

#endif  // OCCLUNET_DATA_HPP_
