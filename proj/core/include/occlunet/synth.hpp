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

#ifndef OCCLUNET_SYNTH_HPP_
#define OCCLUNET_SYNTH_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "occlunet/data.hpp"

// Synthetic contrast-flow sequences. A vessel tree grows upward from the
// bottom edge; a contrast bolus (dark, DSA convention) sweeps along it by arc
// length, darkening each vessel pixel for one frame. In an occluded sequence
// one leaf is cut short: contrast that reaches it stagnates there for the rest
// of the run and nothing beyond the cut ever fills.
namespace occlunet {

struct SynthConfig {
  std::size_t image_size = 128;
  std::size_t frames = 8;
  int depth = 2;                 // branching levels below the trunk
  double bolus_speed = 20.0;     // px of arc length per frame
  double occlusion_prob = 0.8;
  double ambiguous_fraction = 0.5;  // occlusions rendered without a visible stump
  std::vector<std::string> classes{kOcclusionClasses.begin(), kOcclusionClasses.end()};
  double noise_sigma = 0.02;     // clamped at +-3 sigma
  double background = 0.8;
  double contrast = 0.6;
  std::size_t n_train = 200;
  std::size_t n_val = 50;
  std::size_t n_test = 50;
  std::uint64_t seed = 7;

  void validate() const;
  std::size_t total() const { return n_train + n_val + n_test; }
};

struct Point {
  double x = 0, y = 0;
};

struct VesselSegment {
  Point start, end;
  double radius = 1.5;
  double arc_start = 0;  // arc length from the root at `start`
  int depth = 0;
  bool leaf = false;
};

/// Geometry behind one rendered sequence, kept for verification.
struct SynthGeometry {
  std::vector<VesselSegment> segments;  // full tree, including any cut-off part
  int occluded_segment = -1;
  double occlusion_arc = 0;           // arc length of the occlusion face
  Point occlusion_point;
  std::vector<std::size_t> rendered;  // pixel indices y*W+x that ever fill
  std::vector<std::size_t> distal;    // pixels of the cut-off part that never fill
};

struct SynthSample {
  DsaSequence seq;
  SynthGeometry geometry;
};

std::uint64_t sequence_stream_seed(std::uint64_t seed, std::uint64_t index);

/// Sequence `index` of the dataset (global index over train, val, test).
SynthSample synth_sequence(const SynthConfig& cfg, std::size_t index);

/// All sequences, ids "<split>-NNNN", in train/val/test order.
std::vector<DsaSequence> synth_generate(const SynthConfig& cfg);

}  // namespace occlunet

#endif  // OCCLUNET_SYNTH_HPP_
