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

#ifndef OCCLUNET_TRAJECTORY_HPP_
#define OCCLUNET_TRAJECTORY_HPP_

#include <optional>
#include <utility>
#include <vector>

#include "occlunet/detector.hpp"

// Temporal-consistency post-processing: per-frame detections are linked into
// trajectories by center proximity and the best-scoring one is kept.
namespace occlunet {

struct LinkConfig {
  double radius_px = 15.0;
  int max_gap = 0;  // frames a trajectory may skip and still be extended

  void validate() const;
};

struct Trajectory {
  std::vector<Detection> detections;  // strictly increasing frame_index
  double score = 0.0;
  int class_id = 0;

  int start_frame() const { return detections.front().frame_index; }
  int last_frame() const { return detections.back().frame_index; }
  std::size_t duration() const { return detections.size(); }
  double max_confidence() const;
  /// Confidence-weighted mean of member centers.
  std::pair<double, double> representative_center() const;
};

double center_distance(const Detection& a, const Detection& b);

/// dets_by_frame[f] holds frame f's detections (frame_index must equal f).
/// Each frame, candidate (trajectory, detection) pairs of the same class
/// within the radius are taken greedily by ascending distance (ties: higher
/// confidence, lower class_id, older trajectory, lower detection index);
/// leftovers start new trajectories. Output keeps creation order, scored.
std::vector<Trajectory> link(const std::vector<std::vector<Detection>>& dets_by_frame,
                             const LinkConfig& cfg);

/// (sum of member confidences) * (member count). Throws on empty input.
double score(const Trajectory& traj);

/// Highest score; ties by longer duration, earlier start, lower class_id,
/// then earlier position in the input.
std::optional<Trajectory> select_best(const std::vector<Trajectory>& trajs);

}  // namespace occlunet

#endif  // OCCLUNET_TRAJECTORY_HPP_
