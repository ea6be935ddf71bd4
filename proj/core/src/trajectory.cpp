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

#include "occlunet/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

namespace occlunet {

void LinkConfig::validate() const {
  if (!(radius_px > 0)) throw std::invalid_argument("link radius must be positive");
  if (max_gap < 0) throw std::invalid_argument("max_gap must be >= 0");
}

double Trajectory::max_confidence() const {
  double m = 0;
  for (const auto& d : detections) m = std::max(m, d.confidence);
  return m;
}

std::pair<double, double> Trajectory::representative_center() const {
  if (detections.empty()) throw std::invalid_argument("empty trajectory has no center");
  // Offsets from the first member keep single-member (and all-equal) centers exact.
  const double x0 = detections.front().cx, y0 = detections.front().cy;
  double wsum = 0, dx = 0, dy = 0;
  for (const auto& d : detections) {
    wsum += d.confidence;
    dx += d.confidence * (d.cx - x0);
    dy += d.confidence * (d.cy - y0);
  }
  if (wsum <= 0) return {x0, y0};
  return {x0 + dx / wsum, y0 + dy / wsum};
}

double center_distance(const Detection& a, const Detection& b) {
  return std::hypot(a.cx - b.cx, a.cy - b.cy);
}

double score(const Trajectory& traj) {
  if (traj.detections.empty()) throw std::invalid_argument("cannot score an empty trajectory");
  double sum = 0;
  for (const auto& d : traj.detections) sum += d.confidence;
  return sum * static_cast<double>(traj.detections.size());
}

std::vector<Trajectory> link(const std::vector<std::vector<Detection>>& dets_by_frame,
                             const LinkConfig& cfg) {
  cfg.validate();
  std::vector<Trajectory> trajs;
  struct Edge {
    double dist;
    double neg_conf;
    int cls;
    std::size_t traj;
    std::size_t det;
    auto key() const { return std::tie(dist, neg_conf, cls, traj, det); }
  };
  std::vector<Edge> edges;
  for (std::size_t f = 0; f < dets_by_frame.size(); ++f) {
    const auto& dets = dets_by_frame[f];
    for (const auto& d : dets) {
      if (d.frame_index != static_cast<int>(f)) {
        throw std::invalid_argument("detection frame_index " + std::to_string(d.frame_index) +
                                    " listed under frame " + std::to_string(f));
      }
    }
    edges.clear();
    for (std::size_t t = 0; t < trajs.size(); ++t) {
      const int gap = static_cast<int>(f) - trajs[t].last_frame() - 1;
      if (gap > cfg.max_gap) continue;
      const Detection& tail = trajs[t].detections.back();
      for (std::size_t j = 0; j < dets.size(); ++j) {
        if (dets[j].class_id != trajs[t].class_id) continue;
        const double dist = center_distance(tail, dets[j]);
        if (dist <= cfg.radius_px)
          edges.push_back({dist, -dets[j].confidence, dets[j].class_id, t, j});
      }
    }
    std::sort(edges.begin(), edges.end(),
              [](const Edge& a, const Edge& b) { return a.key() < b.key(); });
    std::vector<bool> traj_used(trajs.size(), false), det_used(dets.size(), false);
    for (const auto& e : edges) {
      if (traj_used[e.traj] || det_used[e.det]) continue;
      traj_used[e.traj] = true;
      det_used[e.det] = true;
      trajs[e.traj].detections.push_back(dets[e.det]);
    }
    for (std::size_t j = 0; j < dets.size(); ++j) {
      if (det_used[j]) continue;
      Trajectory t;
      t.class_id = dets[j].class_id;
      t.detections.push_back(dets[j]);
      trajs.push_back(std::move(t));
    }
  }
  for (auto& t : trajs) t.score = score(t);
  return trajs;
}

std::optional<Trajectory> select_best(const std::vector<Trajectory>& trajs) {
  if (trajs.empty()) return std::nullopt;
  std::size_t best = 0;
  for (std::size_t i = 1; i < trajs.size(); ++i) {
    const auto& a = trajs[i];
    const auto& b = trajs[best];
    const auto ka = std::make_tuple(-a.score, -static_cast<long>(a.duration()), a.start_frame(),
                                    a.class_id);
    const auto kb = std::make_tuple(-b.score, -static_cast<long>(b.duration()), b.start_frame(),
                                    b.class_id);
    if (ka < kb) best = i;
  }
  return trajs[best];
}

}  // namespace occlunet
