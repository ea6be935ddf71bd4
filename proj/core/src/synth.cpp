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

#include "occlunet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <stdexcept>

namespace occlunet {

void SynthConfig::validate() const {
  if (image_size < 32) throw std::invalid_argument("synth image_size must be >= 32");
  if (frames < 3) throw std::invalid_argument("synth frames must be >= 3");
  if (depth < 1 || depth > 4) throw std::invalid_argument("synth depth must be in [1, 4]");
  if (!(bolus_speed > 0)) throw std::invalid_argument("bolus_speed must be positive");
  if (occlusion_prob < 0 || occlusion_prob > 1)
    throw std::invalid_argument("occlusion_prob must be in [0, 1]");
  if (ambiguous_fraction < 0 || ambiguous_fraction > 1)
    throw std::invalid_argument("ambiguous_fraction must be in [0, 1]");
  if (classes.empty()) throw std::invalid_argument("synth needs at least one class");
  for (const auto& c : classes) ClassMap::occlusion_types().index_of(c);
  if (noise_sigma < 0) throw std::invalid_argument("noise_sigma must be >= 0");
  if (!(contrast > 0) || contrast > background)
    throw std::invalid_argument("contrast must be in (0, background]");
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

struct Node {
  int parent = -1;
  int depth = 0;
  double angle = 0;
  double length = 0;
};

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Longest t in [0, 1] keeping start + t*(end - start) inside the margin box.
double clip_fraction(Point s, Point e, double lo, double hi) {
  double t = 1.0;
  auto limit = [&](double p0, double p1) {
    if (p1 < lo) t = std::min(t, (lo - p0) / (p1 - p0));
    if (p1 > hi) t = std::min(t, (hi - p0) / (p1 - p0));
  };
  limit(s.x, e.x);
  limit(s.y, e.y);
  return std::clamp(t, 0.0, 1.0);
}

std::vector<VesselSegment> grow_tree(const SynthConfig& cfg, std::mt19937_64& rng) {
  const double size = static_cast<double>(cfg.image_size);
  const double unit = size / 128.0;
  std::vector<Node> nodes;
  nodes.push_back({-1, 0, -std::numbers::pi / 2 + uniform(rng, -0.2, 0.2),
                   uniform(rng, 25, 36) * unit});
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].depth >= cfg.depth) continue;
    const double spread_l = uniform(rng, 0.35, 0.8), spread_r = uniform(rng, 0.35, 0.8);
    const int d = nodes[i].depth + 1;
    const bool leaf = d == cfg.depth;
    for (double sign : {-1.0, 1.0}) {
      const double len = leaf ? uniform(rng, 13, 44) * unit : uniform(rng, 18, 28) * unit;
      nodes.push_back({static_cast<int>(i), d,
                       nodes[i].angle + sign * (sign < 0 ? spread_l : spread_r), len});
    }
  }
  // Keep every vessel filled before the last frame.
  std::vector<double> arc_end(nodes.size());
  double longest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    arc_end[i] = nodes[i].length + (nodes[i].parent >= 0 ? arc_end[nodes[i].parent] : 0.0);
    longest = std::max(longest, arc_end[i]);
  }
  const double limit = cfg.bolus_speed * static_cast<double>(cfg.frames - 2);
  const double shrink = longest > limit ? limit / longest : 1.0;

  const double margin = 20.0;
  std::vector<VesselSegment> segs(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    VesselSegment& s = segs[i];
    if (nodes[i].parent < 0) {
      s.start = {size / 2 + uniform(rng, -0.15, 0.15) * size, size - 1};
      s.arc_start = 0;
    } else {
      const auto& p = segs[static_cast<std::size_t>(nodes[i].parent)];
      s.start = p.end;
      s.arc_start = p.arc_start + std::hypot(p.end.x - p.start.x, p.end.y - p.start.y);
    }
    const double len = nodes[i].length * shrink;
    Point end{s.start.x + len * std::cos(nodes[i].angle), s.start.y + len * std::sin(nodes[i].angle)};
    const double t = nodes[i].parent < 0 ? 1.0 : clip_fraction(s.start, end, margin, size - 1 - margin);
    s.end = {s.start.x + t * (end.x - s.start.x), s.start.y + t * (end.y - s.start.y)};
    s.depth = nodes[i].depth;
    s.leaf = nodes[i].depth == cfg.depth;
    s.radius = (nodes[i].depth == 0 ? 2.6 : s.leaf ? 1.6 : 2.0) * unit;
  }
  return segs;
}

struct Coverage {
  std::vector<double> weight;   // fraction of the pixel inside the lumen
  std::vector<double> arc;      // arc length where the bolus reaches the pixel
  std::vector<double> stagnant; // 0 unless contrast pools here; else its depth
};

void paint_segment(const VesselSegment& s, double t_max, double size, Coverage& cov,
                   double stagnant_lo, double stagnant_hi, bool stagnant) {
  const std::size_t n = static_cast<std::size_t>(size);
  const double dx = s.end.x - s.start.x, dy = s.end.y - s.start.y;
  const double len2 = dx * dx + dy * dy, len = std::sqrt(len2);
  if (len2 <= 0 || t_max <= 0) return;
  const double reach = s.radius + 1.0;
  const Point tip{s.start.x + t_max * dx, s.start.y + t_max * dy};
  const long x0 = std::max(0L, static_cast<long>(std::floor(std::min(s.start.x, tip.x) - reach)));
  const long x1 = std::min(static_cast<long>(n) - 1, static_cast<long>(std::ceil(std::max(s.start.x, tip.x) + reach)));
  const long y0 = std::max(0L, static_cast<long>(std::floor(std::min(s.start.y, tip.y) - reach)));
  const long y1 = std::min(static_cast<long>(n) - 1, static_cast<long>(std::ceil(std::max(s.start.y, tip.y) + reach)));
  for (long y = y0; y <= y1; ++y) {
    for (long x = x0; x <= x1; ++x) {
      const double px = static_cast<double>(x), py = static_cast<double>(y);
      const double t = std::clamp(((px - s.start.x) * dx + (py - s.start.y) * dy) / len2, 0.0, t_max);
      const double d = std::hypot(px - (s.start.x + t * dx), py - (s.start.y + t * dy));
      const double w = std::clamp(s.radius + 0.5 - d, 0.0, 1.0);
      if (w <= 0) continue;
      const std::size_t i = static_cast<std::size_t>(y) * n + static_cast<std::size_t>(x);
      if (w > cov.weight[i]) {
        cov.weight[i] = w;
        cov.arc[i] = s.arc_start + t * len;
        cov.stagnant[i] =
            stagnant ? stagnant_lo + (stagnant_hi - stagnant_lo) * (t_max > 0 ? t / t_max : 1.0) : 0.0;
      }
    }
  }
}

void paint_disk(Point c, double radius, double arc, double size, Coverage& cov) {
  const std::size_t n = static_cast<std::size_t>(size);
  const long x0 = std::max(0L, static_cast<long>(std::floor(c.x - radius - 1)));
  const long x1 = std::min(static_cast<long>(n) - 1, static_cast<long>(std::ceil(c.x + radius + 1)));
  const long y0 = std::max(0L, static_cast<long>(std::floor(c.y - radius - 1)));
  const long y1 = std::min(static_cast<long>(n) - 1, static_cast<long>(std::ceil(c.y + radius + 1)));
  for (long y = y0; y <= y1; ++y) {
    for (long x = x0; x <= x1; ++x) {
      const double d = std::hypot(static_cast<double>(x) - c.x, static_cast<double>(y) - c.y);
      const double w = std::clamp(radius + 0.5 - d, 0.0, 1.0);
      const std::size_t i = static_cast<std::size_t>(y) * n + static_cast<std::size_t>(x);
      if (w > cov.weight[i]) {
        cov.weight[i] = w;
        cov.arc[i] = arc;
        cov.stagnant[i] = 1.0;
      }
    }
  }
}

}  // namespace

std::uint64_t sequence_stream_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

SynthSample synth_sequence(const SynthConfig& cfg, std::size_t index) {
  cfg.validate();
  if (index >= cfg.total()) throw std::out_of_range("synth index out of range");
  std::mt19937_64 rng(sequence_stream_seed(cfg.seed, index));
  SynthSample out;
  SynthGeometry& geo = out.geometry;
  geo.segments = grow_tree(cfg, rng);

  const double size = static_cast<double>(cfg.image_size);
  const std::size_t n = cfg.image_size, plane = n * n;
  const bool occluded = uniform(rng, 0, 1) < cfg.occlusion_prob;
  const bool ambiguous = uniform(rng, 0, 1) < cfg.ambiguous_fraction;
  const double cut = uniform(rng, 0.4, 0.75);
  std::vector<int> leaves;
  for (std::size_t i = 0; i < geo.segments.size(); ++i)
    if (geo.segments[i].leaf) leaves.push_back(static_cast<int>(i));
  const int victim = leaves[std::uniform_int_distribution<std::size_t>(0, leaves.size() - 1)(rng)];
  const std::size_t class_pick = std::uniform_int_distribution<std::size_t>(0, cfg.classes.size() - 1)(rng);
  const double contrast = cfg.contrast * uniform(rng, 0.85, 1.15);
  const bool lateral = uniform(rng, 0, 1) < 0.5;

  Coverage cov{std::vector<double>(plane, 0.0), std::vector<double>(plane, 0.0),
               std::vector<double>(plane, 0.0)};
  for (std::size_t i = 0; i < geo.segments.size(); ++i) {
    const auto& s = geo.segments[i];
    if (occluded && static_cast<int>(i) == victim) {
      paint_segment(s, cut, size, cov, 0.5, 1.0, true);
    } else {
      paint_segment(s, 1.0, size, cov, 0, 0, false);
    }
  }
  if (occluded) {
    const auto& s = geo.segments[static_cast<std::size_t>(victim)];
    geo.occluded_segment = victim;
    geo.occlusion_point = {s.start.x + cut * (s.end.x - s.start.x), s.start.y + cut * (s.end.y - s.start.y)};
    geo.occlusion_arc = s.arc_start + cut * std::hypot(s.end.x - s.start.x, s.end.y - s.start.y);
    if (!ambiguous) paint_disk(geo.occlusion_point, 2.2 * s.radius, geo.occlusion_arc, size, cov);
    Coverage distal{std::vector<double>(plane, 0.0), std::vector<double>(plane, 0.0),
                    std::vector<double>(plane, 0.0)};
    VesselSegment rest = s;
    rest.start = geo.occlusion_point;
    paint_segment(rest, 1.0, size, distal, 0, 0, false);
    for (std::size_t i = 0; i < plane; ++i)
      if (distal.weight[i] > 0 && cov.weight[i] == 0) geo.distal.push_back(i);
  }
  for (std::size_t i = 0; i < plane; ++i)
    if (cov.weight[i] > 0) geo.rendered.push_back(i);

  const double v = cfg.bolus_speed;
  std::normal_distribution<double> noise(0.0, 1.0);
  Tensor<float> frames({cfg.frames, n, n});
  for (std::size_t f = 0; f < cfg.frames; ++f) {
    const double lo = v * (static_cast<double>(f) - 1.0), hi = v * static_cast<double>(f);
    float* dst = frames.data() + f * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      double dark = 0;
      if (cov.weight[i] > 0) {
        const double a = cov.arc[i];
        if (a >= lo && a < hi) {
          dark = 1.0;
        } else if (cov.stagnant[i] > 0 && a < lo) {
          dark = cov.stagnant[i];
        }
      }
      const double eps = cfg.noise_sigma > 0 ? std::clamp(noise(rng), -3.0, 3.0) * cfg.noise_sigma : 0.0;
      dst[i] = static_cast<float>(cfg.background - contrast * cov.weight[i] * dark + eps);
    }
  }

  DsaSequence& seq = out.seq;
  static const char* kSplits[] = {"train", "val", "test"};
  std::size_t local = index;
  int split = 0;
  if (local >= cfg.n_train) {
    local -= cfg.n_train;
    split = 1;
    if (local >= cfg.n_val) {
      local -= cfg.n_val;
      split = 2;
    }
  }
  char id[64];
  std::snprintf(id, sizeof id, "%s-%04zu", kSplits[split], local);
  seq.id = id;
  seq.split = kSplits[split];
  seq.frames = std::move(frames);
  seq.frame_rate = 2.0;
  seq.pixel_spacing = 0.3;
  seq.view = lateral ? View::kLateral : View::kAnteroposterior;
  if (occluded) {
    seq.ambiguous = ambiguous;
    Annotation a;
    a.class_name = cfg.classes[class_pick];
    a.cx = geo.occlusion_point.x;
    a.cy = geo.occlusion_point.y;
    a.box = 40.0;
    a.frame_first = std::min(static_cast<int>(std::floor(geo.occlusion_arc / v)) + 1,
                             static_cast<int>(cfg.frames) - 1);
    a.frame_last = static_cast<int>(cfg.frames) - 1;
    seq.annotation = a;
  }
  return out;
}

std::vector<DsaSequence> synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  std::vector<DsaSequence> out;
  out.reserve(cfg.total());
  for (std::size_t i = 0; i < cfg.total(); ++i) out.push_back(synth_sequence(cfg, i).seq);
  return out;
}

}  // namespace occlunet
