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

#include "occlunet/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "occlunet/serialize.hpp"

namespace occlunet {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(View v) {
  return v == View::kLateral ? "lateral" : "anteroposterior";
}

View view_from_string(std::string_view s) {
  if (s == "anteroposterior") return View::kAnteroposterior;
  if (s == "lateral") return View::kLateral;
  throw std::invalid_argument("unknown view '" + std::string(s) + "'");
}

int ClassMap::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < kOcclusionClasses.size(); ++i) {
    if (kOcclusionClasses[i] == name) return single_ ? 0 : static_cast<int>(i);
  }
  if (single_ && name == "occlusion") return 0;
  throw std::invalid_argument("unknown occlusion class '" + std::string(name) + "'");
}

std::string ClassMap::name_of(int index) const {
  if (index < 0 || static_cast<std::size_t>(index) >= num_classes())
    throw std::out_of_range("class index " + std::to_string(index) + " out of range");
  return single_ ? "occlusion" : std::string(kOcclusionClasses[static_cast<std::size_t>(index)]);
}

std::vector<std::string> ClassMap::names() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < num_classes(); ++i) out.push_back(name_of(static_cast<int>(i)));
  return out;
}

std::string_view to_string(NormalizeMode m) {
  switch (m) {
    case NormalizeMode::kSequenceMinMax: return "sequence-minmax";
    case NormalizeMode::kFrameMinMax: return "frame-minmax";
    case NormalizeMode::kZScore: return "zscore";
  }
  return "?";
}

NormalizeMode normalize_mode_from_string(std::string_view s) {
  for (auto m : {NormalizeMode::kSequenceMinMax, NormalizeMode::kFrameMinMax,
                 NormalizeMode::kZScore}) {
    if (to_string(m) == s) return m;
  }
  throw std::invalid_argument("unknown normalization '" + std::string(s) + "'");
}

namespace {

void minmax_range(float* begin, float* end) {
  const auto [lo, hi] = std::minmax_element(begin, end);
  const double mn = *lo, mx = *hi;
  if (!(mx > mn)) {
    std::fill(begin, end, 0.0f);
    return;
  }
  const double inv = 1.0 / (mx - mn);
  for (float* p = begin; p != end; ++p) *p = static_cast<float>((*p - mn) * inv);
}

}  // namespace

DsaSequence normalize(const DsaSequence& seq, NormalizeMode mode) {
  DsaSequence out = seq;
  auto& values = out.frames.values();
  for (float v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument("sequence " + seq.id + " has non-finite pixels");
  }
  switch (mode) {
    case NormalizeMode::kSequenceMinMax:
      minmax_range(values.data(), values.data() + values.size());
      break;
    case NormalizeMode::kFrameMinMax: {
      const std::size_t plane = seq.height() * seq.width();
      for (std::size_t t = 0; t < seq.num_frames(); ++t)
        minmax_range(values.data() + t * plane, values.data() + (t + 1) * plane);
      break;
    }
    case NormalizeMode::kZScore: {
      double mean = 0;
      for (float v : values) mean += v;
      mean /= static_cast<double>(values.size());
      double var = 0;
      for (float v : values) var += (v - mean) * (v - mean);
      const double sd = std::sqrt(var / static_cast<double>(values.size()));
      for (float& v : values) v = sd > 0 ? static_cast<float>((v - mean) / sd) : 0.0f;
      break;
    }
  }
  return out;
}

DsaSequence pad_to_square(const DsaSequence& seq) {
  const std::size_t h = seq.height(), w = seq.width();
  if (h == w) return seq;
  const std::size_t n = std::max(h, w);
  const auto src = seq.frames.values();
  const float fill = *std::max_element(src.begin(), src.end());
  DsaSequence out = seq;
  out.frames = Tensor<float>({seq.num_frames(), n, n}, fill);
  for (std::size_t t = 0; t < seq.num_frames(); ++t)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) out.frames.at(t, y, x) = seq.frames.at(t, y, x);
  return out;
}

double cubic_weight(double x) {
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

namespace {

struct Taps {
  std::array<std::size_t, 4> index;
  std::array<double, 4> weight;
};

std::vector<Taps> resample_taps(std::size_t in, std::size_t out, double scale) {
  std::vector<Taps> taps(out);
  for (std::size_t o = 0; o < out; ++o) {
    const double src = (static_cast<double>(o) + 0.5) / scale - 0.5;
    const double base = std::floor(src);
    const double t = src - base;
    for (int k = 0; k < 4; ++k) {
      const long i = static_cast<long>(base) + k - 1;
      taps[o].index[k] = static_cast<std::size_t>(std::clamp<long>(i, 0, static_cast<long>(in) - 1));
      taps[o].weight[k] = cubic_weight(t - static_cast<double>(k - 1));
    }
  }
  return taps;
}

}  // namespace

Resized resize_bicubic(const DsaSequence& seq, std::size_t target) {
  if (seq.height() != seq.width())
    throw std::invalid_argument("resize expects a square sequence; pad it first");
  if (target == 0) throw std::invalid_argument("resize target must be positive");
  const std::size_t n = seq.height();
  const double scale = static_cast<double>(target) / static_cast<double>(n);
  Resized r{seq, scale};
  if (target != n) {
    const auto taps = resample_taps(n, target, scale);
    const std::size_t frames = seq.num_frames();
    r.seq.frames = Tensor<float>({frames, target, target});
    std::vector<double> rows(n * target);
    for (std::size_t t = 0; t < frames; ++t) {
      for (std::size_t y = 0; y < n; ++y)
        for (std::size_t ox = 0; ox < target; ++ox) {
          double acc = 0;
          for (int k = 0; k < 4; ++k) acc += taps[ox].weight[k] * seq.frames.at(t, y, taps[ox].index[k]);
          rows[y * target + ox] = acc;
        }
      for (std::size_t oy = 0; oy < target; ++oy)
        for (std::size_t ox = 0; ox < target; ++ox) {
          double acc = 0;
          for (int k = 0; k < 4; ++k) acc += taps[oy].weight[k] * rows[taps[oy].index[k] * target + ox];
          r.seq.frames.at(t, oy, ox) = static_cast<float>(acc);
        }
    }
  }
  if (r.seq.annotation) r.seq.annotation = scale_annotation(*r.seq.annotation, scale);
  return r;
}

Annotation scale_annotation(Annotation a, double scale) {
  a.cx = (a.cx + 0.5) * scale - 0.5;
  a.cy = (a.cy + 0.5) * scale - 0.5;
  a.box *= scale;
  return a;
}

DsaSequence flip_lr(const DsaSequence& seq, bool coin) {
  if (!coin) return seq;
  DsaSequence out = seq;
  const std::size_t w = seq.width();
  for (std::size_t t = 0; t < seq.num_frames(); ++t)
    for (std::size_t y = 0; y < seq.height(); ++y)
      for (std::size_t x = 0; x < w; ++x) out.frames.at(t, y, x) = seq.frames.at(t, y, w - 1 - x);
  if (out.annotation) out.annotation->cx = static_cast<double>(w) - 1.0 - out.annotation->cx;
  return out;
}

Tensor<float> minip(const Tensor<float>& frames) {
  if (frames.rank() != 3) throw ShapeError("minip expects [T,H,W], got " + shape_to_string(frames.shape()));
  const std::size_t t_count = frames.dim(0), plane = frames.dim(1) * frames.dim(2);
  Tensor<float> out({frames.dim(1), frames.dim(2)});
  const float* src = frames.data();
  float* dst = out.data();
  std::copy(src, src + plane, dst);
  for (std::size_t t = 1; t < t_count; ++t)
    for (std::size_t i = 0; i < plane; ++i) dst[i] = std::min(dst[i], src[t * plane + i]);
  return out;
}

std::vector<std::size_t> window_indices(std::size_t num_frames, std::size_t t, std::size_t length) {
  if (t >= num_frames)
    throw std::out_of_range("frame " + std::to_string(t) + " outside a " +
                            std::to_string(num_frames) + "-frame sequence");
  if (length == 0) throw std::invalid_argument("window length must be positive");
  std::vector<std::size_t> out;
  const long half = static_cast<long>(length / 2);
  for (long k = 0; k < static_cast<long>(length); ++k) {
    const long i = static_cast<long>(t) + k - half;
    out.push_back(static_cast<std::size_t>(std::clamp<long>(i, 0, static_cast<long>(num_frames) - 1)));
  }
  return out;
}

template <typename T>
Tensor<T> frame_to_input(const Tensor<float>& frames, std::size_t index) {
  const std::size_t h = frames.dim(1), w = frames.dim(2), plane = h * w;
  if (index >= frames.dim(0)) throw std::out_of_range("frame index out of range");
  Tensor<T> out({3, h, w});
  const float* src = frames.data() + index * plane;
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < plane; ++i) out.data()[c * plane + i] = static_cast<T>(src[i]);
  return out;
}

template <typename T>
Tensor<T> image_to_input(const Tensor<float>& image) {
  return frame_to_input<T>(image.reshaped({1, image.dim(0), image.dim(1)}), 0);
}

template Tensor<float> frame_to_input(const Tensor<float>&, std::size_t);
template Tensor<double> frame_to_input(const Tensor<float>&, std::size_t);
template Tensor<float> image_to_input(const Tensor<float>&);
template Tensor<double> image_to_input(const Tensor<float>&);

namespace {

json annotation_to_json(const Annotation& a) {
  return {{"class", a.class_name}, {"cx", a.cx}, {"cy", a.cy}, {"box", a.box},
          {"frame_first", a.frame_first}, {"frame_last", a.frame_last}};
}

Annotation annotation_from_json(const json& j) {
  Annotation a;
  a.class_name = j.at("class").get<std::string>();
  a.cx = j.at("cx").get<double>();
  a.cy = j.at("cy").get<double>();
  a.box = j.value("box", 40.0);
  a.frame_first = j.at("frame_first").get<int>();
  a.frame_last = j.at("frame_last").get<int>();
  if (a.frame_first > a.frame_last) throw FormatError("annotation frame_first > frame_last");
  return a;
}

std::string blob_name(const std::string& id) { return "sequences/" + id + ".bin"; }

}  // namespace

void save_dataset(const fs::path& root, const std::vector<DsaSequence>& seqs) {
  std::set<std::string> ids;
  for (const auto& s : seqs) {
    if (s.id.empty() || s.id.find_first_of("/\\") != std::string::npos)
      throw std::invalid_argument("invalid sequence id '" + s.id + "'");
    if (!ids.insert(s.id).second) throw std::invalid_argument("duplicate sequence id " + s.id);
  }
  const fs::path tmp = root.string() + ".tmp";
  std::error_code ec;
  fs::remove_all(tmp, ec);
  if (!fs::create_directories(tmp / "sequences", ec) && ec)
    throw IoError("cannot create " + tmp.string() + ": " + ec.message());
  json records = json::array();
  for (const auto& s : seqs) {
    save_tensor_file(tmp / blob_name(s.id), s.frames);
    records.push_back({{"id", s.id},
                       {"T", s.num_frames()},
                       {"H", s.height()},
                       {"W", s.width()},
                       {"fps", s.frame_rate},
                       {"spacing", s.pixel_spacing},
                       {"view", to_string(s.view)},
                       {"split", s.split},
                       {"ambiguous", s.ambiguous},
                       {"file", blob_name(s.id)},
                       {"annotation", s.annotation ? annotation_to_json(*s.annotation) : json()}});
  }
  const json manifest = {{"format", kManifestFormat}, {"sequences", records}};
  write_file_atomic(tmp / "manifest.json", manifest.dump(1) + "\n");
  if (fs::exists(root)) fs::remove_all(root, ec);
  fs::rename(tmp, root, ec);
  if (ec) throw IoError("cannot move dataset into " + root.string() + ": " + ec.message());
}

std::vector<DsaSequence> load_dataset(const fs::path& root) {
  std::ifstream in(root / "manifest.json");
  if (!in) throw IoError("cannot open " + (root / "manifest.json").string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("manifest: " + std::string(e.what()));
  }
  if (manifest.value("format", 0) != kManifestFormat)
    throw FormatError("unsupported manifest format in " + root.string());
  std::vector<DsaSequence> out;
  try {
    for (const auto& r : manifest.at("sequences")) {
      DsaSequence s;
      s.id = r.at("id").get<std::string>();
      s.frame_rate = r.value("fps", 2.0);
      s.pixel_spacing = r.value("spacing", 0.3);
      s.view = view_from_string(r.value("view", std::string("anteroposterior")));
      s.split = r.value("split", std::string("train"));
      s.ambiguous = r.value("ambiguous", false);
      s.frames = load_tensor_file<float>(root / r.at("file").get<std::string>());
      const Shape expect{r.at("T").get<std::size_t>(), r.at("H").get<std::size_t>(),
                         r.at("W").get<std::size_t>()};
      if (s.frames.shape() != expect)
        throw FormatError("sequence " + s.id + " blob shape " + shape_to_string(s.frames.shape()) +
                          " disagrees with manifest " + shape_to_string(expect));
      if (r.contains("annotation") && !r.at("annotation").is_null())
        s.annotation = annotation_from_json(r.at("annotation"));
      out.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw FormatError("manifest: " + std::string(e.what()));
  }
  return out;
}

std::vector<DsaSequence> filter_split(const std::vector<DsaSequence>& seqs, std::string_view split) {
  std::vector<DsaSequence> out;
  for (const auto& s : seqs)
    if (s.split == split) out.push_back(s);
  return out;
}

}  // namespace occlunet
