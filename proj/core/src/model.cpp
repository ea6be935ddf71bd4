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

#include "occlunet/model.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "occlunet/serialize.hpp"

namespace occlunet {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(ModelVariant v) {
  switch (v) {
    case ModelVariant::kOccluNet1: return "occlunet1";
    case ModelVariant::kOccluNet2: return "occlunet2";
    case ModelVariant::kMinipBaseline: return "minip-baseline";
  }
  return "?";
}

ModelVariant variant_from_string(std::string_view s) {
  for (auto v : {ModelVariant::kOccluNet1, ModelVariant::kOccluNet2, ModelVariant::kMinipBaseline})
    if (to_string(v) == s) return v;
  throw std::invalid_argument("unknown model variant '" + std::string(s) + "'");
}

void ModelConfig::validate() const {
  if (channels == 0 || heads == 0 || channels % heads != 0)
    throw std::invalid_argument("channels must be a positive multiple of heads");
  if (blocks == 0) throw std::invalid_argument("blocks must be >= 1");
  if (window == 0 || window % 2 == 0) throw std::invalid_argument("window must be odd");
  if (num_classes == 0) throw std::invalid_argument("num_classes must be >= 1");
  if (input_size == 0 || input_size % 32 != 0)
    throw std::invalid_argument("input_size must be a positive multiple of 32");
}

template <typename T>
OccluNetModel<T>::OccluNetModel(const ModelConfig& cfg)
    : cfg_(cfg),
      backbone_(BackboneConfig{3, cfg.channels}),
      neck_(cfg.channels) {
  cfg_.validate();
  if (cfg_.temporal()) {
    TemporalConfig tc;
    tc.variant = cfg_.variant == ModelVariant::kOccluNet2 ? TemporalVariant::kDivided
                                                         : TemporalVariant::kTemporal;
    tc.channels = cfg_.channels;
    tc.heads = cfg_.heads;
    tc.blocks = cfg_.blocks;
    tc.max_frames = cfg_.window;
    temporal_ = TemporalModule<T>(tc);
  }
  for (auto& h : heads_) h = DecoupledHead<T>(cfg_.channels, cfg_.num_classes);
}

template <typename T>
void OccluNetModel<T>::init(std::uint64_t seed) {
  Rng rng(seed);
  backbone_.init(rng);
  neck_.init(rng);
  if (cfg_.temporal()) temporal_.init(rng);
  for (auto& h : heads_) h.init(rng);
}

template <typename T>
FeaturePyramid<T> OccluNetModel<T>::spatial_forward(const Tensor<T>& frame,
                                                    SpatialCache* cache) const {
  const auto c = backbone_.forward(frame, cache ? &cache->backbone : nullptr);
  return neck_.forward(c, cache ? &cache->neck : nullptr);
}

template <typename T>
Tensor<T> OccluNetModel<T>::spatial_backward(const FeaturePyramid<T>& grad,
                                             const SpatialCache& cache) {
  return backbone_.backward(neck_.backward(grad, cache.neck), cache.backbone);
}

template <typename T>
FeaturePyramid<T> OccluNetModel<T>::temporal_forward(
    const std::vector<const FeaturePyramid<T>*>& window,
    typename TemporalModule<T>::Cache* cache) const {
  if (!cfg_.temporal()) throw std::logic_error("baseline model has no temporal module");
  if (window.size() != cfg_.window)
    throw std::invalid_argument("window of " + std::to_string(window.size()) + " frames, model expects " +
                                std::to_string(cfg_.window));
  return temporal_.forward(window, cfg_.window / 2, cache);
}

template <typename T>
std::vector<FeaturePyramid<T>> OccluNetModel<T>::temporal_backward(
    const FeaturePyramid<T>& grad, const typename TemporalModule<T>::Cache& cache) {
  return temporal_.backward(grad, cache);
}

template <typename T>
HeadOutput<T> OccluNetModel<T>::head_forward(const FeaturePyramid<T>& p, HeadCache* cache) const {
  HeadOutput<T> out;
  for (std::size_t l = 0; l < kNumLevels; ++l)
    out.levels[l] = heads_[l].forward(p.levels[l], cache ? &cache->levels[l] : nullptr);
  return out;
}

template <typename T>
FeaturePyramid<T> OccluNetModel<T>::head_backward(const HeadOutput<T>& grad, const HeadCache& cache) {
  FeaturePyramid<T> g;
  for (std::size_t l = 0; l < kNumLevels; ++l) g.levels[l] = heads_[l].backward(grad.levels[l], cache.levels[l]);
  return g;
}

template <typename T>
HeadOutput<T> OccluNetModel<T>::forward(const std::vector<const Tensor<T>*>& frames,
                                        WindowCache* cache) const {
  const std::size_t expect = cfg_.temporal() ? cfg_.window : 1;
  if (frames.size() != expect)
    throw std::invalid_argument("model expects " + std::to_string(expect) + " input frames, got " +
                                std::to_string(frames.size()));
  if (cache) cache->frames.assign(frames.size(), {});
  std::vector<FeaturePyramid<T>> pyr;
  pyr.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i)
    pyr.push_back(spatial_forward(*frames[i], cache ? &cache->frames[i] : nullptr));
  if (!cfg_.temporal()) return head_forward(pyr[0], cache ? &cache->head : nullptr);
  std::vector<const FeaturePyramid<T>*> window;
  for (const auto& p : pyr) window.push_back(&p);
  const auto center = temporal_forward(window, cache ? &cache->temporal : nullptr);
  return head_forward(center, cache ? &cache->head : nullptr);
}

template <typename T>
std::vector<Tensor<T>> OccluNetModel<T>::backward(const HeadOutput<T>& grad, const WindowCache& cache) {
  const auto g = head_backward(grad, cache.head);
  std::vector<Tensor<T>> out;
  if (!cfg_.temporal()) {
    out.push_back(spatial_backward(g, cache.frames[0]));
    return out;
  }
  const auto slots = temporal_backward(g, cache.temporal);
  for (std::size_t i = 0; i < slots.size(); ++i) out.push_back(spatial_backward(slots[i], cache.frames[i]));
  return out;
}

template <typename T>
void OccluNetModel<T>::visit(const ParamVisitor<T>& fn) {
  backbone_.visit("backbone", fn);
  neck_.visit("neck", fn);
  if (cfg_.temporal()) temporal_.visit("temporal", fn);
  for (std::size_t l = 0; l < kNumLevels; ++l) heads_[l].visit("head.p" + std::to_string(l + 3), fn);
}

template <typename T>
void OccluNetModel<T>::zero_grad() {
  visit([](const std::string&, Param<T>& p) { p.zero_grad(); });
}

template <typename T>
std::size_t OccluNetModel<T>::num_parameters() {
  std::size_t n = 0;
  visit([&](const std::string&, Param<T>& p) { n += p.value.size(); });
  return n;
}

template class OccluNetModel<float>;
template class OccluNetModel<double>;

template <typename Dst, typename Src>
void copy_parameters(OccluNetModel<Src>& src, OccluNetModel<Dst>& dst) {
  if (!(src.config() == dst.config())) throw std::invalid_argument("copy_parameters: config mismatch");
  std::vector<Tensor<Src>*> values;
  src.visit([&](const std::string&, Param<Src>& p) { values.push_back(&p.value); });
  std::size_t i = 0;
  dst.visit([&](const std::string&, Param<Dst>& p) { p.value = values[i++]->template cast<Dst>(); });
}

template void copy_parameters<double, float>(OccluNetModel<float>&, OccluNetModel<double>&);
template void copy_parameters<float, double>(OccluNetModel<double>&, OccluNetModel<float>&);
template void copy_parameters<float, float>(OccluNetModel<float>&, OccluNetModel<float>&);

namespace {

json config_to_json(const ModelConfig& c) {
  return {{"variant", to_string(c.variant)}, {"channels", c.channels}, {"heads", c.heads},
          {"blocks", c.blocks}, {"window", c.window}, {"num_classes", c.num_classes},
          {"input_size", c.input_size}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.variant = variant_from_string(j.at("variant").get<std::string>());
  c.channels = j.at("channels").get<std::size_t>();
  c.heads = j.at("heads").get<std::size_t>();
  c.blocks = j.at("blocks").get<std::size_t>();
  c.window = j.at("window").get<std::size_t>();
  c.num_classes = j.at("num_classes").get<std::size_t>();
  c.input_size = j.at("input_size").get<std::size_t>();
  c.validate();
  return c;
}

}  // namespace

void save_checkpoint(const fs::path& dir, OccluNetModel<float>& model) {
  std::ostringstream blob;
  json tensors = json::object();
  model.visit([&](const std::string& name, Param<float>& p) {
    const auto offset = static_cast<std::size_t>(blob.tellp());
    write_tensor(blob, p.value);
    tensors[name] = {{"offset", offset}, {"shape", p.value.shape()}};
  });
  const json index = {{"format", 1}, {"config", config_to_json(model.config())}, {"tensors", tensors}};

  const fs::path tmp = dir.string() + ".tmp";
  std::error_code ec;
  fs::remove_all(tmp, ec);
  fs::create_directories(tmp, ec);
  if (ec) throw IoError("cannot create " + tmp.string() + ": " + ec.message());
  write_file_atomic(tmp / "tensors.bin", blob.str());
  write_file_atomic(tmp / "index.json", index.dump(1) + "\n");
  if (fs::exists(dir)) fs::remove_all(dir, ec);
  fs::rename(tmp, dir, ec);
  if (ec) throw IoError("cannot move checkpoint into " + dir.string() + ": " + ec.message());
}

OccluNetModel<float> load_checkpoint(const fs::path& dir) {
  std::ifstream idx(dir / "index.json");
  if (!idx) throw IoError("cannot open " + (dir / "index.json").string());
  json index;
  try {
    index = json::parse(idx);
  } catch (const json::exception& e) {
    throw FormatError("checkpoint index: " + std::string(e.what()));
  }
  if (index.value("format", 0) != 1) throw FormatError("unsupported checkpoint format");
  std::ifstream bin(dir / "tensors.bin", std::ios::binary);
  if (!bin) throw IoError("cannot open " + (dir / "tensors.bin").string());
  std::stringstream buf;
  buf << bin.rdbuf();
  const std::string bytes = buf.str();

  OccluNetModel<float> model(config_from_json(index.at("config")));
  const json& tensors = index.at("tensors");
  std::size_t seen = 0;
  model.visit([&](const std::string& name, Param<float>& p) {
    if (!tensors.contains(name)) throw FormatError("checkpoint lacks tensor " + name);
    const auto offset = tensors.at(name).at("offset").get<std::size_t>();
    if (offset >= bytes.size()) throw FormatError("tensor " + name + " offset past end of blob");
    std::istringstream is(bytes.substr(offset));
    auto t = read_tensor<float>(is);
    if (t.shape() != p.value.shape())
      throw FormatError("tensor " + name + " has shape " + shape_to_string(t.shape()) + ", model expects " +
                        shape_to_string(p.value.shape()));
    p.value = std::move(t);
    p.zero_grad();
    ++seen;
  });
  if (seen != tensors.size()) throw FormatError("checkpoint holds tensors the model does not use");
  return model;
}

}  // namespace occlunet
