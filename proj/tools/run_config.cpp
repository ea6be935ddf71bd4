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

#include "run_config.hpp"

#include <fstream>
#include <functional>
#include <set>

#include "occlunet/serialize.hpp"

namespace occlunet::cli {

using nlohmann::json;

namespace {

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  void get_with(const std::string& key, const std::function<void(const std::string&)>& parse) {
    std::string s;
    get(key, s);
    if (!j_.contains(key)) return;
    try {
      parse(s);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  void section(const std::string& key, const std::function<void(Reader&)>& fn) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    Reader sub(j_.at(key), where(key));
    fn(sub);
    sub.finish();
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) throw ConfigError("unknown config key " + where(item.key()));
  }

 private:
  std::string where(const std::string& key = "") const {
    return key.empty() ? path_ : (path_.empty() ? key : path_ + "." + key);
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace

void RunConfig::finalize() {
  model.num_classes = classes().num_classes();
  model.input_size = preprocess.input_size;
  try {
    model.validate();
    post.validate();
    judge.validate();
    optimizer.validate();
    LrSchedule s = schedule;
    s.base_lr = optimizer.base_lr;
    s.epochs = static_cast<double>(optimizer.epochs);
    s.validate();
    synth.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

RunConfig parse_run_config(const json& j) {
  RunConfig cfg;
  Reader r(j, "");
  int format = kRunConfigFormat;
  r.get("format", format);
  if (format != kRunConfigFormat) throw ConfigError("unsupported config format " + std::to_string(format));
  r.get("seed", cfg.seed);
  r.get("dataset", cfg.dataset);
  r.section("model", [&](Reader& m) {
    m.get_with("variant", [&](const std::string& s) { cfg.model.variant = variant_from_string(s); });
    m.get("channels", cfg.model.channels);
    m.get("heads", cfg.model.heads);
    m.get("blocks", cfg.model.blocks);
    m.get("window", cfg.model.window);
    m.get_with("classes", [&](const std::string& s) {
      if (s != "single" && s != "types") throw std::invalid_argument("expected 'single' or 'types'");
      cfg.multi_class = s == "types";
    });
  });
  r.section("preprocess", [&](Reader& p) {
    p.get("input_size", cfg.preprocess.input_size);
    p.get_with("normalize", [&](const std::string& s) { cfg.preprocess.normalize = normalize_mode_from_string(s); });
    p.get("flip", cfg.flip);
  });
  r.section("synth", [&](Reader& s) {
    s.get("image_size", cfg.synth.image_size);
    s.get("frames", cfg.synth.frames);
    s.get("depth", cfg.synth.depth);
    s.get("bolus_speed", cfg.synth.bolus_speed);
    s.get("occlusion_prob", cfg.synth.occlusion_prob);
    s.get("ambiguous_fraction", cfg.synth.ambiguous_fraction);
    s.get("classes", cfg.synth.classes);
    s.get("noise_sigma", cfg.synth.noise_sigma);
    s.get("background", cfg.synth.background);
    s.get("contrast", cfg.synth.contrast);
    s.get("n_train", cfg.synth.n_train);
    s.get("n_val", cfg.synth.n_val);
    s.get("n_test", cfg.synth.n_test);
    s.get("seed", cfg.synth.seed);
  });
  r.section("postprocess", [&](Reader& p) {
    p.get("decode_floor", cfg.post.decode_floor);
    p.get("nms_iou", cfg.post.nms_iou);
    p.get("link_radius_px", cfg.post.link.radius_px);
    p.get("max_gap", cfg.post.link.max_gap);
  });
  r.section("judge", [&](Reader& p) {
    p.get("center_radius_px", cfg.judge.center_radius_px);
    p.get("conf_floor", cfg.judge.conf_floor);
  });
  r.section("optimizer", [&](Reader& o) {
    o.get("momentum", cfg.optimizer.momentum);
    o.get("base_lr", cfg.optimizer.base_lr);
    o.get("weight_decay", cfg.optimizer.weight_decay);
    o.get("max_grad_norm", cfg.optimizer.max_grad_norm);
    o.get("train_batch", cfg.optimizer.train_batch);
    o.get("val_batch", cfg.optimizer.val_batch);
    o.get("epochs", cfg.optimizer.epochs);
  });
  r.section("schedule", [&](Reader& s) {
    s.get("warmup_epochs", cfg.schedule.warmup_epochs);
    s.get("fixed_epochs", cfg.schedule.fixed_epochs);
    s.get("min_ratio", cfg.schedule.min_ratio);
  });
  r.finish();
  cfg.finalize();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_run_config(j);
}

json to_json(const RunConfig& c) {
  return {
      {"format", kRunConfigFormat},
      {"seed", c.seed},
      {"dataset", c.dataset},
      {"model",
       {{"variant", to_string(c.model.variant)}, {"channels", c.model.channels}, {"heads", c.model.heads},
        {"blocks", c.model.blocks}, {"window", c.model.window}, {"classes", c.multi_class ? "types" : "single"}}},
      {"preprocess",
       {{"input_size", c.preprocess.input_size}, {"normalize", to_string(c.preprocess.normalize)}, {"flip", c.flip}}},
      {"synth",
       {{"image_size", c.synth.image_size}, {"frames", c.synth.frames}, {"depth", c.synth.depth},
        {"bolus_speed", c.synth.bolus_speed}, {"occlusion_prob", c.synth.occlusion_prob},
        {"ambiguous_fraction", c.synth.ambiguous_fraction}, {"classes", c.synth.classes},
        {"noise_sigma", c.synth.noise_sigma}, {"background", c.synth.background}, {"contrast", c.synth.contrast},
        {"n_train", c.synth.n_train}, {"n_val", c.synth.n_val}, {"n_test", c.synth.n_test}, {"seed", c.synth.seed}}},
      {"postprocess",
       {{"decode_floor", c.post.decode_floor}, {"nms_iou", c.post.nms_iou},
        {"link_radius_px", c.post.link.radius_px}, {"max_gap", c.post.link.max_gap}}},
      {"judge", {{"center_radius_px", c.judge.center_radius_px}, {"conf_floor", c.judge.conf_floor}}},
      {"optimizer",
       {{"momentum", c.optimizer.momentum}, {"base_lr", c.optimizer.base_lr},
        {"weight_decay", c.optimizer.weight_decay}, {"max_grad_norm", c.optimizer.max_grad_norm},
        {"train_batch", c.optimizer.train_batch},
        {"val_batch", c.optimizer.val_batch}, {"epochs", c.optimizer.epochs}}},
      {"schedule",
       {{"warmup_epochs", c.schedule.warmup_epochs}, {"fixed_epochs", c.schedule.fixed_epochs},
        {"min_ratio", c.schedule.min_ratio}}},
  };
}

}  // namespace occlunet::cli
