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

#ifndef OCCLUNET_TOOLS_RUN_CONFIG_HPP_
#define OCCLUNET_TOOLS_RUN_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "occlunet/data.hpp"
#include "occlunet/evaluation.hpp"
#include "occlunet/model.hpp"
#include "occlunet/pipeline.hpp"
#include "occlunet/synth.hpp"
#include "occlunet/training.hpp"

namespace occlunet::cli {

inline constexpr int kRunConfigFormat = 1;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a command may need, with the default training recipe.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string dataset;
  bool multi_class = false;  // five occlusion types instead of one class
  ModelConfig model;
  PreprocessConfig preprocess;
  bool flip = true;
  SynthConfig synth;
  PostprocessConfig post;
  JudgeConfig judge;
  OptimizerConfig optimizer;
  LrSchedule schedule;

  ClassMap classes() const {
    return multi_class ? ClassMap::occlusion_types() : ClassMap::single_class();
  }
  /// Propagates shared values (class count, input size) and checks ranges.
  void finalize();
};

/// Unknown keys anywhere are rejected.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);

}  // namespace occlunet::cli

#endif  // OCCLUNET_TOOLS_RUN_CONFIG_HPP_
