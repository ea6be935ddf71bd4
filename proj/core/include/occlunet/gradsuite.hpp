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

#ifndef OCCLUNET_GRADSUITE_HPP_
#define OCCLUNET_GRADSUITE_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <vector>

// Central-difference checks of every analytic backward pass, at 64-bit.
namespace occlunet {

struct GradCase {
  std::string name;
  /// Max relative error over the checked coordinates for one seed. With
  /// `corrupt` the analytic gradient is deliberately distorted.
  std::function<double(std::uint64_t seed, bool corrupt)> run;
};

const std::vector<GradCase>& gradient_cases();

struct GradSuiteRow {
  std::string name;
  std::size_t seeds = 0;
  double max_error = 0;
  bool passed = false;
};

struct GradSuiteOptions {
  std::size_t seeds = 20;
  std::uint64_t first_seed = 1;
  double threshold = 1e-4;
  std::set<std::string> only;     // empty: all cases
  std::set<std::string> corrupt;  // cases run with a distorted backward
};

std::vector<GradSuiteRow> run_gradient_suite(const GradSuiteOptions& opts);

}  // namespace occlunet

#endif  // OCCLUNET_GRADSUITE_HPP_
