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

#ifndef OCCLUNET_BOX_CODEC_HPP_
#define OCCLUNET_BOX_CODEC_HPP_

#include <algorithm>
#include <array>
#include <cmath>

namespace occlunet {

// Log-size predictions above this are clamped so exp() stays finite.
inline constexpr double kMaxLogSize = 12.0;

/// Cell-relative regression to a center-format box in input pixels:
/// cx = (gx + dx) * s, w = exp(dw) * s.
inline std::array<double, 4> decode_box(double dx, double dy, double dw, double dh, int gx,
                                        int gy, int stride) {
  const double s = stride;
  return {(gx + dx) * s, (gy + dy) * s, std::exp(std::min(dw, kMaxLogSize)) * s,
          std::exp(std::min(dh, kMaxLogSize)) * s};
}

}  // namespace occlunet

#endif  // OCCLUNET_BOX_CODEC_HPP_
