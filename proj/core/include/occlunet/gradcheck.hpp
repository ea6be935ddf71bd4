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

#ifndef OCCLUNET_GRADCHECK_HPP_
#define OCCLUNET_GRADCHECK_HPP_

#include <functional>

#include "occlunet/tensor.hpp"

namespace occlunet {

/// Scalar function of a tensor. When `grad` is non-null the function also
/// writes its analytic gradient (same shape as x) into it.
using ScalarFn = std::function<double(const Tensor<double>& x, Tensor<double>* grad)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Central differences over every coordinate of x. Relative error per
/// coordinate is |a - n| / max(1, |a|, |n|).
GradCheckResult finite_diff_check_detailed(const ScalarFn& f, const Tensor<double>& x,
                                           double h = 1e-5);

inline double finite_diff_check(const ScalarFn& f, const Tensor<double>& x,
                                double h = 1e-5) {
  return finite_diff_check_detailed(f, x, h).max_rel_error;
}

}  // namespace occlunet

#endif  // OCCLUNET_GRADCHECK_HPP_
