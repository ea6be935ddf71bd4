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

#include "occlunet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace occlunet {

GradCheckResult finite_diff_check_detailed(const ScalarFn& f, const Tensor<double>& x,
                                           double h) {
  Tensor<double> analytic(x.shape());
  f(x, &analytic);
  Tensor<double> probe = x;
  GradCheckResult res;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double fp = f(probe, nullptr);
    probe[i] = orig - h;
    const double fm = f(probe, nullptr);
    probe[i] = orig;
    const double numeric = (fp - fm) / (2.0 * h);
    const double a = analytic[i];
    const double err =
        std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
    if (err > res.max_rel_error || !std::isfinite(err)) {
      res.max_rel_error = std::isfinite(err) ? err : std::numeric_limits<double>::infinity();
      res.worst_index = i;
      res.analytic = a;
      res.numeric = numeric;
    }
  }
  return res;
}

}  // namespace occlunet
