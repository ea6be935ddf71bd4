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


#ifndef OCCLUNET_TESTS_MCNEMAR_ORACLE_HPP_
#define OCCLUNET_TESTS_MCNEMAR_ORACLE_HPP_

#include <algorithm>
#include <cstdint>
#include <vector>

namespace occlunet::testing {

/// Two-sided exact McNemar p-value from integer binomial coefficients
/// (Pascal's triangle), for b + c <= 60.
inline double pascal_mcnemar(long b, long c) {
  const long n = b + c;
  if (n == 0) return 1.0;
  std::vector<std::uint64_t> row{1};
  for (long i = 0; i < n; ++i) {
    std::vector<std::uint64_t> next(row.size() + 1, 0);
    for (std::size_t k = 0; k < row.size(); ++k) {
      next[k] += row[k];
      next[k + 1] += row[k];
    }
    row = std::move(next);
  }
  std::uint64_t tail = 0;
  for (long k = 0; k <= std::min(b, c); ++k) tail += row[static_cast<std::size_t>(k)];
  double total = 1.0;
  for (long i = 0; i < n; ++i) total *= 2.0;
  return std::min(1.0, 2.0 * static_cast<double>(tail) / total);
}

}  // namespace occlunet::testing

#endif  // OCCLUNET_TESTS_MCNEMAR_ORACLE_HPP_
