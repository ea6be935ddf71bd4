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

#ifndef OCCLUNET_EVALUATION_HPP_
#define OCCLUNET_EVALUATION_HPP_

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "occlunet/trajectory.hpp"

namespace occlunet {

enum class OutcomeKind { kTP, kFP, kFN, kFPAndFN, kTN };

std::string_view to_string(OutcomeKind k);
OutcomeKind outcome_from_string(std::string_view s);

/// Correct for paired comparisons: TP or TN.
inline bool is_correct(OutcomeKind k) { return k == OutcomeKind::kTP || k == OutcomeKind::kTN; }

/// Ground-truth occlusion center in model-input pixels.
struct GroundTruth {
  int class_id = 0;
  double cx = 0;
  double cy = 0;
};

struct JudgeConfig {
  double center_radius_px = 25.0;
  double conf_floor = 0.01;

  void validate() const;
};

struct SequenceOutcome {
  std::string sequence_id;
  std::optional<int> gt_class;
  std::optional<int> pred_class;  // class of the judged winner, if any
  OutcomeKind result = OutcomeKind::kTN;
};

/// Sequence-level judgment. A winner qualifies when its best member clears
/// the confidence floor; a qualifying winner matches the ground truth when
/// its representative center lies within the radius (inclusive) and the
/// classes agree. A mismatch counts against both precision and recall.
SequenceOutcome judge_sequence(std::string sequence_id, const std::optional<Trajectory>& winner,
                               const std::optional<GroundTruth>& gt, const JudgeConfig& cfg);

struct ClassMetrics {
  long samples = 0;    // evaluated sequences (per class: sequences annotated with it)
  long instances = 0;  // ground-truth occlusions
  long tp = 0;
  long fp = 0;
  long fn = 0;

  /// 0/0 is reported as 0.
  double precision() const { return tp + fp == 0 ? 0.0 : double(tp) / double(tp + fp); }
  double recall() const { return tp + fn == 0 ? 0.0 : double(tp) / double(tp + fn); }

  ClassMetrics& operator+=(const ClassMetrics& o);
};

struct MetricsReport {
  ClassMetrics all;
  std::map<int, ClassMetrics> per_class;
};

MetricsReport aggregate(std::span<const SequenceOutcome> outcomes);

/// Aligned-column table (Class, Samples, Instances, P, R) with percentages.
std::string format_report_table(const MetricsReport& report,
                                const std::vector<std::string>& class_names);

struct McNemarResult {
  long b = 0;  // only A correct
  long c = 0;  // only B correct
  double p_value = 1.0;
};

/// P(X <= k) for X ~ Binomial(n, 1/2).
double binomial_half_cdf(long k, long n);

/// Exact two-sided McNemar test from discordant counts.
McNemarResult mcnemar_from_counts(long b, long c);

/// Exact two-sided McNemar test over paired correctness flags.
McNemarResult mcnemar(std::span<const bool> correct_a, std::span<const bool> correct_b);

}  // namespace occlunet

#endif  // OCCLUNET_EVALUATION_HPP_
