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

#include "occlunet/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace occlunet {

std::string_view to_string(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::kTP: return "TP";
    case OutcomeKind::kFP: return "FP";
    case OutcomeKind::kFN: return "FN";
    case OutcomeKind::kFPAndFN: return "FP_and_FN";
    case OutcomeKind::kTN: return "TN";
  }
  return "?";
}

OutcomeKind outcome_from_string(std::string_view s) {
  for (auto k : {OutcomeKind::kTP, OutcomeKind::kFP, OutcomeKind::kFN, OutcomeKind::kFPAndFN,
                 OutcomeKind::kTN}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown outcome '" + std::string(s) + "'");
}

void JudgeConfig::validate() const {
  if (!(center_radius_px > 0) || !(conf_floor > 0))
    throw std::invalid_argument("judge radius and confidence floor must be positive");
}

SequenceOutcome judge_sequence(std::string sequence_id, const std::optional<Trajectory>& winner,
                               const std::optional<GroundTruth>& gt, const JudgeConfig& cfg) {
  SequenceOutcome out;
  out.sequence_id = std::move(sequence_id);
  const bool qualifies = winner && !winner->detections.empty() &&
                         winner->max_confidence() >= cfg.conf_floor;
  if (qualifies) out.pred_class = winner->class_id;
  if (!gt) {
    out.result = qualifies ? OutcomeKind::kFP : OutcomeKind::kTN;
    return out;
  }
  out.gt_class = gt->class_id;
  if (!qualifies) {
    out.result = OutcomeKind::kFN;
    return out;
  }
  const auto [cx, cy] = winner->representative_center();
  const double dist = std::hypot(cx - gt->cx, cy - gt->cy);
  out.result = (dist <= cfg.center_radius_px && winner->class_id == gt->class_id)
                   ? OutcomeKind::kTP
                   : OutcomeKind::kFPAndFN;
  return out;
}

ClassMetrics& ClassMetrics::operator+=(const ClassMetrics& o) {
  samples += o.samples;
  instances += o.instances;
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  return *this;
}

MetricsReport aggregate(std::span<const SequenceOutcome> outcomes) {
  MetricsReport r;
  for (const auto& o : outcomes) {
    ++r.all.samples;
    if (o.gt_class) {
      auto& c = r.per_class[*o.gt_class];
      ++c.samples;
      ++c.instances;
      ++r.all.instances;
    }
    switch (o.result) {
      case OutcomeKind::kTP:
        ++r.all.tp;
        ++r.per_class[*o.gt_class].tp;
        break;
      case OutcomeKind::kFN:
        ++r.all.fn;
        ++r.per_class[*o.gt_class].fn;
        break;
      case OutcomeKind::kFPAndFN:
        ++r.all.fp;
        ++r.all.fn;
        ++r.per_class[*o.gt_class].fn;
        ++r.per_class[o.pred_class.value_or(*o.gt_class)].fp;
        break;
      case OutcomeKind::kFP:
        ++r.all.fp;
        if (o.pred_class) ++r.per_class[*o.pred_class].fp;
        break;
      case OutcomeKind::kTN:
        break;
    }
  }
  return r;
}

std::string format_report_table(const MetricsReport& report,
                                const std::vector<std::string>& class_names) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-18s %8s %10s %8s %8s\n", "Class", "Samples", "Instances",
                "P (%)", "R (%)");
  os << line;
  auto row = [&](const std::string& name, const ClassMetrics& m) {
    std::snprintf(line, sizeof line, "%-18s %8ld %10ld %8.2f %8.2f\n", name.c_str(), m.samples,
                  m.instances, 100.0 * m.precision(), 100.0 * m.recall());
    os << line;
  };
  row("all", report.all);
  for (const auto& [cls, m] : report.per_class) {
    const std::string name = cls >= 0 && static_cast<std::size_t>(cls) < class_names.size()
                                 ? class_names[static_cast<std::size_t>(cls)]
                                 : "class " + std::to_string(cls);
    row(name, m);
  }
  return os.str();
}

double binomial_half_cdf(long k, long n) {
  if (n < 0) throw std::invalid_argument("binomial n must be >= 0");
  if (k < 0) return 0.0;
  if (k >= n) return 1.0;
  const double log_half_n = -static_cast<double>(n) * std::log(2.0);
  const double lg_n1 = std::lgamma(static_cast<double>(n) + 1.0);
  double sum = 0.0;
  for (long i = 0; i <= k; ++i) {
    sum += std::exp(lg_n1 - std::lgamma(static_cast<double>(i) + 1.0) -
                    std::lgamma(static_cast<double>(n - i) + 1.0) + log_half_n);
  }
  return std::min(sum, 1.0);
}

McNemarResult mcnemar_from_counts(long b, long c) {
  if (b < 0 || c < 0) throw std::invalid_argument("discordant counts must be >= 0");
  McNemarResult r{b, c, 1.0};
  if (b + c == 0) return r;
  r.p_value = 2.0 * std::min(binomial_half_cdf(std::min(b, c), b + c), 0.5);
  return r;
}

McNemarResult mcnemar(std::span<const bool> correct_a, std::span<const bool> correct_b) {
  if (correct_a.size() != correct_b.size())
    throw std::invalid_argument("paired comparison needs equal-length flag lists");
  long b = 0, c = 0;
  for (std::size_t i = 0; i < correct_a.size(); ++i) {
    if (correct_a[i] && !correct_b[i]) ++b;
    if (!correct_a[i] && correct_b[i]) ++c;
  }
  return mcnemar_from_counts(b, c);
}

}  // namespace occlunet
