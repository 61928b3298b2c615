// Copyright 2026 The Endgate Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ENDGATE_EVAL_H_
#define ENDGATE_EVAL_H_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "endgate/pipeline.h"

namespace endgate {

struct EditCounts {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;

  std::size_t total() const { return substitutions + deletions + insertions; }
  bool operator==(const EditCounts& other) const = default;
};

// Unit-cost alignment. Among minimum-cost alignments the backtrace prefers
// substitution (or match), then insertion, then deletion at every step.
EditCounts EditDistance(std::span<const int> reference, std::span<const int> hypothesis);

// Throws UndefinedMetricError for an empty reference.
double Wer(std::span<const int> reference, std::span<const int> hypothesis);

// Sum of edits over sum of reference lengths.
double CorpusWer(std::span<const EndpointDecision> decisions);

enum class EeprMode : std::uint8_t { kStandard, kPartial };
std::string_view EeprModeName(EeprMode mode);
EeprMode ParseEeprMode(std::string_view name);

// The partial test set: utterances cut off mid-sentence (incomplete).
std::vector<EndpointDecision> PartialSet(std::span<const EndpointDecision> decisions);

// Undecided utterances count as not early. Throws UndefinedMetricError when
// `decisions` is empty.
double Eepr(std::span<const EndpointDecision> decisions, EeprMode mode);

// Value at 1-based index ceil(q * n) of the sorted values; q in (0, 1].
long NearestRank(std::vector<long> values, double q);

struct LatencyStats {
  long p50 = 0;
  long p90 = 0;
  long p99 = 0;
  double average = 0.0;

  bool operator==(const LatencyStats& other) const = default;
};

// Over decided utterances only; throws UndefinedMetricError when none.
LatencyStats ComputeLatencyStats(std::span<const EndpointDecision> decisions);

struct EvalReport {
  EeprMode mode = EeprMode::kStandard;
  std::size_t n_utterances = 0;
  std::size_t n_decided = 0;
  double wer = 0.0;
  double eepr = 0.0;
  std::optional<LatencyStats> latency;  // unset when nothing was decided
  std::string fingerprint;

  bool operator==(const EvalReport& other) const = default;
};

// The fingerprint is a hash of the serialized decisions.
EvalReport Evaluate(std::span<const EndpointDecision> decisions, EeprMode mode);

struct RelativeReductions {
  double werr_pct = 0.0;
  double eeprr_pct = 0.0;
};

// 100 * (experiment - baseline) / baseline; throws UndefinedMetricError when
// baseline is zero.
double RelativeChangePct(double baseline, double experiment);
RelativeReductions Reduce(const EvalReport& baseline, const EvalReport& experiment);

std::string FormatReport(const EvalReport& report);
EvalReport ParseReport(std::string_view text);
void WriteReportFile(const std::filesystem::path& path, const EvalReport& report);
EvalReport ReadReportFile(const std::filesystem::path& path);

std::string ReportCsvHeader();
// Relative columns are left empty without a baseline.
std::string ReportCsvRow(const EvalReport& report,
                         const std::optional<EvalReport>& baseline);

}  // namespace endgate

#endif  // ENDGATE_EVAL_H_
