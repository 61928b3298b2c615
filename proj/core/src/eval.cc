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

#include "endgate/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "endgate/errors.h"
#include "endgate/io.h"

namespace endgate {

EditCounts EditDistance(std::span<const int> ref, std::span<const int> hyp) {
  const std::size_t n = ref.size();
  const std::size_t m = hyp.size();
  std::vector<std::size_t> cost((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return cost[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t diag = at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i, j - 1) + 1, at(i - 1, j) + 1});
    }
  }
  EditCounts counts;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool match = ref[i - 1] == hyp[j - 1];
      if (at(i, j) == at(i - 1, j - 1) + (match ? 0 : 1)) {
        counts.substitutions += match ? 0 : 1;
        --i;
        --j;
        continue;
      }
    }
    if (j > 0 && at(i, j) == at(i, j - 1) + 1) {
      ++counts.insertions;
      --j;
      continue;
    }
    ++counts.deletions;
    --i;
  }
  return counts;
}

double Wer(std::span<const int> reference, std::span<const int> hypothesis) {
  if (reference.empty()) throw UndefinedMetricError("WER of an empty reference");
  return static_cast<double>(EditDistance(reference, hypothesis).total()) /
         static_cast<double>(reference.size());
}

double CorpusWer(std::span<const EndpointDecision> decisions) {
  std::size_t edits = 0, words = 0;
  for (const EndpointDecision& d : decisions) {
    edits += EditDistance(d.reference, d.hypothesis).total();
    words += d.reference.size();
  }
  if (words == 0) throw UndefinedMetricError("WER of an empty reference");
  return static_cast<double>(edits) / static_cast<double>(words);
}

std::string_view EeprModeName(EeprMode mode) {
  return mode == EeprMode::kPartial ? "partial" : "standard";
}

EeprMode ParseEeprMode(std::string_view name) {
  if (name == "standard") return EeprMode::kStandard;
  if (name == "partial") return EeprMode::kPartial;
  throw ArgumentError("unknown EEPR mode '" + std::string(name) + "'");
}

std::vector<EndpointDecision> PartialSet(std::span<const EndpointDecision> decisions) {
  std::vector<EndpointDecision> out;
  for (const EndpointDecision& d : decisions) {
    if (d.category == Category::kIncomplete) out.push_back(d);
  }
  return out;
}

double Eepr(std::span<const EndpointDecision> decisions, EeprMode mode) {
  if (decisions.empty()) throw UndefinedMetricError("EEPR of an empty decision set");
  std::size_t early = 0;
  for (const EndpointDecision& d : decisions) {
    early += mode == EeprMode::kStandard ? d.early() : d.early_partial();
  }
  return static_cast<double>(early) / static_cast<double>(decisions.size());
}

long NearestRank(std::vector<long> values, double q) {
  if (values.empty()) throw UndefinedMetricError("percentile of an empty set");
  if (!(q > 0.0 && q <= 1.0)) throw ArgumentError("quantile must lie in (0, 1]");
  std::sort(values.begin(), values.end());
  const double x = q * static_cast<double>(values.size());
  const double r = std::round(x);
  // Near-integer products snap to the integer.
  std::size_t rank = std::fabs(x - r) <= 1e-9 * std::max(1.0, x)
                         ? static_cast<std::size_t>(r)
                         : static_cast<std::size_t>(std::ceil(x));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

LatencyStats ComputeLatencyStats(std::span<const EndpointDecision> decisions) {
  std::vector<long> lat;
  for (const EndpointDecision& d : decisions) {
    if (const auto l = d.latency_ms()) lat.push_back(*l);
  }
  if (lat.empty()) throw UndefinedMetricError("no decided utterances for latency");
  LatencyStats s;
  s.p50 = NearestRank(lat, 0.5);
  s.p90 = NearestRank(lat, 0.9);
  s.p99 = NearestRank(lat, 0.99);
  s.average = static_cast<double>(std::accumulate(lat.begin(), lat.end(), 0L)) /
              static_cast<double>(lat.size());
  return s;
}

EvalReport Evaluate(std::span<const EndpointDecision> decisions, EeprMode mode) {
  EvalReport r;
  r.mode = mode;
  r.n_utterances = decisions.size();
  r.eepr = Eepr(decisions, mode);
  r.wer = CorpusWer(decisions);
  for (const EndpointDecision& d : decisions) r.n_decided += d.ep_frame.has_value();
  if (r.n_decided > 0) r.latency = ComputeLatencyStats(decisions);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(io::Fnv1a64(SerializeDecisions(decisions))));
  r.fingerprint = buf;
  return r;
}

double RelativeChangePct(double baseline, double experiment) {
  if (baseline == 0.0) throw UndefinedMetricError("relative change against a zero baseline");
  return 100.0 * (experiment - baseline) / baseline;
}

RelativeReductions Reduce(const EvalReport& baseline, const EvalReport& experiment) {
  return {RelativeChangePct(baseline.wer, experiment.wer),
          RelativeChangePct(baseline.eepr, experiment.eepr)};
}

std::string FormatReport(const EvalReport& r) {
  auto field = [&](auto get) {
    return r.latency ? get(*r.latency) : std::string("none");
  };
  const auto p50 = field([](const LatencyStats& s) { return std::to_string(s.p50); });
  const auto p90 = field([](const LatencyStats& s) { return std::to_string(s.p90); });
  const auto p99 = field([](const LatencyStats& s) { return std::to_string(s.p99); });
  const auto avg = field([](const LatencyStats& s) { return io::FormatDouble(s.average); });
  std::ostringstream out;
  out << "endgate-report 1\n"
      << "mode " << EeprModeName(r.mode) << '\n'
      << "n_utterances " << r.n_utterances << '\n'
      << "n_decided " << r.n_decided << '\n'
      << "wer " << io::FormatDouble(r.wer) << '\n'
      << "eepr " << io::FormatDouble(r.eepr) << '\n'
      << "latency_p50_ms " << p50 << '\n'
      << "latency_p90_ms " << p90 << '\n'
      << "latency_p99_ms " << p99 << '\n'
      << "latency_avg_ms " << avg << '\n'
      << "fingerprint " << r.fingerprint << '\n';
  return out.str();
}

EvalReport ParseReport(std::string_view text) {
  std::vector<std::string_view> lines = io::Split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty() || lines[0] != "endgate-report 1") {
    throw ParseError("report line 1: expected 'endgate-report 1'");
  }
  static constexpr std::string_view kKeys[] = {
      "mode", "n_utterances", "n_decided", "wer", "eepr", "latency_p50_ms",
      "latency_p90_ms", "latency_p99_ms", "latency_avg_ms", "fingerprint"};
  if (lines.size() != 1 + std::size(kKeys)) {
    throw ParseError("report: expected " + std::to_string(1 + std::size(kKeys)) + " lines");
  }
  EvalReport r;
  LatencyStats lat;
  std::size_t lat_none = 0;
  for (std::size_t k = 0; k < std::size(kKeys); ++k) {
    const std::string where = "report line " + std::to_string(k + 2) + ": ";
    const std::vector<std::string_view> f = io::SplitWhitespace(lines[k + 1]);
    if (f.size() != 2 || f[0] != kKeys[k]) {
      throw ParseError(where + "expected '" + std::string(kKeys[k]) + " <value>'");
    }
    if (k >= 5 && k <= 8 && f[1] == "none") {
      ++lat_none;
      continue;
    }
    try {
      switch (k) {
        case 0: r.mode = ParseEeprMode(f[1]); break;
        case 1: r.n_utterances = io::ParseUint(f[1]); break;
        case 2: r.n_decided = io::ParseUint(f[1]); break;
        case 3: r.wer = io::ParseDouble(f[1]); break;
        case 4: r.eepr = io::ParseDouble(f[1]); break;
        case 5: lat.p50 = io::ParseInt(f[1]); break;
        case 6: lat.p90 = io::ParseInt(f[1]); break;
        case 7: lat.p99 = io::ParseInt(f[1]); break;
        case 8: lat.average = io::ParseDouble(f[1]); break;
        case 9: r.fingerprint = std::string(f[1]); break;
      }
    } catch (const Error& e) {
      throw ParseError(where + e.what());
    }
  }
  if (lat_none != 0 && lat_none != 4) {
    throw ParseError("report: latency fields must be all set or all 'none'");
  }
  if (lat_none == 0) r.latency = lat;
  return r;
}

void WriteReportFile(const std::filesystem::path& path, const EvalReport& report) {
  io::WriteFileAtomic(path, FormatReport(report));
}

EvalReport ReadReportFile(const std::filesystem::path& path) {
  return ParseReport(io::ReadFile(path));
}

namespace {

std::string LatencyCsv(const std::optional<LatencyStats>& s) {
  if (!s) return ",,,";
  return std::to_string(s->p50) + ',' + std::to_string(s->p90) + ',' + std::to_string(s->p99) +
         ',' + io::FormatDouble(s->average);
}

}  // namespace

std::string ReportCsvHeader() { return "WER,WERR,EEPR,EEPRR,P50,P90,P99,avg"; }

std::string ReportCsvRow(const EvalReport& r, const std::optional<EvalReport>& baseline) {
  std::string werr, eeprr;
  if (baseline) {
    if (baseline->wer != 0.0) werr = io::FormatDouble(RelativeChangePct(baseline->wer, r.wer));
    if (baseline->eepr != 0.0) eeprr = io::FormatDouble(RelativeChangePct(baseline->eepr, r.eepr));
  }
  return io::FormatDouble(r.wer) + ',' + werr + ',' + io::FormatDouble(r.eepr) + ',' + eeprr +
         ',' + LatencyCsv(r.latency);
}

}  // namespace endgate
