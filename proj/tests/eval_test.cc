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

#include <algorithm>
#include <functional>

#include "doctest.h"
#include "endgate/errors.h"
#include "endgate/eval.h"
#include "endgate/nnkit.h"
#include "test_util.h"

namespace endgate {
namespace {

std::size_t OracleEdits(const std::vector<int>& a, const std::vector<int>& b) {
  std::function<std::size_t(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> std::size_t {
    if (i == a.size()) return b.size() - j;
    if (j == b.size()) return a.size() - i;
    return std::min({go(i + 1, j + 1) + (a[i] == b[j] ? 0 : 1), go(i + 1, j) + 1, go(i, j + 1) + 1});
  };
  return go(0, 0);
}

std::vector<std::vector<int>> AllSequences(std::size_t max_len, int vocab) {
  std::vector<std::vector<int>> out = {{}};
  std::size_t begin = 0;
  for (std::size_t len = 1; len <= max_len; ++len) {
    const std::size_t end = out.size();
    for (std::size_t i = begin; i < end; ++i) {
      for (int v = 0; v < vocab; ++v) {
        std::vector<int> s = out[i];
        s.push_back(v);
        out.push_back(s);
      }
    }
    begin = end;
  }
  return out;
}

EndpointDecision Decision(std::size_t eos, std::size_t end, std::optional<std::size_t> ep,
                          Category cat = Category::kComplete) {
  EndpointDecision d;
  d.utterance_id = "u" + std::to_string(eos) + "_" + std::to_string(ep ? *ep : 0);
  d.category = cat;
  d.eos_frame = eos;
  d.audio_end_frame = end;
  d.ep_frame = ep;
  d.source = ep ? Source::kAcoustic : Source::kNone;
  d.reference = {1, 2, 3, 4};
  d.hypothesis = {1, 3, 4};
  return d;
}

TEST_CASE("WER examples") {
  const std::vector<int> abcd = {0, 1, 2, 3};
  const std::vector<int> acd = {0, 2, 3};
  CHECK(Wer(abcd, acd) == doctest::Approx(0.25));
  const EditCounts c = EditDistance(abcd, acd);
  CHECK(c.deletions == 1);
  CHECK(c.substitutions == 0);
  CHECK(Wer(std::vector<int>{0, 1}, std::vector<int>{5, 6, 7}) == doctest::Approx(1.5));
  CHECK(Wer(abcd, abcd) == 0.0);
  CHECK_THROWS_AS(Wer(std::vector<int>{}, abcd), UndefinedMetricError);
}

TEST_CASE("edit distance matches a recursive oracle on short sequences") {
  const auto seqs = AllSequences(4, 3);
  for (const auto& a : seqs) {
    for (const auto& b : seqs) {
      const EditCounts c = EditDistance(a, b);
      REQUIRE(c.total() == OracleEdits(a, b));
      REQUIRE(a.size() - c.deletions + c.insertions == b.size());
    }
  }
}

TEST_CASE("corpus WER pools edits over references") {
  EndpointDecision a = Decision(10, 80, 12);
  EndpointDecision b = Decision(10, 80, 12);
  b.reference = {1, 2};
  b.hypothesis = {1, 2};
  const std::vector<EndpointDecision> ds = {a, b};
  CHECK(CorpusWer(ds) == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("nearest-rank percentiles") {
  std::vector<long> v(100);
  for (long i = 0; i < 100; ++i) v[static_cast<std::size_t>(i)] = 100 - i;
  CHECK(NearestRank(v, 0.5) == 50);
  CHECK(NearestRank(v, 0.9) == 90);
  CHECK(NearestRank(v, 0.99) == 99);
  CHECK(NearestRank(v, 1.0) == 100);
  CHECK(NearestRank({7}, 0.5) == 7);
  CHECK(NearestRank({1, 2, 3}, 0.5) == 2);
  CHECK_THROWS_AS(NearestRank({}, 0.5), UndefinedMetricError);
  CHECK_THROWS_AS(NearestRank({1}, 0.0), ArgumentError);
}

TEST_CASE("nearest-rank agrees with a sort oracle") {
  nn::Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(nn::Uniform01(rng) * 300);
    std::vector<long> v(n);
    for (long& x : v) x = static_cast<long>(nn::Uniform01(rng) * 50) - 25;
    std::vector<long> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int pct : {50, 90, 99}) {
      const std::size_t rank = std::max<std::size_t>(1, (static_cast<std::size_t>(pct) * n + 99) / 100);
      CHECK(NearestRank(v, pct / 100.0) == sorted[rank - 1]);
    }
  }
}

TEST_CASE("EEPR modes") {
  const std::vector<EndpointDecision> ds = {
      Decision(10, 15, 8), Decision(10, 15, 12), Decision(10, 15, 16), Decision(10, 15, std::nullopt)};
  CHECK(Eepr(ds, EeprMode::kStandard) == doctest::Approx(0.25));
  CHECK(Eepr(ds, EeprMode::kPartial) == doctest::Approx(0.5));
  CHECK_THROWS_AS(Eepr(std::vector<EndpointDecision>{}, EeprMode::kStandard), UndefinedMetricError);
  CHECK(ParseEeprMode("partial") == EeprMode::kPartial);
  CHECK_THROWS_AS(ParseEeprMode("x"), ArgumentError);
}

TEST_CASE("partial set keeps incomplete utterances") {
  const std::vector<EndpointDecision> ds = {Decision(10, 15, 8),
                                            Decision(10, 15, 12, Category::kIncomplete),
                                            Decision(10, 15, 16, Category::kHesitation)};
  const auto p = PartialSet(ds);
  REQUIRE(p.size() == 1);
  CHECK(p[0].category == Category::kIncomplete);
}

TEST_CASE("latency statistics skip undecided utterances") {
  const std::vector<EndpointDecision> ds = {Decision(10, 80, 8), Decision(10, 80, 12),
                                            Decision(10, 80, 13), Decision(10, 80, std::nullopt)};
  const LatencyStats s = ComputeLatencyStats(ds);
  CHECK(s.p50 == 60);
  CHECK(s.p99 == 90);
  CHECK(s.average == doctest::Approx(30.0));
  const std::vector<EndpointDecision> none = {Decision(10, 80, std::nullopt)};
  CHECK_THROWS_AS(ComputeLatencyStats(none), UndefinedMetricError);
}

TEST_CASE("relative change") {
  CHECK(RelativeChangePct(0.0239, 0.0219) == doctest::Approx(-8.368).epsilon(1e-3));
  CHECK(std::abs(RelativeChangePct(0.0239, 0.0219) + 8.37) <= 0.01);
  CHECK_THROWS_AS(RelativeChangePct(0.0, 0.1), UndefinedMetricError);
  EvalReport a, b;
  a.wer = 0.2;
  a.eepr = 0.1;
  b.wer = 0.1;
  b.eepr = 0.05;
  const RelativeReductions r = Reduce(a, b);
  CHECK(r.werr_pct == doctest::Approx(-50.0));
  CHECK(r.eeprr_pct == doctest::Approx(-50.0));
}

TEST_CASE("report text and CSV") {
  const std::vector<EndpointDecision> ds = {Decision(10, 80, 8), Decision(10, 80, 12)};
  const EvalReport r = Evaluate(ds, EeprMode::kStandard);
  CHECK(r.n_utterances == 2);
  CHECK(r.n_decided == 2);
  CHECK(r.fingerprint.size() == 16);
  CHECK(ParseReport(FormatReport(r)) == r);
  testing::TempDir dir;
  WriteReportFile(dir / "r.txt", r);
  CHECK(ReadReportFile(dir / "r.txt") == r);
  CHECK_THROWS_AS(ParseReport("endgate-report 2\n"), ParseError);
  CHECK(ReportCsvHeader() == "WER,WERR,EEPR,EEPRR,P50,P90,P99,avg");
  const std::string row = ReportCsvRow(r, std::nullopt);
  CHECK(std::count(row.begin(), row.end(), ',') == 7);
  CHECK(row.find(",,") != std::string::npos);
  EvalReport base = r;
  base.eepr = 1.0;
  const std::string rel = ReportCsvRow(r, base);
  CHECK(rel.find("-50") != std::string::npos);
}

TEST_CASE("a report with no decided utterances has no latency") {
  const std::vector<EndpointDecision> ds = {
      Decision(10, 12, std::nullopt, Category::kIncomplete),
      Decision(20, 25, std::nullopt, Category::kIncomplete)};
  const EvalReport r = Evaluate(ds, EeprMode::kPartial);
  CHECK(r.n_decided == 0);
  CHECK(r.eepr == 0.0);
  CHECK_FALSE(r.latency.has_value());
  const std::string text = FormatReport(r);
  CHECK(text.find("latency_p50_ms none\n") != std::string::npos);
  CHECK(ParseReport(text) == r);
  const std::string row = ReportCsvRow(r, std::nullopt);
  CHECK(row.substr(row.size() - 4) == ",,,,");
  std::string mixed = text;
  mixed.replace(mixed.find("latency_p90_ms none"), 19, "latency_p90_ms 30");
  CHECK_THROWS_AS(ParseReport(mixed), ParseError);
}

}  // namespace
}  // namespace endgate
