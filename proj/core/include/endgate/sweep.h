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

#ifndef ENDGATE_SWEEP_H_
#define ENDGATE_SWEEP_H_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "endgate/arbitrator.h"
#include "endgate/corpus.h"
#include "endgate/eval.h"
#include "endgate/firstpass.h"
#include "endgate/pipeline.h"

namespace endgate {

struct SweepSpec {
  std::vector<FirstPass> first_pass = {FirstPass::kBoth};
  std::vector<double> t_ep_grid = {0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<double> eos_scale_grid = {0.5, 1.0, 2.0, 4.0};
  std::vector<double> t_arb_grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  // The arbitrator curve holds the first pass at this point; it is also the
  // reference for relative metrics.
  double base_t_ep = 0.5;
  double base_eos_scale = 1.0;
  EeprMode mode = EeprMode::kStandard;
  std::size_t guardrail_frames = kGuardrailFrames;
  DecoderConfig decoder;

  void Validate() const;
};

struct OperatingPoint {
  FirstPass first_pass = FirstPass::kBoth;
  double t_ep = 0.0;
  double eos_scale = 0.0;
  std::optional<double> t_arb;  // unset for baseline points
  EvalReport report;

  std::optional<double> avg_latency() const {
    return report.latency ? std::optional<double>(report.latency->average) : std::nullopt;
  }
  double eepr() const { return report.eepr; }
  double wer() const { return report.wer; }
};

struct SweepResult {
  std::vector<OperatingPoint> points;
  // One per entry of SweepSpec::first_pass, evaluated at the base point.
  std::vector<OperatingPoint> references;
};

// Per-utterance frame-model outputs and decoder logs shared by every point.
class SweepCache {
 public:
  SweepCache(const Corpus& corpus, const FrameModel& frame_model, std::size_t jobs);
  const std::vector<std::vector<DecoderEvent>>& DecoderLogs(const DecoderConfig& config);
  const std::vector<std::vector<FrameModel::Output>>& outputs() const { return outputs_; }
  const Corpus& corpus() const { return corpus_; }
  std::size_t jobs() const { return jobs_; }

 private:
  const Corpus& corpus_;
  std::size_t jobs_;
  std::vector<std::vector<FrameModel::Output>> outputs_;
  std::vector<std::pair<double, std::vector<std::vector<DecoderEvent>>>> logs_;
};

// Decisions in utterance-id order, identical to RunCorpus with the same
// models and configuration.
std::vector<EndpointDecision> RunCachedCorpus(SweepCache* cache,
                                              const ArbitratorModel* arbitrator,
                                              const PipelineConfig& config);

// Baseline points cover T_EP x eos_scale (T_EP outer) with the arbitrator
// off; arbitrator points cover the T_arb grid at the base point. Throws
// DependencyError when the T_arb grid is non-empty and no arbitrator is given.
SweepResult RunSweep(const SweepSpec& spec, const Corpus& corpus,
                     const FrameModel& frame_model, const ArbitratorModel* arbitrator,
                     std::size_t jobs);
SweepResult RunSweep(const SweepSpec& spec, SweepCache* cache,
                     const ArbitratorModel* arbitrator);

struct CurvePoint {
  double latency = 0.0;
  double eepr = 0.0;
  bool operator==(const CurvePoint& other) const = default;
};

// Indices of the non-dominated points (componentwise <= with one strict),
// ordered by latency then EEPR; exact duplicates keep the first index.
std::vector<std::size_t> ParetoFrontier(std::span<const CurvePoint> points);

struct MatchedPair {
  std::size_t baseline = 0;    // index into the baseline curve
  std::size_t arbitrated = 0;  // index into the arbitrator curve
};

// For every baseline point, the arbitrator point nearest in average latency
// (first on ties), kept when within `tolerance_ms`.
std::vector<MatchedPair> MatchByLatency(std::span<const CurvePoint> baseline,
                                        std::span<const CurvePoint> arbitrated,
                                        double tolerance_ms = 30.0);

// Writes curves.csv, frontier.csv and two SVG plots per configuration.
void EmitCurves(const SweepResult& result, const std::filesystem::path& dir);
std::string CurvesCsv(const SweepResult& result);
std::string FrontierCsv(const SweepResult& result);

}  // namespace endgate

#endif  // ENDGATE_SWEEP_H_
