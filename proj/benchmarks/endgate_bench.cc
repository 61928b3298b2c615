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


#include <benchmark/benchmark.h>

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "endgate/arbitrator.h"
#include "endgate/config.h"
#include "endgate/corpus.h"
#include "endgate/eval.h"
#include "endgate/features.h"
#include "endgate/firstpass.h"
#include "endgate/nnkit.h"
#include "endgate/pipeline.h"
#include "endgate/sweep.h"

namespace {

using endgate::Config;

struct Fixture {
  Config config;
  endgate::Corpus corpus;
  endgate::FrameModel frame_model;
  endgate::ArbitratorModel arbitrator;
};

const Fixture& Shared() {
  static const Fixture fixture = [] {
    Fixture f;
    f.config.corpus.num_complete = 40;
    f.config.corpus.num_hesitation = 20;
    f.config.corpus.num_incomplete = 20;
    f.config.frame_train.epochs = 1;
    f.config.arbitrator_train.epochs = 1;
    f.config.Resolve();
    f.corpus = endgate::GenerateCorpus(f.config.corpus);
    f.frame_model = endgate::TrainFrameModel(f.corpus, f.config.frame_model,
                                             f.config.frame_train);
    f.arbitrator = endgate::TrainArbitrator(
        f.corpus, f.frame_model, f.config.decoder, f.config.arbitrator,
        f.config.arbitrator_train, f.config.arbitrator_sampling);
    return f;
  }();
  return fixture;
}

void BM_LogMel(benchmark::State& state) {
  endgate::AudioBuffer audio;
  audio.samples.resize(static_cast<std::size_t>(state.range(0)) * 16);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  for (double& s : audio.samples) s = dist(rng);
  for (auto _ : state) {
    auto mel = endgate::LogMel(audio);
    benchmark::DoNotOptimize(mel);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LogMel)->Arg(1000)->Arg(10000);

void BM_FrameStep(benchmark::State& state) {
  const Fixture& f = Shared();
  const endgate::Utterance& u = f.corpus.utterances.front();
  for (auto _ : state) {
    endgate::FrameModelStream stream(f.frame_model);
    for (std::size_t t = 0; t < u.num_frames; ++t) {
      benchmark::DoNotOptimize(stream.Step(u.frame(t)));
    }
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(u.num_frames));
}
BENCHMARK(BM_FrameStep);

void BM_TextEncode(benchmark::State& state) {
  const Fixture& f = Shared();
  const bool cached = state.range(0) != 0;
  const std::vector<int> tokens = f.corpus.utterances.front().TokenIds();
  endgate::TextEmbeddingCache cache;
  for (auto _ : state) {
    if (cached) {
      benchmark::DoNotOptimize(f.arbitrator.TextEncode(tokens, &cache));
    } else {
      benchmark::DoNotOptimize(f.arbitrator.TextEncode(tokens));
    }
  }
}
BENCHMARK(BM_TextEncode)->Arg(0)->Arg(1);

void BM_RunUtterance(benchmark::State& state) {
  const Fixture& f = Shared();
  endgate::PipelineConfig config = f.config.pipeline;
  config.use_arbitrator = state.range(0) != 0;
  const endgate::Models models{&f.frame_model, &f.arbitrator};
  std::size_t i = 0;
  for (auto _ : state) {
    const endgate::Utterance& u = f.corpus.utterances[i++ % f.corpus.utterances.size()];
    benchmark::DoNotOptimize(endgate::RunUtterance(u, f.corpus.vocab, models, config));
  }
}
BENCHMARK(BM_RunUtterance)->Arg(0)->Arg(1);

void BM_EditDistance(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> dist(0, 30);
  std::vector<int> a(static_cast<std::size_t>(state.range(0)));
  std::vector<int> b(a.size());
  for (int& x : a) x = dist(rng);
  for (int& x : b) x = dist(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(endgate::EditDistance(a, b));
  }
}
BENCHMARK(BM_EditDistance)->Arg(8)->Arg(64);

void BM_ParetoFrontier(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  std::vector<endgate::CurvePoint> points(static_cast<std::size_t>(state.range(0)));
  for (auto& p : points) p = {dist(rng) * 1000.0, dist(rng)};
  for (auto _ : state) {
    benchmark::DoNotOptimize(endgate::ParetoFrontier(points));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ParetoFrontier)->Range(64, 16384)->Complexity();

}  // namespace

BENCHMARK_MAIN();
