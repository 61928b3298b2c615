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

#include "cli.h"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "endgate/arbitrator.h"
#include "endgate/checkpoint.h"
#include "endgate/config.h"
#include "endgate/corpus.h"
#include "endgate/errors.h"
#include "endgate/eval.h"
#include "endgate/features.h"
#include "endgate/firstpass.h"
#include "endgate/io.h"
#include "endgate/pipeline.h"
#include "endgate/sweep.h"
#include "manifest.h"

namespace endgate::tools {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::string corpus;
  std::string out;
  std::string in;
  std::string frame_model;
  std::string arbitrator;
  std::string decisions;
  std::string baseline;
  std::string mode = "standard";
  std::string spec;
  std::string trace;
  int ms = 2000;
  std::size_t jobs = 0;
  bool jobs_set = false;
  bool csv = false;
};

class Run {
 public:
  Run(const std::vector<std::string>& args, std::ostream& out)
      : out_(out), start_(std::chrono::steady_clock::now()) {
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (i) manifest_.command += ' ';
      manifest_.command += args[i];
    }
  }

  Config LoadConfig(const std::string& path) {
    Config config;
    if (!path.empty()) {
      config = ParseConfigFile(path);
      manifest_.config_sha256 = Sha256File(path);
    } else {
      config.Resolve();
    }
    ApplySeedOverride(&config);
    config.Validate();
    manifest_.seed = config.seed;
    return config;
  }

  void Input(const fs::path& p) { manifest_.AddInput(p); }

  void Finish(const fs::path& output) {
    manifest_.outputs.push_back(output.string());
    manifest_.duration_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    WriteManifest(manifest_, output);
  }

  std::ostream& out() { return out_; }

 private:
  std::ostream& out_;
  std::chrono::steady_clock::time_point start_;
  RunManifest manifest_;
};

std::size_t Jobs(const Options& o, const Config& c) { return o.jobs_set ? o.jobs : c.jobs; }

FrameModel LoadFrameModel(const std::string& path) {
  if (!fs::exists(path)) throw DependencyError("frame model checkpoint not found: " + path);
  return FrameModel::FromCheckpoint(ReadCheckpoint(path));
}

ArbitratorModel LoadArbitrator(const std::string& path) {
  if (!fs::exists(path)) throw DependencyError("arbitrator checkpoint not found: " + path);
  return ArbitratorModel::FromCheckpoint(ReadCheckpoint(path));
}

Corpus LoadCorpusDir(const std::string& path) {
  if (!fs::is_directory(path)) throw DependencyError("corpus directory not found: " + path);
  return LoadCorpus(path);
}

void EnsureParent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

void GenCorpus(Run& run, const Options& o) {
  const Config config = run.LoadConfig(o.config);
  const Corpus corpus = GenerateCorpus(config.corpus);
  const CorpusSplit split = SplitCorpus(corpus, config.split, config.split_seed());
  const fs::path dir = o.out;
  fs::create_directories(dir);
  SaveCorpus(split.train, dir / "train");
  SaveCorpus(split.dev, dir / "dev");
  SaveCorpus(split.test, dir / "test");
  io::WriteFileAtomic(dir / "config.ini", DumpConfig(config));
  run.out() << "wrote " << corpus.utterances.size() << " utterances (train "
            << split.train.utterances.size() << ", dev " << split.dev.utterances.size()
            << ", test " << split.test.utterances.size() << ") to " << dir.string() << '\n';
  run.Finish(dir);
}

void Featurize(Run& run, const Options& o) {
  const Config config = run.LoadConfig(o.config);
  run.Input(o.in);
  const AudioBuffer audio = ReadWav(o.in);
  const std::vector<nn::Vector> mel = LogMel(audio, config.features);
  const std::vector<FeatureFrame> frames = StackDownsample(mel);
  EnsureParent(o.out);
  WriteFeatureFile(frames, o.out);
  run.out() << mel.size() << " mel frames -> " << frames.size() << " stacked frames\n";
  run.Finish(o.out);
}

void PadSilenceCmd(Run& run, const Options& o) {
  run.Input(o.in);
  const AudioBuffer audio = ReadWav(o.in);
  const AudioBuffer padded = PadSilence(audio, o.ms);
  EnsureParent(o.out);
  WriteWav(padded, o.out);
  run.out() << "appended " << padded.samples.size() - audio.samples.size() << " zero samples\n";
  run.Finish(o.out);
}

void Train(Run& run, const Options& o) {
  const Config config = run.LoadConfig(o.config);
  const Corpus corpus = LoadCorpusDir(o.corpus);
  run.Input(o.corpus);
  const FrameModel model = TrainFrameModel(corpus, config.frame_model, config.frame_train);
  EnsureParent(o.out);
  WriteCheckpoint(model.ToCheckpoint(config.frame_train.seed), o.out);
  run.out() << "trained frame model on " << corpus.utterances.size()
            << " utterances; train EP accuracy " << io::FormatDouble(FrameEpAccuracy(model, corpus))
            << '\n';
  run.Finish(o.out);
}

void TrainArbitratorCmd(Run& run, const Options& o) {
  const Config config = run.LoadConfig(o.config);
  const FrameModel frame_model = LoadFrameModel(o.frame_model);
  const Corpus corpus = LoadCorpusDir(o.corpus);
  run.Input(o.corpus);
  run.Input(o.frame_model);
  const ArbitratorModel model =
      TrainArbitrator(corpus, frame_model, config.decoder, config.arbitrator,
                      config.arbitrator_train, config.arbitrator_sampling);
  EnsureParent(o.out);
  WriteCheckpoint(model.ToCheckpoint(config.arbitrator_train.seed), o.out);
  run.out() << "trained arbitrator on " << corpus.utterances.size() << " utterances\n";
  run.Finish(o.out);
}

void EvaluateCmd(Run& run, const Options& o) {
  Config config = run.LoadConfig(o.config);
  const FrameModel frame_model = LoadFrameModel(o.frame_model);
  std::optional<ArbitratorModel> arbitrator;
  if (!o.arbitrator.empty()) {
    arbitrator = LoadArbitrator(o.arbitrator);
    config.pipeline.use_arbitrator = true;
  } else if (config.pipeline.use_arbitrator) {
    throw DependencyError("config enables the arbitrator but --arbitrator was not given");
  }
  const Corpus corpus = LoadCorpusDir(o.corpus);
  run.Input(o.corpus);
  run.Input(o.frame_model);
  if (arbitrator) run.Input(o.arbitrator);
  Models models{&frame_model, arbitrator ? &*arbitrator : nullptr};
  std::vector<std::vector<EndpointSession::Event>> traces;
  const std::vector<EndpointDecision> decisions =
      RunCorpus(corpus, models, config.pipeline, Jobs(o, config), o.trace.empty() ? nullptr : &traces);
  EnsureParent(o.out);
  WriteDecisionFile(o.out, decisions);
  if (!o.trace.empty()) {
    std::ostringstream trace;
    for (std::size_t i = 0; i < decisions.size(); ++i) {
      WriteEventTrace(trace, decisions[i].utterance_id, traces[i]);
    }
    EnsureParent(o.trace);
    io::WriteFileAtomic(o.trace, trace.str());
  }
  run.out() << "wrote " << decisions.size() << " decisions to " << o.out << '\n';
  run.Finish(o.out);
}

void ReportCmd(Run& run, const Options& o) {
  const EeprMode mode = ParseEeprMode(o.mode);
  std::vector<EndpointDecision> decisions = ReadDecisionFile(o.decisions);
  if (mode == EeprMode::kPartial) decisions = PartialSet(decisions);
  const EvalReport report = Evaluate(decisions, mode);
  std::optional<EvalReport> baseline;
  if (!o.baseline.empty()) {
    if (!fs::exists(o.baseline)) throw DependencyError("baseline report not found: " + o.baseline);
    baseline = ReadReportFile(o.baseline);
  }
  if (o.csv) {
    run.out() << ReportCsvHeader() << '\n' << ReportCsvRow(report, baseline) << '\n';
  } else {
    run.out() << FormatReport(report);
    if (baseline) {
      const std::string row = ReportCsvRow(report, baseline);
      const std::vector<std::string_view> cols = io::Split(row, ',');
      run.out() << "werr_pct " << (cols[1].empty() ? "undefined" : std::string(cols[1])) << '\n'
                << "eeprr_pct " << (cols[3].empty() ? "undefined" : std::string(cols[3])) << '\n';
    }
  }
  if (!o.out.empty()) {
    run.Input(o.decisions);
    if (baseline) run.Input(o.baseline);
    EnsureParent(o.out);
    WriteReportFile(o.out, report);
    run.Finish(o.out);
  }
}

std::string SpecPath(const std::string& flag, const std::string& from_spec, const fs::path& spec_dir) {
  if (!flag.empty()) return flag;
  if (from_spec.empty()) return {};
  const fs::path p = from_spec;
  return (p.is_absolute() ? p : spec_dir / p).string();
}

void SweepCmd(Run& run, const Options& o) {
  const Config config = run.LoadConfig(o.spec);
  const fs::path spec_dir = fs::path(o.spec).parent_path();
  const std::string corpus_path = SpecPath(o.corpus, config.sweep_corpus, spec_dir);
  const std::string frame_path = SpecPath(o.frame_model, config.sweep_frame_model, spec_dir);
  const std::string arb_path = SpecPath(o.arbitrator, config.sweep_arbitrator, spec_dir);
  if (corpus_path.empty()) throw ConfigError("sweep needs a corpus ([sweep] corpus or --corpus)");
  if (frame_path.empty()) {
    throw ConfigError("sweep needs a frame model ([sweep] frame_model or --frame-model)");
  }
  const FrameModel frame_model = LoadFrameModel(frame_path);
  std::optional<ArbitratorModel> arbitrator;
  if (!arb_path.empty()) arbitrator = LoadArbitrator(arb_path);
  const Corpus corpus = LoadCorpusDir(corpus_path);
  run.Input(corpus_path);
  run.Input(frame_path);
  if (arbitrator) run.Input(arb_path);
  const SweepResult result = RunSweep(config.sweep, corpus, frame_model,
                                      arbitrator ? &*arbitrator : nullptr, Jobs(o, config));
  EmitCurves(result, o.out);
  run.out() << "evaluated " << result.points.size() << " operating points; wrote " << o.out << '\n';
  run.Finish(o.out);
}

}  // namespace

int Dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-pass endpointing toolkit", "endgate"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));
  Options o;
  auto jobs = [&](CLI::App* sub) {
    sub->add_option_function<std::size_t>(
           "--jobs", [&](const std::size_t& v) { o.jobs = v; o.jobs_set = true; },
           "Worker threads (default: available cores)");
  };

  CLI::App* gen = app.add_subcommand("gen-corpus", "Generate a synthetic corpus and its splits");
  gen->add_option("--config", o.config, "Config file")->check(CLI::ExistingFile);
  gen->add_option("--out", o.out, "Output directory")->required();

  CLI::App* feat = app.add_subcommand("featurize", "Compute stacked log-mel frames for a WAV file");
  feat->add_option("--in", o.in, "Input WAV (16kHz mono PCM16)")->required();
  feat->add_option("--out", o.out, "Output feature file")->required();
  feat->add_option("--config", o.config, "Config file")->check(CLI::ExistingFile);

  CLI::App* pad = app.add_subcommand("pad-silence", "Append digital silence to a WAV file");
  pad->add_option("--in", o.in, "Input WAV")->required();
  pad->add_option("--out", o.out, "Output WAV")->required();
  pad->add_option("--ms", o.ms, "Silence to append in milliseconds")->capture_default_str();

  CLI::App* train = app.add_subcommand("train", "Train the acoustic frame model");
  train->add_option("--config", o.config, "Config file")->check(CLI::ExistingFile);
  train->add_option("--corpus", o.corpus, "Training corpus directory")->required();
  train->add_option("--out", o.out, "Output checkpoint")->required();

  CLI::App* train_arb = app.add_subcommand("train-arbitrator", "Train the endpoint arbitrator");
  train_arb->add_option("--config", o.config, "Config file")->check(CLI::ExistingFile);
  train_arb->add_option("--corpus", o.corpus, "Training corpus directory")->required();
  train_arb->add_option("--frame-model", o.frame_model, "Frame model checkpoint")->required();
  train_arb->add_option("--out", o.out, "Output checkpoint")->required();

  CLI::App* eval = app.add_subcommand("evaluate", "Run the endpointing pipeline over a corpus");
  eval->add_option("--corpus", o.corpus, "Corpus directory")->required();
  eval->add_option("--frame-model", o.frame_model, "Frame model checkpoint")->required();
  eval->add_option("--arbitrator", o.arbitrator, "Arbitrator checkpoint (enables gating)");
  eval->add_option("--config", o.config, "Config file")->check(CLI::ExistingFile);
  eval->add_option("--out", o.out, "Output decision file")->required();
  eval->add_option("--trace", o.trace, "Optional event trace file");
  jobs(eval);

  CLI::App* report = app.add_subcommand("report", "Compute metrics from a decision file");
  report->add_option("--decisions", o.decisions, "Decision file")->required()->check(CLI::ExistingFile);
  report->add_option("--baseline", o.baseline, "Baseline report for relative metrics");
  report->add_option("--mode", o.mode, "standard or partial")
      ->check(CLI::IsMember({"standard", "partial"}))
      ->capture_default_str();
  report->add_option("--out", o.out, "Also write the report to this file");
  report->add_flag("--csv", o.csv, "Print one CSV row instead of the text report");

  CLI::App* sweep = app.add_subcommand("sweep", "Evaluate operating-point grids");
  sweep->add_option("--spec", o.spec, "Sweep spec (config file with a [sweep] section)")
      ->required()
      ->check(CLI::ExistingFile);
  sweep->add_option("--out", o.out, "Output directory")->required();
  sweep->add_option("--corpus", o.corpus, "Corpus directory (overrides the sweep file)");
  sweep->add_option("--frame-model", o.frame_model, "Frame model checkpoint (overrides the sweep file)");
  sweep->add_option("--arbitrator", o.arbitrator, "Arbitrator checkpoint (overrides the sweep file)");
  jobs(sweep);

  std::vector<std::string> rest(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    CLI::App* active = &app;
    for (CLI::App* sub : app.get_subcommands()) active = sub;
    err << active->help();
    return kExitUsage;
  }

  Run run(args, out);
  try {
    if (*gen) GenCorpus(run, o);
    else if (*feat) Featurize(run, o);
    else if (*pad) PadSilenceCmd(run, o);
    else if (*train) Train(run, o);
    else if (*train_arb) TrainArbitratorCmd(run, o);
    else if (*eval) EvaluateCmd(run, o);
    else if (*report) ReportCmd(run, o);
    else if (*sweep) SweepCmd(run, o);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DependencyError& e) {
    err << "dependency error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace endgate::tools
