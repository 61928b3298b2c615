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

#include "endgate/config.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "endgate/errors.h"
#include "endgate/io.h"

namespace endgate {

namespace {

struct Field {
  std::string section;
  std::string key;
  std::function<void(Config&, std::string_view)> set;
  std::function<std::string(const Config&)> get;
};

template <typename T, typename Ref>
Field Make(std::string section, std::string key, Ref ref,
           std::function<T(std::string_view)> parse,
           std::function<std::string(const T&)> format) {
  return {std::move(section), std::move(key),
          [ref, parse](Config& c, std::string_view v) { ref(c) = parse(v); },
          [ref, format](const Config& c) { return format(ref(const_cast<Config&>(c))); }};
}

std::size_t ParseSize(std::string_view v) { return static_cast<std::size_t>(io::ParseUint(v)); }
std::string FormatSize(const std::size_t& v) { return std::to_string(v); }
std::string FormatU64(const std::uint64_t& v) { return std::to_string(v); }
std::string FormatReal(const double& v) { return io::FormatDouble(v); }

bool ParseBool(std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ParseError("expected true or false, got '" + std::string(v) + "'");
}
std::string FormatBool(const bool& v) { return v ? "true" : "false"; }

template <typename T>
std::vector<T> ParseList(std::string_view v, const std::function<T(std::string_view)>& item) {
  std::vector<T> out;
  if (v.empty() || v == "none") return out;
  for (std::string_view part : io::Split(v, ',')) {
    while (!part.empty() && part.front() == ' ') part.remove_prefix(1);
    while (!part.empty() && part.back() == ' ') part.remove_suffix(1);
    out.push_back(item(part));
  }
  return out;
}

template <typename T>
std::string FormatList(const std::vector<T>& v, const std::function<std::string(const T&)>& item) {
  if (v.empty()) return "none";
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += item(v[i]);
  }
  return out;
}

#define SIZE_FIELD(sec, key, expr) \
  Make<std::size_t>(sec, key, [](Config& c) -> std::size_t& { return expr; }, ParseSize, FormatSize)
#define REAL_FIELD(sec, key, expr) \
  Make<double>(sec, key, [](Config& c) -> double& { return expr; }, io::ParseDouble, FormatReal)

std::vector<Field> Fields() {
  using SizeList = std::vector<std::size_t>;
  using RealList = std::vector<double>;
  const std::function<std::size_t(std::string_view)> size_item = ParseSize;
  const std::function<std::string(const std::size_t&)> size_fmt = FormatSize;
  const std::function<double(std::string_view)> real_item = io::ParseDouble;
  const std::function<std::string(const double&)> real_fmt = FormatReal;
  auto size_list = [=](std::string sec, std::string key, SizeList& (*ref)(Config&)) {
    return Make<SizeList>(sec, key, ref,
                          [=](std::string_view v) { return ParseList(v, size_item); },
                          [=](const SizeList& v) { return FormatList(v, size_fmt); });
  };
  auto real_list = [=](std::string sec, std::string key, RealList& (*ref)(Config&)) {
    return Make<RealList>(sec, key, ref,
                          [=](std::string_view v) { return ParseList(v, real_item); },
                          [=](const RealList& v) { return FormatList(v, real_fmt); });
  };
  auto activation = [](std::string sec, std::string key, nn::Activation& (*ref)(Config&)) {
    return Make<nn::Activation>(sec, key, ref, nn::ParseActivation,
                                [](const nn::Activation& a) { return std::string(nn::ActivationName(a)); });
  };
  auto train = [](const std::string& sec, nn::TrainConfig& (*ref)(Config&)) {
    std::vector<Field> f;
    f.push_back(Make<double>(sec, "learning_rate", [ref](Config& c) -> double& { return ref(c).learning_rate; },
                             io::ParseDouble, FormatReal));
    f.push_back(Make<std::size_t>(sec, "epochs", [ref](Config& c) -> std::size_t& { return ref(c).epochs; },
                                  ParseSize, FormatSize));
    f.push_back(Make<std::size_t>(sec, "batch_size", [ref](Config& c) -> std::size_t& { return ref(c).batch_size; },
                                  ParseSize, FormatSize));
    f.push_back(Make<double>(sec, "l2", [ref](Config& c) -> double& { return ref(c).l2; },
                             io::ParseDouble, FormatReal));
    return f;
  };

  std::vector<Field> f = {
      Make<std::uint64_t>("run", "seed", [](Config& c) -> std::uint64_t& { return c.seed; },
                          io::ParseUint, FormatU64),
      SIZE_FIELD("run", "jobs", c.jobs),

      SIZE_FIELD("corpus", "num_complete", c.corpus.num_complete),
      SIZE_FIELD("corpus", "num_hesitation", c.corpus.num_hesitation),
      SIZE_FIELD("corpus", "num_incomplete", c.corpus.num_incomplete),
      SIZE_FIELD("corpus", "vocab_content", c.corpus.vocab_content),
      SIZE_FIELD("corpus", "vocab_terminal", c.corpus.vocab_terminal),
      SIZE_FIELD("corpus", "vocab_filler", c.corpus.vocab_filler),
      SIZE_FIELD("corpus", "tokens_min", c.corpus.tokens_min),
      SIZE_FIELD("corpus", "tokens_max", c.corpus.tokens_max),
      SIZE_FIELD("corpus", "token_frames_min", c.corpus.token_frames_min),
      SIZE_FIELD("corpus", "token_frames_max", c.corpus.token_frames_max),
      SIZE_FIELD("corpus", "gap_frames_max", c.corpus.gap_frames_max),
      SIZE_FIELD("corpus", "lead_frames_min", c.corpus.lead_frames_min),
      SIZE_FIELD("corpus", "lead_frames_max", c.corpus.lead_frames_max),
      SIZE_FIELD("corpus", "pause_frames_min", c.corpus.pause_frames_min),
      SIZE_FIELD("corpus", "pause_frames_max", c.corpus.pause_frames_max),
      SIZE_FIELD("corpus", "hesitation_tail_tokens", c.corpus.hesitation_tail_tokens),
      SIZE_FIELD("corpus", "trailing_frames_min", c.corpus.trailing_frames_min),
      SIZE_FIELD("corpus", "trailing_frames_max", c.corpus.trailing_frames_max),
      SIZE_FIELD("corpus", "incomplete_tail_min", c.corpus.incomplete_tail_min),
      SIZE_FIELD("corpus", "incomplete_tail_max", c.corpus.incomplete_tail_max),
      REAL_FIELD("corpus", "filler_prob", c.corpus.filler_prob),
      REAL_FIELD("corpus", "hesitation_filler_prob", c.corpus.hesitation_filler_prob),
      REAL_FIELD("corpus", "silence_mean", c.corpus.silence_mean),
      REAL_FIELD("corpus", "speech_mean", c.corpus.speech_mean),
      REAL_FIELD("corpus", "noise_std", c.corpus.noise_std),
      REAL_FIELD("corpus", "loudness_min", c.corpus.loudness_min),
      REAL_FIELD("corpus", "class_offset", c.corpus.class_offset),
      REAL_FIELD("corpus", "split_train", c.split.train),
      REAL_FIELD("corpus", "split_dev", c.split.dev),
      REAL_FIELD("corpus", "split_test", c.split.test),

      Make<int>("features", "sample_rate", [](Config& c) -> int& { return c.features.sample_rate; },
                [](std::string_view v) { return static_cast<int>(io::ParseInt(v)); },
                [](const int& v) { return std::to_string(v); }),
      SIZE_FIELD("features", "window_samples", c.features.window_samples),
      SIZE_FIELD("features", "hop_samples", c.features.hop_samples),
      SIZE_FIELD("features", "fft_size", c.features.fft_size),
      SIZE_FIELD("features", "num_mels", c.features.num_mels),
      REAL_FIELD("features", "low_hz", c.features.low_hz),
      REAL_FIELD("features", "high_hz", c.features.high_hz),
      REAL_FIELD("features", "energy_floor", c.features.energy_floor),

      SIZE_FIELD("frame_model", "window", c.frame_model.window),
      SIZE_FIELD("frame_model", "projection_dim", c.frame_model.projection_dim),
      size_list("frame_model", "hidden", [](Config& c) -> SizeList& { return c.frame_model.hidden; }),
      activation("frame_model", "activation", [](Config& c) -> nn::Activation& { return c.frame_model.activation; }),

      SIZE_FIELD("arbitrator", "acoustic_dim", c.arbitrator.acoustic_dim),
      SIZE_FIELD("arbitrator", "text_embedding_dim", c.arbitrator.text_embedding_dim),
      SIZE_FIELD("arbitrator", "text_dim", c.arbitrator.text_dim),
      size_list("arbitrator", "fusion_hidden", [](Config& c) -> SizeList& { return c.arbitrator.fusion_hidden; }),
      activation("arbitrator", "activation", [](Config& c) -> nn::Activation& { return c.arbitrator.activation; }),
      SIZE_FIELD("arbitrator", "window_before", c.arbitrator_sampling.window_before),
      SIZE_FIELD("arbitrator", "window_after", c.arbitrator_sampling.window_after),
      SIZE_FIELD("arbitrator", "early_samples", c.arbitrator_sampling.early_samples),

      REAL_FIELD("decoder", "p_delay", c.decoder.p_delay),
      REAL_FIELD("decoder", "substitution_rate", c.decoder.substitution_rate),
      REAL_FIELD("decoder", "eos_prob", c.decoder.eos_prob),
      REAL_FIELD("decoder", "false_eos_prob", c.decoder.false_eos_prob),
      SIZE_FIELD("decoder", "false_eos_min_pause", c.decoder.false_eos_min_pause),

      Make<FirstPass>("pipeline", "first_pass", [](Config& c) -> FirstPass& { return c.pipeline.first_pass; },
                      ParseFirstPass, [](const FirstPass& v) { return std::string(FirstPassName(v)); }),
      Make<bool>("pipeline", "use_arbitrator", [](Config& c) -> bool& { return c.pipeline.use_arbitrator; },
                 ParseBool, FormatBool),
      REAL_FIELD("pipeline", "T_EP", c.pipeline.t_ep),
      REAL_FIELD("pipeline", "T_arb", c.pipeline.t_arb),
      REAL_FIELD("pipeline", "eos_scale", c.pipeline.decoder.eos_scale),
      SIZE_FIELD("pipeline", "guardrail_frames", c.pipeline.guardrail_frames),

      Make<std::vector<FirstPass>>(
          "sweep", "first_pass", [](Config& c) -> std::vector<FirstPass>& { return c.sweep.first_pass; },
          [](std::string_view v) {
            return ParseList<FirstPass>(v, std::function<FirstPass(std::string_view)>(ParseFirstPass));
          },
          [](const std::vector<FirstPass>& v) {
            return FormatList<FirstPass>(v, std::function<std::string(const FirstPass&)>(
                                                [](const FirstPass& x) { return std::string(FirstPassName(x)); }));
          }),
      real_list("sweep", "T_EP", [](Config& c) -> RealList& { return c.sweep.t_ep_grid; }),
      real_list("sweep", "eos_scale", [](Config& c) -> RealList& { return c.sweep.eos_scale_grid; }),
      real_list("sweep", "T_arb", [](Config& c) -> RealList& { return c.sweep.t_arb_grid; }),
      REAL_FIELD("sweep", "base_T_EP", c.sweep.base_t_ep),
      REAL_FIELD("sweep", "base_eos_scale", c.sweep.base_eos_scale),
      Make<std::string>("sweep", "corpus", [](Config& c) -> std::string& { return c.sweep_corpus; },
                        [](std::string_view v) { return std::string(v); },
                        [](const std::string& v) { return v; }),
      Make<std::string>("sweep", "frame_model", [](Config& c) -> std::string& { return c.sweep_frame_model; },
                        [](std::string_view v) { return std::string(v); },
                        [](const std::string& v) { return v; }),
      Make<std::string>("sweep", "arbitrator", [](Config& c) -> std::string& { return c.sweep_arbitrator; },
                        [](std::string_view v) { return std::string(v); },
                        [](const std::string& v) { return v; }),
      Make<EeprMode>("sweep", "mode", [](Config& c) -> EeprMode& { return c.sweep.mode; },
                     ParseEeprMode, [](const EeprMode& m) { return std::string(EeprModeName(m)); }),
  };
  for (Field& t : train("frame_train", [](Config& c) -> nn::TrainConfig& { return c.frame_train; })) {
    f.push_back(std::move(t));
  }
  for (Field& t : train("arbitrator_train", [](Config& c) -> nn::TrainConfig& { return c.arbitrator_train; })) {
    f.push_back(std::move(t));
  }
  return f;
}

#undef SIZE_FIELD
#undef REAL_FIELD

const std::vector<std::string>& SectionOrder() {
  static const std::vector<std::string> order = {
      "run", "corpus", "features", "frame_model", "frame_train", "arbitrator",
      "arbitrator_train", "decoder", "pipeline", "sweep"};
  return order;
}

// Prefixes a validation message with its section.
template <typename Fn>
void Check(const std::string& section, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    throw ConfigError("[" + section + "] " + e.what());
  }
}

void NeedProbability(double v, const char* key) {
  if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string(key) + " must lie in [0, 1]");
}

}  // namespace

void Config::Resolve() {
  corpus.seed = io::DeriveSeed(seed, "corpus", 0);
  frame_train.seed = io::DeriveSeed(seed, "frame_train", 0);
  arbitrator_train.seed = io::DeriveSeed(seed, "arbitrator_train", 0);
  decoder.seed = io::DeriveSeed(seed, "decoder", 0);
  const double scale = pipeline.decoder.eos_scale;
  pipeline.decoder = decoder;
  pipeline.decoder.eos_scale = scale;
  sweep.decoder = decoder;
  sweep.guardrail_frames = pipeline.guardrail_frames;
}

std::uint64_t Config::split_seed() const { return io::DeriveSeed(seed, "split", 0); }

void Config::Validate() const {
  Check("corpus", [&] {
    corpus.Validate();
    for (double x : {split.train, split.dev, split.test}) {
      if (!(x > 0.0)) throw ConfigError("split_train/split_dev/split_test must be positive");
    }
    if (std::abs(split.train + split.dev + split.test - 1.0) > 1e-9) {
      throw ConfigError("split_train + split_dev + split_test must equal 1");
    }
  });
  Check("features", [&] { features.Validate(); });
  Check("frame_model", [&] { frame_model.Validate(); });
  Check("frame_train", [&] { frame_train.Validate(); });
  Check("arbitrator", [&] { arbitrator.Validate(); });
  Check("arbitrator_train", [&] { arbitrator_train.Validate(); });
  Check("decoder", [&] {
    NeedProbability(decoder.p_delay, "p_delay");
    NeedProbability(decoder.substitution_rate, "substitution_rate");
    NeedProbability(decoder.eos_prob, "eos_prob");
    NeedProbability(decoder.false_eos_prob, "false_eos_prob");
    decoder.Validate();
  });
  Check("pipeline", [&] {
    if (!(pipeline.decoder.eos_scale >= 0.0) || !std::isfinite(pipeline.decoder.eos_scale)) {
      throw ConfigError("eos_scale must be >= 0");
    }
    pipeline.Validate();
  });
  Check("sweep", [&] { sweep.Validate(); });
}

Config ParseConfigText(std::string_view text, const std::string& source) {
  boost::property_tree::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(source + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  std::map<std::pair<std::string, std::string>, const Field*> index;
  static const std::vector<Field> fields = Fields();
  for (const Field& f : fields) index[{f.section, f.key}] = &f;

  Config config;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw ConfigError(source + ": key '" + section + "' must belong to a section");
    }
    if (std::find(SectionOrder().begin(), SectionOrder().end(), section) == SectionOrder().end()) {
      throw ConfigError(source + ": unknown section [" + section + "]");
    }
    for (const auto& [key, value] : body) {
      auto it = index.find({section, key});
      if (it == index.end()) {
        throw ConfigError(source + ": unknown key '" + key + "' in [" + section + "]");
      }
      try {
        it->second->set(config, value.data());
      } catch (const Error& e) {
        throw ConfigError(source + ": [" + section + "] " + key + ": " + e.what());
      }
    }
  }
  config.Resolve();
  config.Validate();
  return config;
}

Config ParseConfigFile(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::ReadFile(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  return ParseConfigText(text, path.string());
}

std::string DumpConfig(const Config& config) {
  static const std::vector<Field> fields = Fields();
  std::string out;
  for (const std::string& section : SectionOrder()) {
    out += "[" + section + "]\n";
    for (const Field& f : fields) {
      if (f.section == section) out += f.key + " = " + f.get(config) + "\n";
    }
  }
  return out;
}

void ApplySeedOverride(Config* config) {
  const char* env = std::getenv("ENDGATE_SEED");
  if (!env) return;
  try {
    config->seed = io::ParseUint(env);
  } catch (const Error& e) {
    throw ConfigError(std::string("ENDGATE_SEED: ") + e.what());
  }
  config->Resolve();
}

}  // namespace endgate
