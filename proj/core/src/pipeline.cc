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

#include "endgate/pipeline.h"

#include <algorithm>
#include <ostream>
#include <sstream>

#include "endgate/errors.h"
#include "endgate/io.h"
#include "endgate/parallel.h"

namespace endgate {

namespace {

constexpr long kFrameMs = 30;

std::string JoinIds(const std::vector<int>& ids) {
  if (ids.empty()) return "-";
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(ids[i]);
  }
  return out;
}

std::vector<int> ParseIds(std::string_view text) {
  std::vector<int> ids;
  if (text == "-") return ids;
  for (std::string_view tok : io::Split(text, ',')) {
    ids.push_back(static_cast<int>(io::ParseInt(tok)));
  }
  return ids;
}

bool ParseFlag(std::string_view text) {
  if (text == "0") return false;
  if (text == "1") return true;
  throw ParseError("expected 0 or 1, got '" + std::string(text) + "'");
}

}  // namespace

std::string_view FirstPassName(FirstPass first_pass) {
  switch (first_pass) {
    case FirstPass::kAcousticOnly: return "acoustic_only";
    case FirstPass::kE2eOnly: return "e2e_only";
    case FirstPass::kBoth: return "both";
  }
  return "both";
}

FirstPass ParseFirstPass(std::string_view name) {
  if (name == "acoustic_only") return FirstPass::kAcousticOnly;
  if (name == "e2e_only") return FirstPass::kE2eOnly;
  if (name == "both") return FirstPass::kBoth;
  throw ConfigError("unknown first_pass '" + std::string(name) + "'");
}

std::string_view SourceName(Source source) {
  switch (source) {
    case Source::kNone: return "none";
    case Source::kAcoustic: return "acoustic";
    case Source::kE2e: return "e2e";
    case Source::kGuardrail: return "guardrail";
  }
  return "none";
}

Source ParseSource(std::string_view name) {
  if (name == "none") return Source::kNone;
  if (name == "acoustic") return Source::kAcoustic;
  if (name == "e2e") return Source::kE2e;
  if (name == "guardrail") return Source::kGuardrail;
  throw ParseError("unknown source '" + std::string(name) + "'");
}

void PipelineConfig::Validate() const {
  if (!(t_ep >= 0.0 && t_ep <= 1.0)) throw ConfigError("T_EP must lie in [0, 1]");
  if (!(t_arb >= 0.0 && t_arb <= 1.0)) throw ConfigError("T_arb must lie in [0, 1]");
  if (guardrail_frames == 0) throw ConfigError("guardrail_frames must be >= 1");
  decoder.Validate();
}

std::optional<long> EndpointDecision::latency_ms() const {
  if (!ep_frame) return std::nullopt;
  return (static_cast<long>(*ep_frame) - static_cast<long>(eos_frame)) * kFrameMs;
}

bool EndpointDecision::early() const { return ep_frame && *ep_frame < eos_frame; }

bool EndpointDecision::early_partial() const {
  return ep_frame && *ep_frame < audio_end_frame;
}

EndpointSession::EndpointSession(const PipelineConfig& config,
                                 const ArbitratorModel* arbitrator,
                                 const Utterance& utterance, bool record_events)
    : config_(config),
      arbitrator_(arbitrator),
      utterance_(utterance),
      record_(record_events),
      guardrail_(config.guardrail_frames) {
  if (config_.use_arbitrator && !arbitrator_) {
    throw DependencyError("pipeline configured with an arbitrator but none was loaded");
  }
  decision_.utterance_id = utterance.id;
  decision_.category = utterance.category;
  decision_.eos_frame = utterance.eos_frame;
  decision_.audio_end_frame = utterance.audio_end_frame;
  decision_.reference = utterance.TokenIds();
}

void EndpointSession::Finalize(std::size_t t, Source source) {
  done_ = true;
  decision_.ep_frame = t;
  decision_.source = source;
}

bool EndpointSession::Step(std::size_t t, const FrameModel::Output& frame,
                           std::span<const DecoderEvent> decoder_events) {
  if (done_) throw ProtocolError("endpoint session already decided");
  if (t != next_frame_) {
    throw ProtocolError("endpoint session expected frame " + std::to_string(next_frame_));
  }
  ++next_frame_;
  pooled_.Update(frame.hidden);
  bool eos = false;
  for (const DecoderEvent& e : decoder_events) {
    if (e.kind == DecoderEvent::Kind::kToken) {
      hypothesis_.push_back(e.token);
      if (record_) events_.push_back({t, Event::Kind::kToken, e.token});
    } else {
      eos = true;
      if (record_) events_.push_back({t, Event::Kind::kEos});
    }
  }
  if (guardrail_.Step(frame.vad)) {
    if (record_) events_.push_back({t, Event::Kind::kGuardrail, -1, Source::kGuardrail});
    Finalize(t, Source::kGuardrail);
    return true;
  }
  Source source = Source::kNone;
  if (config_.e2e_enabled() && eos) {
    source = Source::kE2e;
  } else if (config_.acoustic_enabled() && AcousticCandidate(frame.ep, config_.t_ep)) {
    source = Source::kAcoustic;
  }
  if (source == Source::kNone) return false;
  if (record_) events_.push_back({t, Event::Kind::kCandidate, -1, source});
  if (!config_.use_arbitrator) {
    Finalize(t, source);
    return true;
  }
  const ArbitrationResult r =
      arbitrator_->Arbitrate(pooled_, hypothesis_, &cache_, config_.t_arb);
  if (r.accept) {
    if (record_) events_.push_back({t, Event::Kind::kAccept, -1, source, r.p_arb});
    decision_.arbitrated = !decision_.rejected.empty();
    Finalize(t, source);
    return true;
  }
  if (record_) events_.push_back({t, Event::Kind::kReject, -1, source, r.p_arb});
  decision_.rejected.push_back({t, source, r.p_arb});
  return false;
}

EndpointDecision EndpointSession::Finish() {
  decision_.hypothesis = hypothesis_;
  return decision_;
}

EndpointDecision RunUtterance(const Utterance& utterance, const TokenVocab& vocab,
                              const Models& models, const PipelineConfig& config,
                              std::vector<EndpointSession::Event>* events) {
  config.Validate();
  if (!models.frame_model || models.frame_model->empty()) {
    throw DependencyError("pipeline needs a trained frame model");
  }
  FrameModelStream stream(*models.frame_model);
  DecoderSession decoder(config.decoder, utterance, vocab);
  EndpointSession session(config, models.arbitrator, utterance, events != nullptr);
  for (std::size_t t = 0; t < utterance.num_frames; ++t) {
    const FrameModel::Output out = stream.Step(utterance.frame(t));
    const std::vector<DecoderEvent> ev = decoder.Step(t);
    if (session.Step(t, out, ev)) break;
  }
  if (events) *events = session.events();
  return session.Finish();
}

EndpointDecision ReplayUtterance(const Utterance& utterance,
                                 std::span<const FrameModel::Output> outputs,
                                 std::span<const DecoderEvent> decoder_log,
                                 const ArbitratorModel* arbitrator,
                                 const PipelineConfig& config,
                                 std::vector<EndpointSession::Event>* events) {
  if (outputs.size() != utterance.num_frames) {
    throw DimensionError("replay needs one frame output per frame");
  }
  EndpointSession session(config, arbitrator, utterance, events != nullptr);
  std::size_t cursor = 0;
  for (std::size_t t = 0; t < utterance.num_frames; ++t) {
    const std::size_t begin = cursor;
    while (cursor < decoder_log.size() && decoder_log[cursor].frame == t) ++cursor;
    if (cursor < decoder_log.size() && decoder_log[cursor].frame < t) {
      throw ProtocolError("decoder log is not ordered by frame");
    }
    if (session.Step(t, outputs[t], decoder_log.subspan(begin, cursor - begin))) break;
  }
  if (events) *events = session.events();
  return session.Finish();
}

std::vector<DecoderEvent> DecoderLog(const Utterance& utterance, const TokenVocab& vocab,
                                     const DecoderConfig& config) {
  DecoderSession session(config, utterance, vocab);
  for (std::size_t t = 0; t < utterance.num_frames; ++t) session.Step(t);
  return session.log();
}

std::vector<EndpointDecision> RunCorpus(
    const Corpus& corpus, const Models& models, const PipelineConfig& config,
    std::size_t jobs, std::vector<std::vector<EndpointSession::Event>>* traces) {
  config.Validate();
  const std::size_t n = corpus.utterances.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return corpus.utterances[a].id < corpus.utterances[b].id;
  });
  std::vector<EndpointDecision> decisions(n);
  if (traces) traces->assign(n, {});
  ParallelFor(n, jobs, [&](std::size_t i) {
    decisions[i] = RunUtterance(corpus.utterances[order[i]], corpus.vocab, models, config,
                                traces ? &(*traces)[i] : nullptr);
  });
  return decisions;
}

void WriteEventTrace(std::ostream& out, const std::string& utterance_id,
                     std::span<const EndpointSession::Event> events) {
  using Kind = EndpointSession::Event::Kind;
  for (const EndpointSession::Event& e : events) {
    out << utterance_id << ' ' << e.frame << ' ';
    switch (e.kind) {
      case Kind::kToken: out << "token " << e.token; break;
      case Kind::kEos: out << "eos"; break;
      case Kind::kCandidate: out << "candidate " << SourceName(e.source); break;
      case Kind::kReject: out << "reject " << SourceName(e.source) << ' ' << io::FormatDouble(e.p_arb); break;
      case Kind::kAccept: out << "accept " << SourceName(e.source) << ' ' << io::FormatDouble(e.p_arb); break;
      case Kind::kGuardrail: out << "guardrail"; break;
    }
    out << '\n';
  }
}

void WriteDecisions(std::ostream& out, std::span<const EndpointDecision> decisions) {
  out << "endgate-decisions 1\n";
  out << "decisions " << decisions.size() << '\n';
  for (const EndpointDecision& d : decisions) {
    out << "utt " << d.utterance_id << " category=" << CategoryName(d.category)
        << " eos=" << d.eos_frame << " audio_end=" << d.audio_end_frame << " ep=";
    if (d.ep_frame) {
      out << *d.ep_frame;
    } else {
      out << "none";
    }
    out << " source=" << SourceName(d.source) << " arbitrated=" << (d.arbitrated ? 1 : 0)
        << " latency_ms=";
    if (const auto lat = d.latency_ms()) {
      out << *lat;
    } else {
      out << "none";
    }
    out << " early=" << (d.early() ? 1 : 0) << " early_partial=" << (d.early_partial() ? 1 : 0)
        << " ref=" << JoinIds(d.reference) << " hyp=" << JoinIds(d.hypothesis) << " rejected=";
    if (d.rejected.empty()) out << '-';
    for (std::size_t i = 0; i < d.rejected.size(); ++i) {
      if (i) out << ';';
      out << d.rejected[i].frame << ':' << SourceName(d.rejected[i].source) << ':'
          << io::FormatDouble(d.rejected[i].p_arb);
    }
    out << '\n';
  }
}

std::string SerializeDecisions(std::span<const EndpointDecision> decisions) {
  std::ostringstream out;
  WriteDecisions(out, decisions);
  return out.str();
}

std::vector<EndpointDecision> ParseDecisions(std::string_view text) {
  std::vector<std::string_view> lines = io::Split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) -> ParseError {
    return ParseError("decisions line " + std::to_string(line_no) + ": " + msg);
  };
  if (lines.size() < 2) {
    line_no = lines.size() + 1;
    throw fail("missing header");
  }
  line_no = 1;
  if (lines[0] != "endgate-decisions 1") throw fail("expected 'endgate-decisions 1'");
  line_no = 2;
  std::vector<std::string_view> head = io::SplitWhitespace(lines[1]);
  if (head.size() != 2 || head[0] != "decisions") throw fail("expected 'decisions <count>'");
  std::size_t count = 0;
  try {
    count = io::ParseUint(head[1]);
  } catch (const ParseError& e) {
    throw fail(e.what());
  }
  if (lines.size() != count + 2) {
    line_no = std::min(lines.size(), count + 2) + 1;
    throw fail("expected " + std::to_string(count) + " decision records, found " +
               std::to_string(lines.size() - 2));
  }
  static constexpr std::string_view kKeys[] = {
      "category", "eos", "audio_end", "ep", "source", "arbitrated", "latency_ms",
      "early", "early_partial", "ref", "hyp", "rejected"};
  std::vector<EndpointDecision> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    line_no = i + 3;
    std::vector<std::string_view> f = io::SplitWhitespace(lines[i + 2]);
    if (f.size() != 2 + std::size(kKeys) || f[0] != "utt") throw fail("malformed decision record");
    std::vector<std::string_view> values;
    for (std::size_t k = 0; k < std::size(kKeys); ++k) {
      const std::string_view field = f[2 + k];
      if (field.substr(0, kKeys[k].size()) != kKeys[k] ||
          field.size() <= kKeys[k].size() || field[kKeys[k].size()] != '=') {
        throw fail("expected field '" + std::string(kKeys[k]) + "='");
      }
      values.push_back(field.substr(kKeys[k].size() + 1));
    }
    EndpointDecision d;
    try {
      d.utterance_id = std::string(f[1]);
      d.category = ParseCategory(values[0]);
      d.eos_frame = io::ParseUint(values[1]);
      d.audio_end_frame = io::ParseUint(values[2]);
      if (values[3] != "none") d.ep_frame = io::ParseUint(values[3]);
      d.source = ParseSource(values[4]);
      d.arbitrated = ParseFlag(values[5]);
      d.reference = ParseIds(values[9]);
      d.hypothesis = ParseIds(values[10]);
      if (values[11] != "-") {
        for (std::string_view r : io::Split(values[11], ';')) {
          std::vector<std::string_view> parts = io::Split(r, ':');
          if (parts.size() != 3) throw ParseError("malformed rejected candidate");
          d.rejected.push_back({io::ParseUint(parts[0]), ParseSource(parts[1]),
                                io::ParseDouble(parts[2])});
        }
      }
      const std::string latency = d.latency_ms() ? std::to_string(*d.latency_ms()) : "none";
      if (values[6] != latency) throw ParseError("latency_ms disagrees with ep and eos");
      if (ParseFlag(values[7]) != d.early() || ParseFlag(values[8]) != d.early_partial()) {
        throw ParseError("early flags disagree with ep, eos and audio_end");
      }
      if (d.ep_frame.has_value() == (d.source == Source::kNone)) {
        throw ParseError("source must be none exactly when ep is none");
      }
    } catch (const ParseError& e) {
      throw fail(e.what());
    } catch (const Error& e) {
      throw fail(e.what());
    }
    out.push_back(std::move(d));
  }
  return out;
}

void WriteDecisionFile(const std::filesystem::path& path,
                       std::span<const EndpointDecision> decisions) {
  io::WriteFileAtomic(path, SerializeDecisions(decisions));
}

std::vector<EndpointDecision> ReadDecisionFile(const std::filesystem::path& path) {
  return ParseDecisions(io::ReadFile(path));
}

}  // namespace endgate
