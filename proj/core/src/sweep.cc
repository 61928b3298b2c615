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

#include "endgate/sweep.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "endgate/errors.h"
#include "endgate/io.h"
#include "endgate/parallel.h"

namespace endgate {

namespace {

void CheckGrid(const std::vector<double>& grid, const char* name, double lo, double hi) {
  if (grid.empty()) throw ConfigError(std::string(name) + " grid must not be empty");
  for (double v : grid) {
    if (!(v >= lo && v <= hi)) {
      throw ConfigError(std::string(name) + " grid value " + io::FormatDouble(v) + " out of range");
    }
  }
}

std::vector<std::size_t> IdOrder(const Corpus& corpus) {
  std::vector<std::size_t> order(corpus.utterances.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return corpus.utterances[a].id < corpus.utterances[b].id;
  });
  return order;
}

std::string Relative(double reference, double value) {
  if (reference == 0.0) return "";
  return io::FormatDouble(RelativeChangePct(reference, value));
}

const OperatingPoint& ReferenceFor(const SweepResult& result, FirstPass fp) {
  for (const OperatingPoint& r : result.references) {
    if (r.first_pass == fp) return r;
  }
  throw ArgumentError("no reference point for " + std::string(FirstPassName(fp)));
}

constexpr std::string_view kCsvHeader =
    "config,T_EP,eos_scale,T_arb,avg_latency_ms,eepr,eeprr_pct,wer,werr_pct,p50,p90,p99\n";

std::string Percentiles(const EvalReport& r) {
  if (!r.latency) return ",,";
  return std::to_string(r.latency->p50) + ',' + std::to_string(r.latency->p90) + ',' +
         std::to_string(r.latency->p99);
}

std::string CsvRow(const OperatingPoint& p, const OperatingPoint& ref) {
  std::string row = std::string(FirstPassName(p.first_pass)) + ',' + io::FormatDouble(p.t_ep) +
                    ',' + io::FormatDouble(p.eos_scale) + ',' +
                    (p.t_arb ? io::FormatDouble(*p.t_arb) : std::string()) + ',' +
                    (p.avg_latency() ? io::FormatDouble(*p.avg_latency()) : std::string()) + ',' +
                    io::FormatDouble(p.eepr()) + ',' +
                    Relative(ref.eepr(), p.eepr()) + ',' + io::FormatDouble(p.wer()) + ',' +
                    Relative(ref.wer(), p.wer()) + ',' + Percentiles(p.report) + '\n';
  return row;
}

std::vector<FirstPass> ConfigsOf(const SweepResult& result) {
  std::vector<FirstPass> out;
  for (const OperatingPoint& r : result.references) out.push_back(r.first_pass);
  return out;
}

std::string Fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

struct Series {
  std::string label;
  std::string color;
  std::vector<std::pair<double, double>> xy;
};

std::string SvgPlot(const std::string& title, const std::string& y_label,
                    const std::vector<Series>& series) {
  constexpr double kW = 640, kH = 420, kL = 70, kR = 20, kT = 40, kB = 50;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const Series& s : series) {
    for (auto [x, y] : s.xy) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-9) x0 -= 1, x1 += 1;
  if (y1 - y0 < 1e-9) y0 -= 1, y1 += 1;
  auto px = [&](double x) { return kL + (x - x0) / (x1 - x0) * (kW - kL - kR); };
  auto py = [&](double y) { return kH - kB - (y - y0) / (y1 - y0) * (kH - kT - kB); };
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kW / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title << "</text>\n"
      << "<line x1=\"" << kL << "\" y1=\"" << kH - kB << "\" x2=\"" << kW - kR << "\" y2=\""
      << kH - kB << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << kL << "\" y1=\"" << kT << "\" x2=\"" << kL << "\" y2=\"" << kH - kB
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0;
    const double yv = y0 + (y1 - y0) * i / 4.0;
    out << "<text x=\"" << Fixed(px(xv), 1) << "\" y=\"" << kH - kB + 16
        << "\" text-anchor=\"middle\">" << Fixed(xv, 0) << "</text>\n"
        << "<text x=\"" << kL - 6 << "\" y=\"" << Fixed(py(yv) + 4, 1)
        << "\" text-anchor=\"end\">" << Fixed(yv, 1) << "</text>\n";
  }
  out << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 10
      << "\" text-anchor=\"middle\">average latency (ms)</text>\n"
      << "<text x=\"16\" y=\"" << kH / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << kH / 2 << ")\">" << y_label << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    std::vector<std::pair<double, double>> xy = series[s].xy;
    std::sort(xy.begin(), xy.end());
    if (xy.size() > 1) {
      out << "<polyline fill=\"none\" stroke=\"" << series[s].color << "\" points=\"";
      for (auto [x, y] : xy) out << Fixed(px(x), 1) << ',' << Fixed(py(y), 1) << ' ';
      out << "\"/>\n";
    }
    for (auto [x, y] : xy) {
      out << "<circle cx=\"" << Fixed(px(x), 1) << "\" cy=\"" << Fixed(py(y), 1)
          << "\" r=\"3\" fill=\"" << series[s].color << "\"/>\n";
    }
    out << "<text x=\"" << kW - kR - 140 << "\" y=\"" << kT + 16 * s << "\" fill=\""
        << series[s].color << "\">" << series[s].label << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace

void SweepSpec::Validate() const {
  if (first_pass.empty()) throw ConfigError("first_pass list must not be empty");
  CheckGrid(t_ep_grid, "T_EP", 0.0, 1.0);
  CheckGrid(eos_scale_grid, "eos_scale", 0.0, std::numeric_limits<double>::max());
  if (!t_arb_grid.empty()) CheckGrid(t_arb_grid, "T_arb", 0.0, 1.0);
  if (!(base_t_ep >= 0.0 && base_t_ep <= 1.0)) throw ConfigError("base T_EP must lie in [0, 1]");
  if (!(base_eos_scale >= 0.0) || !std::isfinite(base_eos_scale)) {
    throw ConfigError("base eos_scale must be >= 0");
  }
  if (guardrail_frames == 0) throw ConfigError("guardrail_frames must be >= 1");
  decoder.Validate();
}

SweepCache::SweepCache(const Corpus& corpus, const FrameModel& frame_model, std::size_t jobs)
    : corpus_(corpus), jobs_(jobs) {
  if (frame_model.empty()) throw DependencyError("sweep needs a trained frame model");
  outputs_.resize(corpus.utterances.size());
  ParallelFor(outputs_.size(), jobs_, [&](std::size_t i) {
    outputs_[i] = RunFrameModel(frame_model, corpus.utterances[i]);
  });
}

const std::vector<std::vector<DecoderEvent>>& SweepCache::DecoderLogs(const DecoderConfig& config) {
  // Logs depend on the decoder config; sweeps only vary eos_scale.
  for (auto& [scale, logs] : logs_) {
    if (scale == config.eos_scale) return logs;
  }
  std::vector<std::vector<DecoderEvent>> logs(corpus_.utterances.size());
  ParallelFor(logs.size(), jobs_, [&](std::size_t i) {
    logs[i] = DecoderLog(corpus_.utterances[i], corpus_.vocab, config);
  });
  logs_.emplace_back(config.eos_scale, std::move(logs));
  return logs_.back().second;
}

std::vector<EndpointDecision> RunCachedCorpus(SweepCache* cache, const ArbitratorModel* arbitrator,
                                              const PipelineConfig& config) {
  config.Validate();
  const Corpus& corpus = cache->corpus();
  const auto& logs = cache->DecoderLogs(config.decoder);
  const std::vector<std::size_t> order = IdOrder(corpus);
  std::vector<EndpointDecision> decisions(order.size());
  ParallelFor(order.size(), cache->jobs(), [&](std::size_t i) {
    const std::size_t u = order[i];
    decisions[i] = ReplayUtterance(corpus.utterances[u], cache->outputs()[u], logs[u],
                                   arbitrator, config);
  });
  return decisions;
}

SweepResult RunSweep(const SweepSpec& spec, const Corpus& corpus, const FrameModel& frame_model,
                     const ArbitratorModel* arbitrator, std::size_t jobs) {
  spec.Validate();
  SweepCache cache(corpus, frame_model, jobs);
  return RunSweep(spec, &cache, arbitrator);
}

SweepResult RunSweep(const SweepSpec& spec, SweepCache* cache, const ArbitratorModel* arbitrator) {
  spec.Validate();
  if (!spec.t_arb_grid.empty() && !arbitrator) {
    throw DependencyError("T_arb grid given but no arbitrator checkpoint");
  }
  SweepResult result;
  auto point = [&](FirstPass fp, double t_ep, double scale, std::optional<double> t_arb) {
    PipelineConfig config;
    config.first_pass = fp;
    config.t_ep = t_ep;
    config.decoder = spec.decoder;
    config.decoder.eos_scale = scale;
    config.guardrail_frames = spec.guardrail_frames;
    config.use_arbitrator = t_arb.has_value();
    config.t_arb = t_arb.value_or(0.0);
    OperatingPoint p;
    p.first_pass = fp;
    p.t_ep = t_ep;
    p.eos_scale = scale;
    p.t_arb = t_arb;
    std::vector<EndpointDecision> decisions = RunCachedCorpus(cache, arbitrator, config);
    if (spec.mode == EeprMode::kPartial) decisions = PartialSet(decisions);
    p.report = Evaluate(decisions, spec.mode);
    return p;
  };
  for (FirstPass fp : spec.first_pass) {
    result.references.push_back(point(fp, spec.base_t_ep, spec.base_eos_scale, std::nullopt));
    for (double t_ep : spec.t_ep_grid) {
      for (double scale : spec.eos_scale_grid) {
        result.points.push_back(point(fp, t_ep, scale, std::nullopt));
      }
    }
    for (double t_arb : spec.t_arb_grid) {
      result.points.push_back(point(fp, spec.base_t_ep, spec.base_eos_scale, t_arb));
    }
  }
  return result;
}

std::vector<std::size_t> ParetoFrontier(std::span<const CurvePoint> points) {
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (points[a].latency != points[b].latency) return points[a].latency < points[b].latency;
    if (points[a].eepr != points[b].eepr) return points[a].eepr < points[b].eepr;
    return a < b;
  });
  std::vector<std::size_t> out;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i : order) {
    if (points[i].eepr < best) {
      out.push_back(i);
      best = points[i].eepr;
    }
  }
  return out;
}

std::vector<MatchedPair> MatchByLatency(std::span<const CurvePoint> baseline,
                                        std::span<const CurvePoint> arbitrated,
                                        double tolerance_ms) {
  std::vector<MatchedPair> out;
  for (std::size_t b = 0; b < baseline.size(); ++b) {
    std::optional<std::size_t> best;
    double best_gap = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < arbitrated.size(); ++a) {
      const double gap = std::fabs(arbitrated[a].latency - baseline[b].latency);
      if (gap < best_gap) {
        best_gap = gap;
        best = a;
      }
    }
    if (best && best_gap <= tolerance_ms) out.push_back({b, *best});
  }
  return out;
}

std::string CurvesCsv(const SweepResult& result) {
  std::string out(kCsvHeader);
  for (const OperatingPoint& p : result.points) out += CsvRow(p, ReferenceFor(result, p.first_pass));
  return out;
}

std::string FrontierCsv(const SweepResult& result) {
  std::string out(kCsvHeader);
  for (FirstPass fp : ConfigsOf(result)) {
    std::vector<const OperatingPoint*> mine;
    std::vector<CurvePoint> curve;
    for (const OperatingPoint& p : result.points) {
      if (p.first_pass != fp || !p.avg_latency()) continue;
      mine.push_back(&p);
      curve.push_back({*p.avg_latency(), p.eepr()});
    }
    for (std::size_t i : ParetoFrontier(curve)) out += CsvRow(*mine[i], ReferenceFor(result, fp));
  }
  return out;
}

void EmitCurves(const SweepResult& result, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  io::WriteFileAtomic(dir / "curves.csv", CurvesCsv(result));
  io::WriteFileAtomic(dir / "frontier.csv", FrontierCsv(result));
  for (FirstPass fp : ConfigsOf(result)) {
    const OperatingPoint& ref = ReferenceFor(result, fp);
    Series base_eeprr{"baseline", "#1f77b4", {}}, arb_eeprr{"arbitrator", "#d62728", {}};
    Series base_werr = base_eeprr, arb_werr = arb_eeprr;
    for (const OperatingPoint& p : result.points) {
      if (p.first_pass != fp || !p.avg_latency()) continue;
      Series& e = p.t_arb ? arb_eeprr : base_eeprr;
      Series& w = p.t_arb ? arb_werr : base_werr;
      if (ref.eepr() != 0.0) e.xy.emplace_back(*p.avg_latency(), RelativeChangePct(ref.eepr(), p.eepr()));
      if (ref.wer() != 0.0) w.xy.emplace_back(*p.avg_latency(), RelativeChangePct(ref.wer(), p.wer()));
    }
    const std::string name(FirstPassName(fp));
    io::WriteFileAtomic(dir / (name + "_eeprr.svg"),
                        SvgPlot(name + ": EEPRR vs average latency", "EEPRR %", {base_eeprr, arb_eeprr}));
    io::WriteFileAtomic(dir / (name + "_werr.svg"),
                        SvgPlot(name + ": WERR vs average latency", "WERR %", {base_werr, arb_werr}));
  }
}

}  // namespace endgate
