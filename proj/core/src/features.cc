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

#include "endgate/features.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <string>

#include "endgate/errors.h"
#include "endgate/io.h"

namespace endgate {

namespace {

// FFTW planning is not thread-safe; execution on distinct plans is.
std::mutex& PlannerMutex() {
  static std::mutex mu;
  return mu;
}

class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    std::lock_guard<std::mutex> lock(PlannerMutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_,
                                 FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard<std::mutex> lock(PlannerMutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() { return in_; }

  // Magnitudes of bins 0..n/2.
  void Magnitudes(std::vector<double>* mags) {
    fftw_execute(plan_);
    mags->resize(n_ / 2 + 1);
    for (std::size_t k = 0; k <= n_ / 2; ++k) {
      (*mags)[k] = std::hypot(out_[k][0], out_[k][1]);
    }
  }

 private:
  std::size_t n_;
  double* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

void PutU16(std::string* s, std::uint16_t v) {
  s->push_back(static_cast<char>(v & 0xff));
  s->push_back(static_cast<char>(v >> 8));
}

void PutU32(std::string* s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s->push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t GetU32(const std::string& s, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) {
    v = (v << 8) | static_cast<unsigned char>(s[at + i]);
  }
  return v;
}

std::uint16_t GetU16(const std::string& s, std::size_t at) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(s[at]) |
                                    (static_cast<unsigned char>(s[at + 1]) << 8));
}

}  // namespace

void MelConfig::Validate() const {
  if (sample_rate <= 0) throw ConfigError("sample_rate must be > 0");
  if (window_samples == 0 || hop_samples == 0) {
    throw ConfigError("window and hop must be positive");
  }
  if (fft_size < window_samples || (fft_size & (fft_size - 1)) != 0) {
    throw ConfigError("fft_size must be a power of two >= window_samples");
  }
  if (num_mels == 0) throw ConfigError("num_mels must be > 0");
  if (!(low_hz >= 0.0 && high_hz > low_hz && high_hz <= sample_rate / 2.0)) {
    throw ConfigError("mel range must satisfy 0 <= low < high <= rate/2");
  }
  if (!(energy_floor > 0.0)) throw ConfigError("energy_floor must be > 0");
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double MelToHz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

nn::Tensor MelFilterbank(const MelConfig& config) {
  config.Validate();
  const std::size_t bins = config.fft_size / 2 + 1;
  const double lo = HzToMel(config.low_hz);
  const double hi = HzToMel(config.high_hz);
  std::vector<double> edges(config.num_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = MelToHz(lo + (hi - lo) * static_cast<double>(i) /
                                static_cast<double>(config.num_mels + 1));
  }
  nn::Tensor fb({config.num_mels, bins});
  for (std::size_t m = 0; m < config.num_mels; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * config.sample_rate /
                       static_cast<double>(config.fft_size);
      const double rise = (f - left) / (center - left);
      const double fall = (right - f) / (right - center);
      fb.row(m)[k] = std::max(0.0, std::min(rise, fall));
    }
  }
  return fb;
}

std::vector<nn::Vector> LogMel(const AudioBuffer& audio,
                               const MelConfig& config) {
  config.Validate();
  if (audio.sample_rate != config.sample_rate) {
    throw ArgumentError("unsupported sample rate " +
                        std::to_string(audio.sample_rate) + " (expected " +
                        std::to_string(config.sample_rate) + ")");
  }
  const std::size_t n = audio.samples.size();
  if (n < config.window_samples) {
    throw ArgumentError("audio too short: " + std::to_string(n) +
                        " samples, need at least " +
                        std::to_string(config.window_samples));
  }
  const std::size_t frames = (n - config.window_samples) / config.hop_samples + 1;
  const nn::Tensor fb = MelFilterbank(config);
  std::vector<double> window(config.window_samples);
  for (std::size_t i = 0; i < window.size(); ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi *
                                     static_cast<double>(i) /
                                     static_cast<double>(window.size() - 1));
  }

  RealFft fft(config.fft_size);
  std::vector<double> mags;
  std::vector<nn::Vector> out(frames, nn::Vector(config.num_mels));
  const std::size_t bins = config.fft_size / 2 + 1;
  for (std::size_t f = 0; f < frames; ++f) {
    double* in = fft.input();
    const std::size_t start = f * config.hop_samples;
    for (std::size_t i = 0; i < config.fft_size; ++i) {
      in[i] = i < config.window_samples ? audio.samples[start + i] * window[i]
                                        : 0.0;
    }
    fft.Magnitudes(&mags);
    for (std::size_t m = 0; m < config.num_mels; ++m) {
      std::span<const double> w = fb.row(m);
      double e = 0.0;
      for (std::size_t k = 0; k < bins; ++k) e += w[k] * mags[k];
      out[f][m] = std::log(e + config.energy_floor);
    }
  }
  return out;
}

std::vector<FeatureFrame> StackDownsample(std::span<const nn::Vector> mel) {
  std::vector<FeatureFrame> out;
  out.reserve(mel.size() / kStackFactor);
  for (std::size_t k = 0; (k + 1) * kStackFactor <= mel.size(); ++k) {
    FeatureFrame frame;
    frame.frame_index = k;
    for (std::size_t j = 0; j < kStackFactor; ++j) {
      const nn::Vector& v = mel[k * kStackFactor + j];
      if (v.size() != mel.front().size()) {
        throw DimensionError("mel frames have non-uniform dimension");
      }
      frame.values.insert(frame.values.end(), v.begin(), v.end());
    }
    out.push_back(std::move(frame));
  }
  return out;
}

AudioBuffer PadSilence(const AudioBuffer& audio, int duration_ms) {
  if (duration_ms < 0) {
    throw ArgumentError("padding duration must be >= 0 ms, got " +
                        std::to_string(duration_ms));
  }
  AudioBuffer out = audio;
  const std::int64_t extra =
      static_cast<std::int64_t>(duration_ms) * audio.sample_rate / 1000;
  out.samples.resize(out.samples.size() + static_cast<std::size_t>(extra), 0.0);
  return out;
}

AudioBuffer ReadWav(const std::filesystem::path& path) {
  const std::string bytes = io::ReadFile(path);
  const std::string where = "'" + path.string() + "'";
  if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 ||
      bytes.compare(8, 4, "WAVE") != 0) {
    throw ParseError(where + " is not a RIFF/WAVE file");
  }
  std::size_t pos = 12;
  bool have_fmt = false;
  AudioBuffer audio;
  while (pos + 8 <= bytes.size()) {
    const std::string id = bytes.substr(pos, 4);
    const std::uint32_t size = GetU32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) throw ParseError(where + " chunk '" + id + "' truncated");
    if (id == "fmt ") {
      if (size < 16) throw ParseError(where + " fmt chunk too small");
      const std::uint16_t format = GetU16(bytes, body);
      const std::uint16_t channels = GetU16(bytes, body + 2);
      const std::uint32_t rate = GetU32(bytes, body + 4);
      const std::uint16_t bits = GetU16(bytes, body + 14);
      if (format != 1 || bits != 16) {
        throw ArgumentError(where + ": only 16-bit PCM is supported");
      }
      if (channels != 1) throw ArgumentError(where + ": only mono is supported");
      audio.sample_rate = static_cast<int>(rate);
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw ParseError(where + " data chunk precedes fmt");
      const std::size_t count = size / 2;
      audio.samples.resize(count);
      for (std::size_t i = 0; i < count; ++i) {
        const auto raw = static_cast<std::int16_t>(GetU16(bytes, body + 2 * i));
        audio.samples[i] = raw / 32768.0;
      }
      return audio;
    }
    pos = body + size + (size & 1);
  }
  throw ParseError(where + " has no data chunk");
}

void WriteWav(const AudioBuffer& audio, const std::filesystem::path& path) {
  const auto data_bytes = static_cast<std::uint32_t>(audio.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  PutU32(&out, 36 + data_bytes);
  out += "WAVEfmt ";
  PutU32(&out, 16);
  PutU16(&out, 1);
  PutU16(&out, 1);
  PutU32(&out, static_cast<std::uint32_t>(audio.sample_rate));
  PutU32(&out, static_cast<std::uint32_t>(audio.sample_rate * 2));
  PutU16(&out, 2);
  PutU16(&out, 16);
  out += "data";
  PutU32(&out, data_bytes);
  for (double s : audio.samples) {
    const double scaled = std::round(std::clamp(s, -1.0, 1.0) * 32768.0);
    const auto v = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    PutU16(&out, static_cast<std::uint16_t>(v));
  }
  io::WriteFileAtomic(path, out);
}

void WriteFeatureFile(std::span<const FeatureFrame> frames,
                      const std::filesystem::path& path) {
  std::ostringstream out;
  out << "endgate-features 1\nframes " << frames.size() << "\ndim "
      << kFrameDim << "\nhop_ms " << kFrameShiftMs << "\npayload\n";
  for (const FeatureFrame& f : frames) {
    if (f.values.size() != kFrameDim) {
      throw DimensionError("feature frame must have 192 values");
    }
    io::WriteDoublesLE(out, f.values);
  }
  io::WriteFileAtomic(path, out.str());
}

std::vector<FeatureFrame> ReadFeatureFile(const std::filesystem::path& path) {
  std::istringstream in(io::ReadFile(path));
  std::string line;
  auto expect = [&](std::string_view key, int line_no) -> std::uint64_t {
    if (!std::getline(in, line)) {
      throw ParseError("feature file line " + std::to_string(line_no) +
                       ": unexpected end of header");
    }
    auto fields = io::SplitWhitespace(line);
    if (fields.size() != 2 || fields[0] != key) {
      throw ParseError("feature file line " + std::to_string(line_no) +
                       ": expected '" + std::string(key) + " <n>'");
    }
    return io::ParseUint(fields[1]);
  };
  if (!std::getline(in, line) || line != "endgate-features 1") {
    throw ParseError("feature file line 1: bad magic");
  }
  const std::uint64_t n = expect("frames", 2);
  if (expect("dim", 3) != kFrameDim) {
    throw ParseError("feature file line 3: dim must be 192");
  }
  if (expect("hop_ms", 4) != kFrameShiftMs) {
    throw ParseError("feature file line 4: hop_ms must be 30");
  }
  if (!std::getline(in, line) || line != "payload") {
    throw ParseError("feature file line 5: expected 'payload'");
  }
  std::vector<double> flat = io::ReadDoublesLE(in, n * kFrameDim);
  std::vector<FeatureFrame> frames(n);
  for (std::size_t k = 0; k < n; ++k) {
    frames[k].frame_index = k;
    frames[k].values.assign(flat.begin() + k * kFrameDim,
                            flat.begin() + (k + 1) * kFrameDim);
  }
  return frames;
}

}  // namespace endgate
