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

#ifndef ENDGATE_FEATURES_H_
#define ENDGATE_FEATURES_H_

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "endgate/nnkit.h"

namespace endgate {

inline constexpr int kExpectedSampleRate = 16000;
inline constexpr std::size_t kMelBins = 64;
inline constexpr std::size_t kStackFactor = 3;
inline constexpr std::size_t kFrameDim = kMelBins * kStackFactor;  // 192
inline constexpr int kFrameShiftMs = 30;

struct AudioBuffer {
  int sample_rate = kExpectedSampleRate;
  std::vector<double> samples;  // mono, in [-1, 1]

  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// Front-end knobs. The defaults are the conventional choices for 64-dim
// log-mel at 25ms/10ms; all of them are exposed through the config file.
struct MelConfig {
  int sample_rate = kExpectedSampleRate;
  std::size_t window_samples = 400;  // 25ms
  std::size_t hop_samples = 160;     // 10ms
  std::size_t fft_size = 512;
  std::size_t num_mels = kMelBins;
  double low_hz = 0.0;
  double high_hz = 8000.0;
  double energy_floor = 1e-10;

  void Validate() const;
};

// One 30ms decision frame: three consecutive 10ms log-mel vectors.
struct FeatureFrame {
  nn::Vector values;
  std::size_t frame_index = 0;
};

// HTK mel scale.
double HzToMel(double hz);
double MelToHz(double mel);

// Triangular filters over the fft_size/2 + 1 magnitude bins, [num_mels, bins].
nn::Tensor MelFilterbank(const MelConfig& config);

// floor((N - window) / hop) + 1 frames, each ln(filterbank . |FFT| + floor)
// over a Hann window. Throws ArgumentError for short audio or a sample rate
// other than config.sample_rate.
std::vector<nn::Vector> LogMel(const AudioBuffer& audio,
                               const MelConfig& config = {});

// Concatenates groups of three mel frames; 1-2 trailing frames are dropped.
std::vector<FeatureFrame> StackDownsample(std::span<const nn::Vector> mel);

// Appends duration_ms * rate / 1000 exact zeros.
AudioBuffer PadSilence(const AudioBuffer& audio, int duration_ms);

// 16-bit PCM mono RIFF/WAVE only.
AudioBuffer ReadWav(const std::filesystem::path& path);
void WriteWav(const AudioBuffer& audio, const std::filesystem::path& path);

// Feature file:
//   endgate-features 1
//   frames <n>
//   dim 192
//   hop_ms 30
//   payload
//   <n * 192 little-endian float64>
void WriteFeatureFile(std::span<const FeatureFrame> frames,
                      const std::filesystem::path& path);
std::vector<FeatureFrame> ReadFeatureFile(const std::filesystem::path& path);

}  // namespace endgate

#endif  // ENDGATE_FEATURES_H_
