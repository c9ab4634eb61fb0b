// stc/audio/clip.hpp

// Copyright 2026  The STC Workbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef STC_AUDIO_CLIP_HPP_
#define STC_AUDIO_CLIP_HPP_

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "stc/audio/resample.hpp"
#include "stc/audio/wav.hpp"
#include "stc/base/error.hpp"

namespace stc {

inline constexpr int kSampleRate = 16000;

/// Mono audio at a known rate. After ingestion the rate is always 16 kHz.
struct AudioClip {
  std::vector<float> samples;
  int sample_rate_hz = kSampleRate;

  double DurationSeconds() const { return double(samples.size()) / sample_rate_hz; }
};

/// Down-mixes, resamples to 16 kHz and peak-normalizes (only when peak > 1).
inline AudioClip IngestWav(const WavData &wav, const std::string &label) {
  if (wav.NumFrames() == 0) Fail(ErrorKind::kEmptyInput, label + ": zero-length audio");
  std::vector<float> mono(wav.NumFrames(), 0.0f);
  const int ch = wav.num_channels;
  for (std::size_t i = 0; i < mono.size(); ++i) {
    double acc = 0.0;
    for (int c = 0; c < ch; ++c) acc += wav.interleaved[i * ch + c];
    mono[i] = float(acc / ch);
  }
  AudioClip clip;
  clip.samples = Resample(mono, wav.sample_rate, kSampleRate);
  if (clip.samples.empty()) Fail(ErrorKind::kEmptyInput, label + ": empty after resampling");
  float peak = 0.0f;
  for (float s : clip.samples) peak = std::max(peak, std::abs(s));
  if (peak > 1.0f)
    for (float &s : clip.samples) s /= peak;
  return clip;
}

inline AudioClip LoadAndResample(const std::string &path) {
  return IngestWav(ReadWav(path), path);
}

inline void WriteClip(const std::string &path, const AudioClip &clip) {
  WriteWav16(path, clip.samples, clip.sample_rate_hz);
}

}  // namespace stc

#endif  // STC_AUDIO_CLIP_HPP_
