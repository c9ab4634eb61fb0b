// stc/audio/mel.hpp

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

#ifndef STC_AUDIO_MEL_HPP_
#define STC_AUDIO_MEL_HPP_

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "stc/audio/clip.hpp"
#include "stc/audio/stft.hpp"
#include "stc/base/error.hpp"

namespace stc {

inline constexpr int kNumMels = 80;
inline constexpr float kPowerFloor = 1e-5f;
inline const float kLogFloor = std::log(kPowerFloor);

/// Log-mel energies, one row per frame, kNumMels columns.
struct MelSpectrogram {
  RowMatrixF frames;
  double frame_hop_s = double(kHopLength) / kSampleRate;

  int NumFrames() const { return int(frames.rows()); }
};

inline double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// Triangular filters (peak 1) on the HTK mel scale spanning [fmin, fmax].
/// Rows are bands, columns are FFT bins.
inline RowMatrixF MelFilterbank(int n_mels = kNumMels, int n_fft = kFftSize,
                                int sample_rate = kSampleRate, double fmin = 0.0,
                                double fmax = kSampleRate / 2.0) {
  const int bins = n_fft / 2 + 1;
  std::vector<double> edges(n_mels + 2);
  const double mlo = HzToMel(fmin), mhi = HzToMel(fmax);
  for (int i = 0; i < n_mels + 2; ++i)
    edges[i] = MelToHz(mlo + (mhi - mlo) * i / (n_mels + 1));
  RowMatrixF fb = RowMatrixF::Zero(n_mels, bins);
  for (int m = 0; m < n_mels; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (int k = 0; k < bins; ++k) {
      const double f = double(k) * sample_rate / n_fft;
      const double up = (f - lo) / (mid - lo);
      const double down = (hi - f) / (hi - mid);
      fb(m, k) = float(std::max(0.0, std::min(up, down)));
    }
  }
  return fb;
}

inline const RowMatrixF &DefaultFilterbank() {
  static const RowMatrixF fb = MelFilterbank();
  return fb;
}

inline RowMatrixF PowerToLogMel(const RowMatrixF &power) {
  RowMatrixF mel = power * DefaultFilterbank().transpose();
  return mel.unaryExpr([](float p) { return std::log(std::max(p, kPowerFloor)); });
}

/// Log-mel spectrogram: Hann 1024 / hop 256 centered STFT, power, 80 HTK bands
/// from 0 to 8 kHz, log(max(power, 1e-5)). Yields floor(len/256)+1 frames.
inline MelSpectrogram ComputeMel(const AudioClip &clip) {
  if (clip.sample_rate_hz != kSampleRate)
    Fail(ErrorKind::kConfig, "compute_mel expects 16 kHz audio");
  MelSpectrogram mel;
  mel.frames = PowerToLogMel(PowerSpectrogram(clip.samples));
  return mel;
}

// MEL1 cache: "MEL1", u32 T, u32 n_mels, T*n_mels float32, all little-endian.

inline std::string EncodeMel(const MelSpectrogram &mel) {
  std::string out = "MEL1";
  auto put32 = [&out](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
  };
  put32(std::uint32_t(mel.frames.rows()));
  put32(std::uint32_t(mel.frames.cols()));
  for (Eigen::Index t = 0; t < mel.frames.rows(); ++t)
    for (Eigen::Index m = 0; m < mel.frames.cols(); ++m) {
      std::uint32_t u;
      const float v = mel.frames(t, m);
      std::memcpy(&u, &v, 4);
      put32(u);
    }
  return out;
}

inline MelSpectrogram DecodeMel(const std::string &bytes, const std::string &label) {
  if (bytes.size() < 12 || bytes.compare(0, 4, "MEL1") != 0)
    Fail(ErrorKind::kDecode, label + ": missing MEL1 magic");
  const auto *p = reinterpret_cast<const unsigned char *>(bytes.data());
  auto get32 = [p](std::size_t off) {
    return std::uint32_t(p[off]) | (std::uint32_t(p[off + 1]) << 8) |
           (std::uint32_t(p[off + 2]) << 16) | (std::uint32_t(p[off + 3]) << 24);
  };
  const std::uint32_t rows = get32(4), cols = get32(8);
  if (bytes.size() != 12 + std::size_t(rows) * cols * 4)
    Fail(ErrorKind::kDecode, label + ": size does not match header");
  MelSpectrogram mel;
  mel.frames.resize(rows, cols);
  std::size_t off = 12;
  for (std::uint32_t t = 0; t < rows; ++t)
    for (std::uint32_t m = 0; m < cols; ++m, off += 4) {
      const std::uint32_t u = get32(off);
      float v;
      std::memcpy(&v, &u, 4);
      mel.frames(t, m) = v;
    }
  return mel;
}

inline void WriteMel(const std::string &path, const MelSpectrogram &mel) {
  std::ofstream os(path, std::ios::binary);
  if (!os) Fail(ErrorKind::kIo, "cannot write " + path);
  const std::string bytes = EncodeMel(mel);
  os.write(bytes.data(), std::streamsize(bytes.size()));
}

inline MelSpectrogram ReadMel(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) Fail(ErrorKind::kDecode, "cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return DecodeMel(bytes, path);
}

}  // namespace stc

#endif  // STC_AUDIO_MEL_HPP_
