// stc/audio/stft.hpp

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

#ifndef STC_AUDIO_STFT_HPP_
#define STC_AUDIO_STFT_HPP_

#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

namespace stc {

inline constexpr int kFftSize = 1024;
inline constexpr int kHopLength = 256;
inline constexpr int kNumBins = kFftSize / 2 + 1;

using RowMatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ComplexMatrix =
    Eigen::Matrix<std::complex<float>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Periodic Hann window.
inline std::vector<float> HannWindow(int n) {
  std::vector<float> w(n);
  for (int i = 0; i < n; ++i) w[i] = float(0.5 - 0.5 * std::cos(2.0 * M_PI * i / n));
  return w;
}

inline int NumFrames(std::size_t num_samples, int hop = kHopLength) {
  return int(num_samples / std::size_t(hop)) + 1;
}

/// Centered STFT with zero padding of n_fft/2 on each side.
/// Returns floor(len / hop) + 1 frames of n_fft/2 + 1 complex bins.
inline ComplexMatrix Stft(std::span<const float> samples, int n_fft = kFftSize,
                          int hop = kHopLength) {
  const int frames = NumFrames(samples.size(), hop);
  const int bins = n_fft / 2 + 1;
  const auto window = HannWindow(n_fft);
  const long pad = n_fft / 2;
  const long len = long(samples.size());
  ComplexMatrix out(frames, bins);
  Eigen::FFT<float> fft;
  std::vector<float> frame(n_fft);
  std::vector<std::complex<float>> spec;
  for (int t = 0; t < frames; ++t) {
    const long start = long(t) * hop - pad;
    for (int i = 0; i < n_fft; ++i) {
      const long idx = start + i;
      frame[i] = (idx >= 0 && idx < len) ? samples[std::size_t(idx)] * window[i] : 0.0f;
    }
    fft.fwd(spec, frame);
    for (int k = 0; k < bins; ++k) out(t, k) = spec[k];
  }
  return out;
}

inline RowMatrixF PowerSpectrogram(std::span<const float> samples) {
  return Stft(samples).cwiseAbs2();
}

/// Weighted overlap-add inverse of Stft(). Produces (frames - 1) * hop samples,
/// dropping the centered padding.
inline std::vector<float> Istft(const ComplexMatrix &spec, int n_fft = kFftSize,
                                int hop = kHopLength) {
  const int frames = int(spec.rows());
  const long pad = n_fft / 2;
  const long out_len = long(frames - 1) * hop;
  const long full = out_len + 2 * pad + n_fft;
  const auto window = HannWindow(n_fft);
  std::vector<double> acc(std::size_t(full), 0.0), norm(std::size_t(full), 0.0);
  Eigen::FFT<float> fft;
  std::vector<std::complex<float>> half(n_fft / 2 + 1), full_spec(n_fft);
  std::vector<float> frame;
  for (int t = 0; t < frames; ++t) {
    for (int k = 0; k <= n_fft / 2; ++k) full_spec[k] = spec(t, k);
    for (int k = n_fft / 2 + 1; k < n_fft; ++k) full_spec[k] = std::conj(full_spec[n_fft - k]);
    fft.inv(frame, full_spec);
    const long start = long(t) * hop;
    for (int i = 0; i < n_fft; ++i) {
      acc[std::size_t(start + i)] += double(frame[i]) * window[i];
      norm[std::size_t(start + i)] += double(window[i]) * window[i];
    }
  }
  std::vector<float> out(std::size_t(std::max(0L, out_len)));
  for (long i = 0; i < out_len; ++i) {
    const double w = norm[std::size_t(i + pad)];
    out[std::size_t(i)] = float(w > 1e-8 ? acc[std::size_t(i + pad)] / w : 0.0);
  }
  return out;
}

}  // namespace stc

#endif  // STC_AUDIO_STFT_HPP_
