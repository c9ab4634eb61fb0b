// stc/audio/resample.hpp

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

#ifndef STC_AUDIO_RESAMPLE_HPP_
#define STC_AUDIO_RESAMPLE_HPP_

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "stc/base/error.hpp"

namespace stc {

/// Band-limited rational resampler (Kaiser-windowed sinc, polyphase table).
/// Output length is round(len * out_rate / in_rate).
class SincResampler {
 public:
  SincResampler(int in_rate, int out_rate, int zero_crossings = 32,
                double kaiser_beta = 8.6)
      : in_rate_(in_rate), out_rate_(out_rate) {
    if (in_rate <= 0 || out_rate <= 0)
      Fail(ErrorKind::kConfig, "sample rates must be positive");
    const int g = std::gcd(in_rate, out_rate);
    up_ = out_rate / g;    // number of distinct output phases
    down_ = in_rate / g;
    // Lowpass at the narrower Nyquist, with a small guard band.
    cutoff_ = std::min(1.0, double(out_rate) / in_rate) * 0.97;
    half_width_ = int(std::ceil(zero_crossings / cutoff_));
    const int taps = 2 * half_width_;
    table_.assign(std::size_t(up_) * taps, 0.0);
    const double i0_beta = std::cyl_bessel_i(0.0, kaiser_beta);
    for (int phase = 0; phase < up_; ++phase) {
      const double frac = double(phase) * down_ / up_ - std::floor(double(phase) * down_ / up_);
      for (int k = 0; k < taps; ++k) {
        // Input sample index offset relative to floor(t).
        const double tau = frac - double(k - half_width_ + 1);
        const double r = tau / half_width_;
        double w = 0.0;
        if (std::abs(r) < 1.0)
          w = std::cyl_bessel_i(0.0, kaiser_beta * std::sqrt(1.0 - r * r)) / i0_beta;
        const double x = M_PI * cutoff_ * tau;
        const double sinc = std::abs(x) < 1e-12 ? 1.0 : std::sin(x) / x;
        table_[std::size_t(phase) * taps + k] = cutoff_ * sinc * w;
      }
    }
  }

  std::size_t OutputLength(std::size_t input_length) const {
    return std::size_t(std::llround(double(input_length) * out_rate_ / in_rate_));
  }

  std::vector<float> Process(std::span<const float> input) const {
    const std::size_t n_out = OutputLength(input.size());
    std::vector<float> out(n_out, 0.0f);
    if (in_rate_ == out_rate_) {
      out.assign(input.begin(), input.end());
      return out;
    }
    const int taps = 2 * half_width_;
    const auto n_in = std::int64_t(input.size());
    for (std::size_t n = 0; n < n_out; ++n) {
      const std::int64_t num = std::int64_t(n) * down_;
      const std::int64_t base = num / up_;
      const int phase = int(n % std::size_t(up_));
      const double *h = &table_[std::size_t(phase) * taps];
      double acc = 0.0;
      for (int k = 0; k < taps; ++k) {
        const std::int64_t idx = base + k - half_width_ + 1;
        if (idx < 0 || idx >= n_in) continue;
        acc += h[k] * input[std::size_t(idx)];
      }
      out[n] = float(acc);
    }
    return out;
  }

 private:
  int in_rate_, out_rate_;
  int up_ = 1, down_ = 1;
  double cutoff_ = 1.0;
  int half_width_ = 1;
  std::vector<double> table_;
};

inline std::vector<float> Resample(std::span<const float> input, int in_rate, int out_rate) {
  if (in_rate == out_rate) return {input.begin(), input.end()};
  return SincResampler(in_rate, out_rate).Process(input);
}

}  // namespace stc

#endif  // STC_AUDIO_RESAMPLE_HPP_
