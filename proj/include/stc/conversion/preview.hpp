// stc/conversion/preview.hpp

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
//
// Preview-quality mel inversion: non-negative least-squares estimate of the
// power spectrum followed by Griffin-Lim phase reconstruction. Not a vocoder.

#ifndef STC_CONVERSION_PREVIEW_HPP_
#define STC_CONVERSION_PREVIEW_HPP_

#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "stc/audio/clip.hpp"
#include "stc/audio/mel.hpp"
#include "stc/audio/stft.hpp"

namespace stc {

/// Lawson-Hanson active-set solve of min ||A x - y|| subject to x >= 0.
inline Eigen::VectorXd SolveNnls(const Eigen::MatrixXd &A, const Eigen::VectorXd &y) {
  const Eigen::Index n = A.cols();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  std::vector<bool> active(std::size_t(n), false);
  Eigen::VectorXd w = A.transpose() * y;
  const double tol = 1e-10 * std::max(1e-300, w.cwiseAbs().maxCoeff());
  auto solve_active = [&](Eigen::VectorXd &s) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < n; ++j)
      if (active[std::size_t(j)]) idx.push_back(j);
    Eigen::MatrixXd sub(A.rows(), Eigen::Index(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) sub.col(Eigen::Index(k)) = A.col(idx[k]);
    const Eigen::VectorXd z = sub.colPivHouseholderQr().solve(y);
    s.setZero(n);
    for (std::size_t k = 0; k < idx.size(); ++k) s(idx[k]) = z(Eigen::Index(k));
  };
  for (int outer = 0; outer < 3 * int(n); ++outer) {
    Eigen::Index j = -1;
    double best = tol;
    for (Eigen::Index k = 0; k < n; ++k)
      if (!active[std::size_t(k)] && w(k) > best) best = w(k), j = k;
    if (j < 0) break;
    active[std::size_t(j)] = true;
    Eigen::VectorXd s;
    for (int inner = 0; inner < 3 * int(n); ++inner) {
      solve_active(s);
      double alpha = 1.0;
      bool feasible = true;
      for (Eigen::Index k = 0; k < n; ++k)
        if (active[std::size_t(k)] && s(k) <= 0.0) {
          feasible = false;
          alpha = std::min(alpha, x(k) / std::max(1e-300, x(k) - s(k)));
        }
      if (feasible) break;
      x += alpha * (s - x);
      for (Eigen::Index k = 0; k < n; ++k)
        if (active[std::size_t(k)] && x(k) <= tol * 1e-3) {
          active[std::size_t(k)] = false;
          x(k) = 0.0;
        }
    }
    x = s.cwiseMax(0.0);
    w = A.transpose() * (y - A * x);
  }
  return x;
}

/// Power spectrogram (T x 513) whose mel projection best matches `mel`,
/// frame by frame, under a non-negativity constraint.
inline RowMatrixF MelToPower(const MelSpectrogram &mel) {
  if (!mel.frames.allFinite()) Fail(ErrorKind::kNumeric, "mel contains non-finite values");
  const Eigen::MatrixXd fb = DefaultFilterbank().cast<double>();
  RowMatrixF power = RowMatrixF::Zero(mel.frames.rows(), fb.cols());
  for (Eigen::Index t = 0; t < mel.frames.rows(); ++t) {
    // Energy at the log floor was clamped there; treat it as none.
    Eigen::VectorXd y(fb.rows());
    for (Eigen::Index m = 0; m < fb.rows(); ++m)
      y(m) = std::max(0.0, std::exp(double(mel.frames(t, m))) - double(kPowerFloor));
    if (y.maxCoeff() <= 0.0) continue;
    power.row(t) = SolveNnls(fb, y).cast<float>().transpose();
  }
  return power;
}

/// Audio of (T - 1) * hop samples at 16 kHz.
inline AudioClip MelToAudioPreview(const MelSpectrogram &mel, int iterations = 60,
                                   std::uint64_t seed = 0) {
  const RowMatrixF magnitude = MelToPower(mel).cwiseSqrt();
  const Eigen::Index T = magnitude.rows(), F = magnitude.cols();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, float(2 * M_PI));
  ComplexMatrix spec(T, F);
  for (Eigen::Index i = 0; i < spec.size(); ++i) spec.data()[i] = std::polar(magnitude.data()[i], u(rng));
  std::vector<float> audio = Istft(spec);
  for (int it = 0; it < iterations; ++it) {
    const ComplexMatrix est = Stft(audio);
    for (Eigen::Index t = 0; t < T; ++t)
      for (Eigen::Index f = 0; f < F; ++f) {
        const std::complex<float> z = t < est.rows() ? est(t, f) : std::complex<float>(0.0f);
        const float a = std::abs(z);
        spec(t, f) = a > 0.0f ? magnitude(t, f) * (z / a) : std::complex<float>(magnitude(t, f), 0.0f);
      }
    audio = Istft(spec);
  }
  return {std::move(audio), kSampleRate};
}

}  // namespace stc

#endif  // STC_CONVERSION_PREVIEW_HPP_
