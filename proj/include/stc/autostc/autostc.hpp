// stc/autostc/autostc.hpp

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

#ifndef STC_AUTOSTC_AUTOSTC_HPP_
#define STC_AUTOSTC_AUTOSTC_HPP_

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "stc/autostc/autostc_model.hpp"
#include "stc/ste/ste_train.hpp"

namespace stc {

using AutoStc = AutoStcModel<float>;

/// Bottleneck output for one clip: (T / time_downsample) x code_dim.
struct ContentCode {
  RowMatrixF codes;
};

/// The network sees log-mels rescaled so that silence is 0 and loud voiced
/// frames are near 1.
inline constexpr float kModelMelScale = 24.0f;

inline RowMatrixF ToModelDomain(const RowMatrixF &log_mel) {
  return ((log_mel.array() - kLogFloor) / kModelMelScale).matrix();
}

inline RowMatrixF FromModelDomain(const RowMatrixF &x) {
  return (x.array() * kModelMelScale + kLogFloor).matrix();
}

/// Decoder output before and after the postnet residual, T x n_mels each, in
/// the model domain.
struct SpectrogramPair {
  RowMatrixF decoder_out;
  RowMatrixF postnet_out;
};

inline nn::Mat<float> EmbeddingRow(const TechniqueEmbedding &e) {
  return Eigen::Map<const nn::Mat<float>>(e.values.data(), 1, Eigen::Index(e.values.size()));
}

/// Inference-mode content encoding of a log-mel. T must be a multiple of
/// time_downsample.
inline ContentCode EncodeContent(AutoStc &model, const MelSpectrogram &mel,
                                 const TechniqueEmbedding &emb) {
  typename AutoStc::EncoderCache cache;
  return {model.Encode(ToModelDomain(mel.frames), 1, EmbeddingRow(emb), false, cache)};
}

inline SpectrogramPair Decode(AutoStc &model, const ContentCode &code,
                              const TechniqueEmbedding &emb) {
  typename AutoStc::DecoderCache cache;
  auto [dec, post] = model.Decode(code.codes, 1, EmbeddingRow(emb), false, cache);
  return {std::move(dec), std::move(post)};
}

/// Loss from already computed outputs; `x` is a log-mel, `pair` is in the
/// model domain. `code_xhat` is ignored (and may be empty) when the latent
/// term is disabled.
inline LossBreakdown ComputeLoss(const MelSpectrogram &x, const SpectrogramPair &pair,
                                 const ContentCode &code_x, const ContentCode &code_xhat,
                                 const AutoStcConfig &config) {
  auto check = [](const RowMatrixF &m, const char *what) {
    if (!m.allFinite()) Fail(ErrorKind::kNumeric, std::string("non-finite values in ") + what);
  };
  check(x.frames, "input");
  check(pair.decoder_out, "decoder_out");
  check(pair.postnet_out, "postnet_out");
  if (pair.decoder_out.rows() != x.frames.rows() || pair.decoder_out.cols() != x.frames.cols() ||
      pair.postnet_out.rows() != x.frames.rows() || pair.postnet_out.cols() != x.frames.cols())
    Fail(ErrorKind::kShape, "reconstruction shape differs from input");
  const bool l1 = config.recon_norm == ReconNorm::kL1;
  const nn::Mat<double> target = ToModelDomain(x.frames).cast<double>();
  const double l_dec =
      nn::ReconstructionLoss<double>(pair.decoder_out.cast<double>(), target, l1, nullptr);
  const double l_post =
      nn::ReconstructionLoss<double>(pair.postnet_out.cast<double>(), target, l1, nullptr);
  double l_lat = 0.0;
  if (config.use_latent_loss) {
    check(code_x.codes, "code_x");
    check(code_xhat.codes, "code_xhat");
    if (code_x.codes.rows() != code_xhat.codes.rows() || code_x.codes.cols() != code_xhat.codes.cols())
      Fail(ErrorKind::kShape, "content code shapes differ");
    l_lat = nn::ReconstructionLoss<double>(code_xhat.codes.cast<double>(),
                                           code_x.codes.cast<double>(), true, nullptr);
  }
  return ComposeLoss(l_dec, l_post, l_lat, config);
}

/// Pads (with the log floor) or crops a mel to exactly `frames` rows starting
/// at `offset`.
inline RowMatrixF CropOrPad(const RowMatrixF &mel, int offset, int frames) {
  RowMatrixF out = RowMatrixF::Constant(frames, mel.cols(), kLogFloor);
  const int n = std::max(0, std::min(frames, int(mel.rows()) - offset));
  if (n > 0) out.topRows(n) = mel.middleRows(offset, n);
  return out;
}

/// Pads the time axis up to the next multiple of `multiple` with the log floor.
inline MelSpectrogram PadToMultiple(const MelSpectrogram &mel, int multiple) {
  const int t = mel.NumFrames();
  const int padded = (t + multiple - 1) / multiple * multiple;
  MelSpectrogram out = mel;
  out.frames = CropOrPad(mel.frames, 0, std::max(padded, multiple));
  return out;
}

struct ReconstructionExample {
  MelSpectrogram mel;
  TechniqueEmbedding embedding;  // frozen STE output, never updated
};

/// Owns the optimizer state and crop RNG for one AutoSTC training run.
class AutoStcTrainer {
 public:
  explicit AutoStcTrainer(AutoStc &model)
      : model_(model),
        adam_(model.Params(), model.config().learning_rate),
        rng_(model.config().seed ^ 0xa070ULL) {}

  /// One gradient update on a batch; returns the pre-update loss. Each
  /// example is randomly cropped (or floor-padded) to crop_frames.
  LossBreakdown Step(const std::vector<const ReconstructionExample *> &batch) {
    const auto &cfg = model_.config();
    const int frames = cfg.crop_frames;
    const int B = int(batch.size());
    nn::Mat<float> mels(Eigen::Index(B) * frames, cfg.n_mels);
    nn::Mat<float> emb(B, cfg.embedding_dim);
    for (int b = 0; b < B; ++b) {
      const auto &ex = *batch[b];
      const int slack = std::max(0, ex.mel.NumFrames() - frames);
      const int offset = slack > 0 ? int(rng_() % std::uint64_t(slack + 1)) : 0;
      mels.middleRows(Eigen::Index(b) * frames, frames) =
          ToModelDomain(CropOrPad(ex.mel.frames, offset, frames));
      if (int(ex.embedding.values.size()) != cfg.embedding_dim)
        Fail(ErrorKind::kConfig, "embedding length does not match embedding_dim");
      emb.row(b) = EmbeddingRow(ex.embedding);
    }
    if (cosine_steps_ > 0) {
      const double progress = std::min(1.0, double(step_) / double(cosine_steps_));
      const double scale = cosine_floor_ + (1.0 - cosine_floor_) * 0.5 * (1.0 + std::cos(M_PI * progress));
      adam_.set_lr(cfg.learning_rate * scale);
    }
    adam_.ZeroGrad();
    const LossBreakdown lb = model_.LossAndGradient(mels, B, emb, true);
    if (!std::isfinite(lb.total))
      Fail(ErrorKind::kDivergence, "AutoSTC loss diverged at step " + std::to_string(step_));
    adam_.Step();
    ++step_;
    return lb;
  }

  /// Takes one step on the next batch_size examples of a reshuffled pass
  /// over `data`.
  LossBreakdown StepRandom(const std::vector<ReconstructionExample> &data) {
    if (data.empty()) Fail(ErrorKind::kEmptyInput, "no training examples");
    std::vector<const ReconstructionExample *> batch;
    for (int b = 0; b < model_.config().batch_size; ++b) {
      if (cursor_ >= order_.size() || order_.size() != data.size()) {
        order_.resize(data.size());
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        std::shuffle(order_.begin(), order_.end(), rng_);
        cursor_ = 0;
      }
      batch.push_back(&data[order_[cursor_++]]);
    }
    return Step(batch);
  }

  /// Cosine decay from learning_rate to floor * learning_rate over
  /// `total_steps`, constant afterwards. total_steps = 0 disables it.
  void SetCosineSchedule(long total_steps, double floor = 0.05) {
    cosine_steps_ = total_steps;
    cosine_floor_ = floor;
  }

  long step() const { return step_; }
  nn::Adam<float> &optimizer() { return adam_; }

 private:
  AutoStc &model_;
  nn::Adam<float> adam_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  long step_ = 0;
  long cosine_steps_ = 0;
  double cosine_floor_ = 0.05;
};

/// Mean inference-mode loss over whole clips (each padded to a multiple of
/// time_downsample).
inline LossBreakdown EvaluateReconstruction(AutoStc &model,
                                            const std::vector<ReconstructionExample> &data) {
  if (data.empty()) Fail(ErrorKind::kEmptyInput, "no evaluation examples");
  LossBreakdown sum;
  for (const auto &ex : data) {
    const auto mel = PadToMultiple(ex.mel, model.config().time_downsample);
    const auto lb = model.Loss(ToModelDomain(mel.frames), 1, EmbeddingRow(ex.embedding), false);
    sum.l_decoder += lb.l_decoder;
    sum.l_postnet += lb.l_postnet;
    sum.l_latent += lb.l_latent;
    sum.total += lb.total;
  }
  const double n = double(data.size());
  return {sum.l_decoder / n, sum.l_postnet / n, sum.l_latent / n, sum.total / n};
}

/// Featurizes clips and attaches their frozen STE embeddings.
inline std::vector<ReconstructionExample> MakeReconstructionSet(
    TechniqueEncoder &ste, const std::vector<LabelledClip> &clips) {
  std::vector<ReconstructionExample> out;
  for (const auto &c : clips) out.push_back({c.mel, EmbedClip(ste, c.mel)});
  return out;
}

}  // namespace stc

#endif  // STC_AUTOSTC_AUTOSTC_HPP_
