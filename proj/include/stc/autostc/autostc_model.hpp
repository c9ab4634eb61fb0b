// stc/autostc/autostc_model.hpp

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

#ifndef STC_AUTOSTC_AUTOSTC_MODEL_HPP_
#define STC_AUTOSTC_AUTOSTC_MODEL_HPP_

#include <string>
#include <vector>

#include "json.hpp"

#include "stc/audio/mel.hpp"
#include "stc/nn/checkpoint.hpp"
#include "stc/nn/layers.hpp"
#include "stc/nn/optim.hpp"
#include "stc/nn/recurrent.hpp"

namespace stc {

enum class ReconNorm { kL1, kL2 };

struct AutoStcConfig {
  // Bottleneck: keep every time_downsample-th frame, code_dim features each.
  int time_downsample = 16;
  int code_dim = 32;
  // Loss weights: total = decoder + mu * postnet + lambda * latent.
  double mu = 1.0;
  double lambda = 1.0;
  bool use_latent_loss = false;
  ReconNorm recon_norm = ReconNorm::kL1;
  int embedding_dim = 64;
  double learning_rate = 1e-4;
  std::uint64_t seed = 7;
  // Layer widths.
  int n_mels = kNumMels;
  int kernel = 5;
  int encoder_channels = 512;
  int decoder_lstm1 = 512;
  int decoder_channels = 512;
  int decoder_lstm2 = 1024;
  int postnet_channels = 512;
  // Training.
  int batch_size = 2;
  int crop_frames = 128;

  void Validate() const {
    if (time_downsample < 1) Fail(ErrorKind::kConfig, "time_downsample must be >= 1");
    if (code_dim < 2 || code_dim % 2) Fail(ErrorKind::kConfig, "code_dim must be even and >= 2");
    if (mu < 0 || lambda < 0) Fail(ErrorKind::kConfig, "loss weights must be >= 0");
    if (embedding_dim < 1) Fail(ErrorKind::kConfig, "embedding_dim must be positive");
    if (kernel % 2 != 1) Fail(ErrorKind::kConfig, "kernel must be odd");
    for (int w : {encoder_channels, decoder_lstm1, decoder_channels, decoder_lstm2,
                  postnet_channels, batch_size, n_mels})
      if (w <= 0) Fail(ErrorKind::kConfig, "layer widths and batch size must be positive");
    if (crop_frames <= 0 || crop_frames % time_downsample)
      Fail(ErrorKind::kConfig, "crop_frames must be a positive multiple of time_downsample");
  }
};

inline void to_json(nlohmann::json &j, const AutoStcConfig &c) {
  j = {{"time_downsample", c.time_downsample},
       {"code_dim", c.code_dim},
       {"mu", c.mu},
       {"lambda", c.lambda},
       {"use_latent_loss", c.use_latent_loss},
       {"recon_norm", c.recon_norm == ReconNorm::kL1 ? "L1" : "L2"},
       {"embedding_dim", c.embedding_dim},
       {"learning_rate", c.learning_rate},
       {"seed", c.seed},
       {"n_mels", c.n_mels},
       {"kernel", c.kernel},
       {"encoder_channels", c.encoder_channels},
       {"decoder_lstm1", c.decoder_lstm1},
       {"decoder_channels", c.decoder_channels},
       {"decoder_lstm2", c.decoder_lstm2},
       {"postnet_channels", c.postnet_channels},
       {"batch_size", c.batch_size},
       {"crop_frames", c.crop_frames}};
}
inline void from_json(const nlohmann::json &j, AutoStcConfig &c) {
  j.at("time_downsample").get_to(c.time_downsample);
  j.at("code_dim").get_to(c.code_dim);
  j.at("mu").get_to(c.mu);
  j.at("lambda").get_to(c.lambda);
  j.at("use_latent_loss").get_to(c.use_latent_loss);
  c.recon_norm = j.at("recon_norm").get<std::string>() == "L2" ? ReconNorm::kL2 : ReconNorm::kL1;
  j.at("embedding_dim").get_to(c.embedding_dim);
  j.at("learning_rate").get_to(c.learning_rate);
  j.at("seed").get_to(c.seed);
  j.at("n_mels").get_to(c.n_mels);
  j.at("kernel").get_to(c.kernel);
  j.at("encoder_channels").get_to(c.encoder_channels);
  j.at("decoder_lstm1").get_to(c.decoder_lstm1);
  j.at("decoder_channels").get_to(c.decoder_channels);
  j.at("decoder_lstm2").get_to(c.decoder_lstm2);
  j.at("postnet_channels").get_to(c.postnet_channels);
  j.at("batch_size").get_to(c.batch_size);
  j.at("crop_frames").get_to(c.crop_frames);
}

struct LossBreakdown {
  double l_decoder = 0.0;
  double l_postnet = 0.0;
  double l_latent = 0.0;
  double total = 0.0;
};

/// total = l_decoder + mu * l_postnet + lambda * l_latent.
inline LossBreakdown ComposeLoss(double l_decoder, double l_postnet, double l_latent,
                                 const AutoStcConfig &config) {
  LossBreakdown lb{l_decoder, l_postnet, config.use_latent_loss ? l_latent : 0.0, 0.0};
  lb.total = lb.l_decoder + config.mu * lb.l_postnet + config.lambda * lb.l_latent;
  return lb;
}

/// Conditioned autoencoder. Sequences are (batch * frames) x features with
/// row b * frames + t; embeddings are batch x embedding_dim.
///
/// Encoder: [mel | emb] -> 3 x (conv5 -> batchnorm -> relu) -> 2 x BLSTM(code/2)
///          -> keep forward state at frames s-1, 2s-1, ... and backward state
///          at frames 0, s, ...
/// Decoder: repeat codes s times, [codes | emb] -> LSTM -> 3 x (conv5 -> bn
///          -> relu) -> 2 x LSTM -> linear to n_mels
/// Postnet: 4 x (conv5 -> bn -> tanh) -> conv5 -> bn, added residually.
template <typename S>
class AutoStcModel {
 public:
  static constexpr int kConvLayers = 3;
  static constexpr int kPostnetLayers = 5;

  struct EncoderCache {
    int batch = 0, frames = 0;
    nn::Mat<S> cols[kConvLayers];
    typename nn::BatchNorm<S>::Cache bn[kConvLayers];
    nn::Mat<S> relu_out[kConvLayers];
    typename nn::Blstm<S>::Cache rnn1, rnn2;
  };

  struct DecoderCache {
    int batch = 0, frames = 0;
    typename nn::Lstm<S>::Cache lstm1, lstm2a, lstm2b;
    nn::Mat<S> cols[kConvLayers];
    typename nn::BatchNorm<S>::Cache bn[kConvLayers];
    nn::Mat<S> relu_out[kConvLayers];
    nn::Mat<S> lstm2b_out;
    nn::Mat<S> post_cols[kPostnetLayers];
    typename nn::BatchNorm<S>::Cache post_bn[kPostnetLayers];
    nn::Mat<S> post_out[kPostnetLayers];
  };

  struct StepCache {
    EncoderCache enc_x, enc_xhat;
    DecoderCache dec;
  };

  struct Forwarded {
    nn::Mat<S> code_x;        // (B * K) x code_dim
    nn::Mat<S> decoder_out;   // (B * T) x n_mels
    nn::Mat<S> postnet_out;
    nn::Mat<S> code_xhat;     // empty unless the latent loss is enabled
  };

  explicit AutoStcModel(const AutoStcConfig &config) : config_(config) {
    config_.Validate();
    nn::Rng rng(config_.seed);
    const auto &c = config_;
    int in = c.n_mels + c.embedding_dim;
    for (int i = 0; i < kConvLayers; ++i) {
      enc_conv_[i] = nn::Conv1d<S>("enc.conv" + std::to_string(i), in, c.encoder_channels, c.kernel, rng);
      enc_bn_[i] = nn::BatchNorm<S>("enc.bn" + std::to_string(i), c.encoder_channels);
      in = c.encoder_channels;
    }
    enc_rnn1_ = nn::Blstm<S>("enc.blstm1", c.encoder_channels, c.code_dim / 2, rng);
    enc_rnn2_ = nn::Blstm<S>("enc.blstm2", c.code_dim, c.code_dim / 2, rng);
    dec_lstm1_ = nn::Lstm<S>("dec.lstm1", c.code_dim + c.embedding_dim, c.decoder_lstm1, false, rng);
    in = c.decoder_lstm1;
    for (int i = 0; i < kConvLayers; ++i) {
      dec_conv_[i] = nn::Conv1d<S>("dec.conv" + std::to_string(i), in, c.decoder_channels, c.kernel, rng);
      dec_bn_[i] = nn::BatchNorm<S>("dec.bn" + std::to_string(i), c.decoder_channels);
      in = c.decoder_channels;
    }
    dec_lstm2a_ = nn::Lstm<S>("dec.lstm2a", c.decoder_channels, c.decoder_lstm2, false, rng);
    dec_lstm2b_ = nn::Lstm<S>("dec.lstm2b", c.decoder_lstm2, c.decoder_lstm2, false, rng);
    dec_proj_ = nn::Linear<S>("dec.proj", c.decoder_lstm2, c.n_mels, rng);
    in = c.n_mels;
    for (int i = 0; i < kPostnetLayers; ++i) {
      const int out = i + 1 < kPostnetLayers ? c.postnet_channels : c.n_mels;
      post_conv_[i] = nn::Conv1d<S>("postnet.conv" + std::to_string(i), in, out, c.kernel, rng);
      post_bn_[i] = nn::BatchNorm<S>("postnet.bn" + std::to_string(i), out);
      in = out;
    }
    // The residual starts at zero: postnet_out == decoder_out at step 0.
    post_bn_[kPostnetLayers - 1].gamma().value.setZero();
  }

  const AutoStcConfig &config() const { return config_; }

  void CheckShapes(const nn::Mat<S> &mels, int batch, const nn::Mat<S> &emb) const {
    if (batch <= 0 || mels.rows() % batch != 0 || mels.cols() != config_.n_mels)
      Fail(ErrorKind::kShape, "mel batch must be (batch * frames) x n_mels");
    const auto frames = mels.rows() / batch;
    if (frames == 0 || frames % config_.time_downsample != 0)
      Fail(ErrorKind::kShape, "frame count " + std::to_string(frames) +
                                  " is not a positive multiple of " +
                                  std::to_string(config_.time_downsample));
    if (emb.rows() != batch || emb.cols() != config_.embedding_dim)
      Fail(ErrorKind::kConfig, "embedding length " + std::to_string(emb.cols()) +
                                   " does not match embedding_dim " +
                                   std::to_string(config_.embedding_dim));
  }

  nn::Mat<S> Encode(const nn::Mat<S> &mels, int batch, const nn::Mat<S> &emb, bool training,
                    EncoderCache &cache) {
    CheckShapes(mels, batch, emb);
    const int T = int(mels.rows() / batch), E = config_.embedding_dim, F = config_.n_mels;
    const int s = config_.time_downsample, K = T / s, h = config_.code_dim / 2;
    cache.batch = batch;
    cache.frames = T;
    nn::SeqBatch<S> x(batch, T, F + E);
    x.data.leftCols(F) = mels;
    for (int b = 0; b < batch; ++b)
      x.data.middleRows(Eigen::Index(b) * T, T).rightCols(E).rowwise() = emb.row(b);
    for (int i = 0; i < kConvLayers; ++i) {
      auto y = enc_conv_[i].Forward(x, cache.cols[i]);
      y.data = nn::Relu<S>(enc_bn_[i].Forward(y.data, training, cache.bn[i]));
      cache.relu_out[i] = y.data;
      x = std::move(y);
    }
    const auto r1 = enc_rnn1_.Forward(x, cache.rnn1);
    const auto r2 = enc_rnn2_.Forward(r1, cache.rnn2);
    nn::Mat<S> codes(Eigen::Index(batch) * K, config_.code_dim);
    for (int b = 0; b < batch; ++b)
      for (int k = 0; k < K; ++k) {
        codes.row(Eigen::Index(b) * K + k).leftCols(h) = r2.data.row(r2.Row(b, k * s + s - 1)).leftCols(h);
        codes.row(Eigen::Index(b) * K + k).rightCols(h) = r2.data.row(r2.Row(b, k * s)).rightCols(h);
      }
    return codes;
  }

  /// Returns d(loss)/d(mels) through the encoder.
  nn::Mat<S> EncodeBackward(const EncoderCache &cache, const nn::Mat<S> &dcodes) {
    const int B = cache.batch, T = cache.frames, s = config_.time_downsample, K = T / s;
    const int h = config_.code_dim / 2;
    nn::SeqBatch<S> d(B, T, config_.code_dim);
    for (int b = 0; b < B; ++b)
      for (int k = 0; k < K; ++k) {
        d.data.row(d.Row(b, k * s + s - 1)).leftCols(h) += dcodes.row(Eigen::Index(b) * K + k).leftCols(h);
        d.data.row(d.Row(b, k * s)).rightCols(h) += dcodes.row(Eigen::Index(b) * K + k).rightCols(h);
      }
    d = enc_rnn2_.Backward(cache.rnn2, d);
    d = enc_rnn1_.Backward(cache.rnn1, d);
    for (int i = kConvLayers - 1; i >= 0; --i) {
      d.data = enc_bn_[i].Backward(cache.bn[i], nn::ReluBackward<S>(cache.relu_out[i], d.data));
      d = enc_conv_[i].Backward(cache.cols[i], d);
    }
    return d.data.leftCols(config_.n_mels);
  }

  /// Returns (decoder_out, postnet_out) for codes of `batch` items.
  std::pair<nn::Mat<S>, nn::Mat<S>> Decode(const nn::Mat<S> &codes, int batch,
                                           const nn::Mat<S> &emb, bool training,
                                           DecoderCache &cache) {
    const int s = config_.time_downsample, E = config_.embedding_dim, C = config_.code_dim;
    if (batch <= 0 || codes.rows() % batch != 0 || codes.cols() != C || codes.rows() == 0)
      Fail(ErrorKind::kShape, "codes must be (batch * K) x code_dim");
    if (emb.rows() != batch || emb.cols() != E)
      Fail(ErrorKind::kConfig, "embedding length does not match embedding_dim");
    const int K = int(codes.rows() / batch), T = K * s;
    cache.batch = batch;
    cache.frames = T;
    nn::SeqBatch<S> x(batch, T, C + E);
    for (int b = 0; b < batch; ++b)
      for (int t = 0; t < T; ++t) {
        x.data.row(x.Row(b, t)).leftCols(C) = codes.row(Eigen::Index(b) * K + t / s);
        x.data.row(x.Row(b, t)).rightCols(E) = emb.row(b);
      }
    x = dec_lstm1_.Forward(x, cache.lstm1);
    for (int i = 0; i < kConvLayers; ++i) {
      auto y = dec_conv_[i].Forward(x, cache.cols[i]);
      y.data = nn::Relu<S>(dec_bn_[i].Forward(y.data, training, cache.bn[i]));
      cache.relu_out[i] = y.data;
      x = std::move(y);
    }
    x = dec_lstm2a_.Forward(x, cache.lstm2a);
    x = dec_lstm2b_.Forward(x, cache.lstm2b);
    cache.lstm2b_out = x.data;
    nn::Mat<S> decoder_out = dec_proj_.Forward(x.data);
    nn::SeqBatch<S> p(batch, T, decoder_out);
    for (int i = 0; i < kPostnetLayers; ++i) {
      auto y = post_conv_[i].Forward(p, cache.post_cols[i]);
      y.data = post_bn_[i].Forward(y.data, training, cache.post_bn[i]);
      if (i + 1 < kPostnetLayers) y.data = nn::Tanh<S>(y.data);
      cache.post_out[i] = y.data;
      p = std::move(y);
    }
    nn::Mat<S> postnet_out = decoder_out + p.data;
    return {std::move(decoder_out), std::move(postnet_out)};
  }

  /// Backward through decoder and postnet; returns d(loss)/d(codes).
  nn::Mat<S> DecodeBackward(const DecoderCache &cache, const nn::Mat<S> &d_decoder_out,
                            const nn::Mat<S> &d_postnet_out) {
    const int B = cache.batch, T = cache.frames, s = config_.time_downsample, K = T / s;
    const int C = config_.code_dim;
    // postnet_out = decoder_out + residual
    nn::SeqBatch<S> dp(B, T, d_postnet_out);
    for (int i = kPostnetLayers - 1; i >= 0; --i) {
      if (i + 1 < kPostnetLayers) dp.data = nn::TanhBackward<S>(cache.post_out[i], dp.data);
      dp.data = post_bn_[i].Backward(cache.post_bn[i], dp.data);
      dp = post_conv_[i].Backward(cache.post_cols[i], dp);
    }
    nn::Mat<S> d_dec = d_decoder_out + d_postnet_out + dp.data;
    nn::SeqBatch<S> d(B, T, dec_proj_.Backward(cache.lstm2b_out, d_dec));
    d = dec_lstm2b_.Backward(cache.lstm2b, d);
    d = dec_lstm2a_.Backward(cache.lstm2a, d);
    for (int i = kConvLayers - 1; i >= 0; --i) {
      d.data = dec_bn_[i].Backward(cache.bn[i], nn::ReluBackward<S>(cache.relu_out[i], d.data));
      d = dec_conv_[i].Backward(cache.cols[i], d);
    }
    d = dec_lstm1_.Backward(cache.lstm1, d);
    nn::Mat<S> dcodes = nn::Mat<S>::Zero(Eigen::Index(B) * K, C);
    for (int b = 0; b < B; ++b)
      for (int t = 0; t < T; ++t)
        dcodes.row(Eigen::Index(b) * K + t / s) += d.data.row(d.Row(b, t)).leftCols(C);
    return dcodes;
  }

  /// Self-reconstruction forward pass. The latent re-encoding of postnet_out
  /// only runs when use_latent_loss is set.
  Forwarded Forward(const nn::Mat<S> &mels, int batch, const nn::Mat<S> &emb, bool training,
                    StepCache &cache) {
    Forwarded f;
    f.code_x = Encode(mels, batch, emb, training, cache.enc_x);
    auto [dec, post] = Decode(f.code_x, batch, emb, training, cache.dec);
    f.decoder_out = std::move(dec);
    f.postnet_out = std::move(post);
    if (config_.use_latent_loss)
      f.code_xhat = Encode(f.postnet_out, batch, emb, training, cache.enc_xhat);
    return f;
  }

  /// Loss for a batch plus accumulated parameter gradients. A non-finite
  /// total is returned without back-propagating.
  LossBreakdown LossAndGradient(const nn::Mat<S> &mels, int batch, const nn::Mat<S> &emb,
                                bool training = true) {
    StepCache cache;
    const Forwarded f = Forward(mels, batch, emb, training, cache);
    const bool l1 = config_.recon_norm == ReconNorm::kL1;
    nn::Mat<S> d_dec, d_post;
    const double l_dec = double(nn::ReconstructionLoss<S>(f.decoder_out, mels, l1, &d_dec));
    const double l_post = double(nn::ReconstructionLoss<S>(f.postnet_out, mels, l1, &d_post));
    d_post *= S(config_.mu);
    double l_lat = 0.0;
    nn::Mat<S> d_code_x = nn::Mat<S>::Zero(f.code_x.rows(), f.code_x.cols());
    if (config_.use_latent_loss) {
      nn::Mat<S> d_xhat;
      l_lat = double(nn::ReconstructionLoss<S>(f.code_xhat, f.code_x, true, &d_xhat));
      d_xhat *= S(config_.lambda);
      d_code_x = -d_xhat;
      d_post += EncodeBackward(cache.enc_xhat, d_xhat);
    }
    const LossBreakdown lb = ComposeLoss(l_dec, l_post, l_lat, config_);
    if (!std::isfinite(lb.total)) return lb;
    d_code_x += DecodeBackward(cache.dec, d_dec, d_post);
    EncodeBackward(cache.enc_x, d_code_x);
    return lb;
  }

  LossBreakdown Loss(const nn::Mat<S> &mels, int batch, const nn::Mat<S> &emb, bool training) {
    StepCache cache;
    const Forwarded f = Forward(mels, batch, emb, training, cache);
    const bool l1 = config_.recon_norm == ReconNorm::kL1;
    const double l_dec = double(nn::ReconstructionLoss<S>(f.decoder_out, mels, l1, nullptr));
    const double l_post = double(nn::ReconstructionLoss<S>(f.postnet_out, mels, l1, nullptr));
    double l_lat = 0.0;
    if (config_.use_latent_loss)
      l_lat = double(nn::ReconstructionLoss<S>(f.code_xhat, f.code_x, true, nullptr));
    return ComposeLoss(l_dec, l_post, l_lat, config_);
  }

  nn::ParamList<S> Params() {
    nn::ParamList<S> out;
    for (int i = 0; i < kConvLayers; ++i) {
      enc_conv_[i].Collect(out);
      enc_bn_[i].Collect(out);
    }
    enc_rnn1_.Collect(out);
    enc_rnn2_.Collect(out);
    dec_lstm1_.Collect(out);
    for (int i = 0; i < kConvLayers; ++i) {
      dec_conv_[i].Collect(out);
      dec_bn_[i].Collect(out);
    }
    dec_lstm2a_.Collect(out);
    dec_lstm2b_.Collect(out);
    dec_proj_.Collect(out);
    for (int i = 0; i < kPostnetLayers; ++i) {
      post_conv_[i].Collect(out);
      post_bn_[i].Collect(out);
    }
    return out;
  }

  nn::Checkpoint ToCheckpoint() {
    nn::Checkpoint ck;
    nlohmann::json j = config_;
    j["kind"] = "autostc";
    ck.config_json = j.dump();
    nn::StoreParams(Params(), ck);
    return ck;
  }

  static AutoStcModel FromCheckpoint(const nn::Checkpoint &ck, const std::string &label) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(ck.config_json);
    } catch (const std::exception &) {
      Fail(ErrorKind::kLoad, label + ": bad config echo");
    }
    if (j.value("kind", "") != "autostc")
      Fail(ErrorKind::kLoad, label + ": not an AutoSTC checkpoint");
    AutoStcModel model(j.get<AutoStcConfig>());
    nn::LoadParams(ck, model.Params(), label);
    return model;
  }

 private:
  AutoStcConfig config_;
  nn::Conv1d<S> enc_conv_[kConvLayers];
  nn::BatchNorm<S> enc_bn_[kConvLayers];
  nn::Blstm<S> enc_rnn1_, enc_rnn2_;
  nn::Lstm<S> dec_lstm1_;
  nn::Conv1d<S> dec_conv_[kConvLayers];
  nn::BatchNorm<S> dec_bn_[kConvLayers];
  nn::Lstm<S> dec_lstm2a_, dec_lstm2b_;
  nn::Linear<S> dec_proj_;
  nn::Conv1d<S> post_conv_[kPostnetLayers];
  nn::BatchNorm<S> post_bn_[kPostnetLayers];
};

}  // namespace stc

#endif  // STC_AUTOSTC_AUTOSTC_MODEL_HPP_
