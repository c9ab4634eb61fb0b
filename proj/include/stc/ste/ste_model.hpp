// stc/ste/ste_model.hpp

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

#ifndef STC_STE_STE_MODEL_HPP_
#define STC_STE_STE_MODEL_HPP_

#include <array>
#include <string>
#include <vector>

#include "json.hpp"

#include "stc/audio/mel.hpp"
#include "stc/data/chunk.hpp"
#include "stc/data/manifest.hpp"
#include "stc/nn/checkpoint.hpp"
#include "stc/nn/layers.hpp"
#include "stc/nn/optim.hpp"
#include "stc/nn/recurrent.hpp"

namespace stc {

struct SteConfig {
  std::array<int, 4> conv_channels{32, 64, 64, 128};
  std::array<int, 2> dense_dims{128, 128};
  int blstm_hidden = 64;
  int embedding_dim = 64;
  int n_classes = kNumTechniques;
  double learning_rate = 1e-3;
  std::uint64_t seed = 7;
  int batch_size = 32;
  int max_epochs = 50;

  void Validate() const {
    if (n_classes != kNumTechniques) Fail(ErrorKind::kConfig, "n_classes must be 6");
    if (embedding_dim < 8) Fail(ErrorKind::kConfig, "embedding_dim must be >= 8");
    for (int c : conv_channels)
      if (c <= 0) Fail(ErrorKind::kConfig, "conv channels must be positive");
    for (int d : dense_dims)
      if (d <= 0) Fail(ErrorKind::kConfig, "dense dims must be positive");
    if (blstm_hidden <= 0 || batch_size <= 0 || max_epochs <= 0)
      Fail(ErrorKind::kConfig, "blstm_hidden, batch_size and max_epochs must be positive");
  }
};

inline void to_json(nlohmann::json &j, const SteConfig &c) {
  j = {{"conv_channels", c.conv_channels}, {"dense_dims", c.dense_dims},
       {"blstm_hidden", c.blstm_hidden},   {"embedding_dim", c.embedding_dim},
       {"n_classes", c.n_classes},         {"learning_rate", c.learning_rate},
       {"seed", c.seed},                   {"batch_size", c.batch_size},
       {"max_epochs", c.max_epochs}};
}
inline void from_json(const nlohmann::json &j, SteConfig &c) {
  j.at("conv_channels").get_to(c.conv_channels);
  j.at("dense_dims").get_to(c.dense_dims);
  j.at("blstm_hidden").get_to(c.blstm_hidden);
  j.at("embedding_dim").get_to(c.embedding_dim);
  j.at("n_classes").get_to(c.n_classes);
  j.at("learning_rate").get_to(c.learning_rate);
  j.at("seed").get_to(c.seed);
  j.at("batch_size").get_to(c.batch_size);
  j.at("max_epochs").get_to(c.max_epochs);
}

/// Technique encoder operating on 32 x 80 mel chunks:
///   4 x [conv3x3 -> batchnorm -> relu -> maxpool2x2]    (32 x 80 -> 2 x 5)
///   per time step flatten -> dense -> relu -> dense -> relu
///   blstm -> blstm -> attention pooling over the 2 steps
///   dense -> relu -> dense -> tanh  = embedding
///   linear -> 6 logits
template <typename S>
class SteModel {
 public:
  static constexpr int kFrames = kChunkFrames;
  static constexpr int kBins = kNumMels;
  static constexpr int kPoolSteps = 4;

  struct Output {
    nn::Mat<S> embedding;  // B x embedding_dim
    nn::Mat<S> logits;     // B x 6
    nn::Mat<S> probabilities;
  };

  struct Cache {
    int batch = 0;
    std::array<nn::Mat<S>, kPoolSteps> cols;
    std::array<typename nn::BatchNorm<S>::Cache, kPoolSteps> bn;
    std::array<nn::Mat<S>, kPoolSteps> relu_out;
    std::array<std::vector<Eigen::Index>, kPoolSteps> argmax;
    std::array<int, kPoolSteps> height{}, width{};
    nn::Mat<S> flat, dense1, dense2;
    typename nn::Blstm<S>::Cache blstm1, blstm2;
    nn::SeqBatch<S> rnn1;
    typename nn::AttentionPool<S>::Cache attention;
    nn::Mat<S> pooled, dense3, embedding;
  };

  explicit SteModel(const SteConfig &config) : config_(config) {
    config_.Validate();
    nn::Rng rng(config_.seed);
    int in = 1;
    for (int i = 0; i < kPoolSteps; ++i) {
      conv_[i] = nn::Conv2d<S>("conv" + std::to_string(i), in, config_.conv_channels[i], rng);
      bn_[i] = nn::BatchNorm<S>("bn" + std::to_string(i), config_.conv_channels[i]);
      in = config_.conv_channels[i];
    }
    const int flat = in * (kBins >> kPoolSteps);
    const int h = config_.blstm_hidden;
    dense1_ = nn::Linear<S>("dense1", flat, config_.dense_dims[0], rng);
    dense2_ = nn::Linear<S>("dense2", config_.dense_dims[0], config_.dense_dims[1], rng);
    blstm1_ = nn::Blstm<S>("blstm1", config_.dense_dims[1], h, rng);
    blstm2_ = nn::Blstm<S>("blstm2", 2 * h, h, rng);
    attention_ = nn::AttentionPool<S>("attention", 2 * h, 2 * h, rng);
    dense3_ = nn::Linear<S>("dense3", 2 * h, config_.dense_dims[1], rng);
    dense4_ = nn::Linear<S>("dense4", config_.dense_dims[1], config_.embedding_dim, rng);
    classifier_ = nn::Linear<S>("classifier", config_.embedding_dim, config_.n_classes, rng);
  }

  const SteConfig &config() const { return config_; }

  /// `chunks` holds B stacked 32 x 80 chunks, i.e. (B * 32) x 80.
  Output Forward(const nn::Mat<S> &chunks, bool training, Cache &cache) {
    if (chunks.cols() != kBins || chunks.rows() % kFrames != 0 || chunks.rows() == 0)
      Fail(ErrorKind::kShape, "STE input must be a stack of 32 x 80 chunks");
    const int B = int(chunks.rows() / kFrames);
    cache.batch = B;
    nn::ImageBatch<S> x{B, kFrames, kBins,
                        Eigen::Map<const nn::Mat<S>>(chunks.data(), chunks.size(), 1)};
    for (int i = 0; i < kPoolSteps; ++i) {
      cache.height[i] = x.height;
      cache.width[i] = x.width;
      auto conv = conv_[i].Forward(x, cache.cols[i]);
      conv.data = nn::Relu<S>(bn_[i].Forward(conv.data, training, cache.bn[i]));
      cache.relu_out[i] = conv.data;
      x = nn::MaxPool2x2(conv, cache.argmax[i]);
    }
    // NHWC rows (b, t, f) x C are already the row-major layout of (b, t) x (f * C).
    const int steps = x.height;
    cache.flat = Eigen::Map<const nn::Mat<S>>(x.data.data(), Eigen::Index(B) * steps,
                                              Eigen::Index(x.width) * x.channels());
    cache.dense1 = nn::Relu<S>(dense1_.Forward(cache.flat));
    cache.dense2 = nn::Relu<S>(dense2_.Forward(cache.dense1));
    cache.rnn1 = blstm1_.Forward({B, steps, cache.dense2}, cache.blstm1);
    const auto rnn2 = blstm2_.Forward(cache.rnn1, cache.blstm2);
    cache.pooled = attention_.Forward(rnn2, cache.attention);
    cache.dense3 = nn::Relu<S>(dense3_.Forward(cache.pooled));
    cache.embedding = nn::Tanh<S>(dense4_.Forward(cache.dense3));
    Output out;
    out.embedding = cache.embedding;
    out.logits = classifier_.Forward(cache.embedding);
    out.probabilities = nn::Softmax<S>(out.logits);
    return out;
  }

  /// Inference-mode forward. Does not modify the model, so concurrent calls
  /// on a trained model are safe.
  Output Infer(const nn::Mat<S> &chunks) const {
    Cache cache;
    return const_cast<SteModel *>(this)->Forward(chunks, false, cache);
  }

  /// Accumulates parameter gradients for d(loss)/d(logits).
  void Backward(const Cache &cache, const nn::Mat<S> &dlogits) {
    const int B = cache.batch;
    nn::Mat<S> d = classifier_.Backward(cache.embedding, dlogits);
    d = dense4_.Backward(cache.dense3, nn::TanhBackward<S>(cache.embedding, d));
    d = dense3_.Backward(cache.pooled, nn::ReluBackward<S>(cache.dense3, d));
    auto dseq = attention_.Backward(cache.attention, d);
    dseq = blstm2_.Backward(cache.blstm2, dseq);
    dseq = blstm1_.Backward(cache.blstm1, dseq);
    d = dense2_.Backward(cache.dense1, nn::ReluBackward<S>(cache.dense2, dseq.data));
    d = dense1_.Backward(cache.flat, nn::ReluBackward<S>(cache.dense1, d));
    const int last = kPoolSteps - 1;
    const int c_last = config_.conv_channels[last];
    nn::ImageBatch<S> dimg{B, cache.height[last] / 2, cache.width[last] / 2,
                           Eigen::Map<const nn::Mat<S>>(d.data(), d.size() / c_last, c_last)};
    for (int i = last; i >= 0; --i) {
      auto dpre = nn::MaxPool2x2Backward(dimg, cache.argmax[i]);
      dpre.data = bn_[i].Backward(cache.bn[i], nn::ReluBackward<S>(cache.relu_out[i], dpre.data));
      dimg = conv_[i].Backward(cache.cols[i], dpre);
    }
  }

  nn::ParamList<S> Params() {
    nn::ParamList<S> out;
    for (int i = 0; i < kPoolSteps; ++i) {
      conv_[i].Collect(out);
      bn_[i].Collect(out);
    }
    dense1_.Collect(out);
    dense2_.Collect(out);
    blstm1_.Collect(out);
    blstm2_.Collect(out);
    attention_.Collect(out);
    dense3_.Collect(out);
    dense4_.Collect(out);
    classifier_.Collect(out);
    return out;
  }

  nn::Checkpoint ToCheckpoint() {
    nn::Checkpoint ck;
    nlohmann::json j = config_;
    j["kind"] = "ste";
    ck.config_json = j.dump();
    nn::StoreParams(Params(), ck);
    return ck;
  }

  static SteModel FromCheckpoint(const nn::Checkpoint &ck, const std::string &label) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(ck.config_json);
    } catch (const std::exception &e) {
      Fail(ErrorKind::kLoad, label + ": bad config echo");
    }
    if (j.value("kind", "") != "ste") Fail(ErrorKind::kLoad, label + ": not an STE checkpoint");
    SteModel model(j.get<SteConfig>());
    nn::LoadParams(ck, model.Params(), label);
    return model;
  }

 private:
  SteConfig config_;
  std::array<nn::Conv2d<S>, kPoolSteps> conv_;
  std::array<nn::BatchNorm<S>, kPoolSteps> bn_;
  nn::Linear<S> dense1_, dense2_;
  nn::Blstm<S> blstm1_, blstm2_;
  nn::AttentionPool<S> attention_;
  nn::Linear<S> dense3_, dense4_, classifier_;
};

/// Stacks chunks into the (B * 32) x 80 layout SteModel::Forward expects.
template <typename S>
nn::Mat<S> StackChunks(const std::vector<RowMatrixF> &chunks) {
  nn::Mat<S> out(Eigen::Index(chunks.size()) * kChunkFrames, kNumMels);
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    if (chunks[i].rows() != kChunkFrames || chunks[i].cols() != kNumMels)
      Fail(ErrorKind::kShape, "chunk must be 32 x 80");
    out.middleRows(Eigen::Index(i) * kChunkFrames, kChunkFrames) = chunks[i].template cast<S>();
  }
  return out;
}

}  // namespace stc

#endif  // STC_STE_STE_MODEL_HPP_
