// stc/ste/ste_train.hpp

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

#ifndef STC_STE_STE_TRAIN_HPP_
#define STC_STE_STE_TRAIN_HPP_

#include <algorithm>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "stc/data/manifest.hpp"
#include "stc/ste/ste_model.hpp"

namespace stc {

using TechniqueEncoder = SteModel<float>;

struct TechniqueEmbedding {
  std::vector<float> values;
};

struct ClassifierOutput {
  std::vector<float> logits;
  std::vector<float> probabilities;
};

inline std::vector<float> RowToVector(const nn::Mat<float> &m, Eigen::Index r) {
  return {m.row(r).data(), m.row(r).data() + m.cols()};
}

inline TechniqueEmbedding EmbeddingFromVector(const Eigen::VectorXf &v) {
  return {{v.data(), v.data() + v.size()}};
}

/// Embedding and class posterior of a single 32 x 80 chunk (inference mode).
inline std::pair<TechniqueEmbedding, ClassifierOutput> SteForward(TechniqueEncoder &model,
                                                                  const RowMatrixF &chunk) {
  const auto out = model.Infer(StackChunks<float>({chunk}));
  return {{RowToVector(out.embedding, 0)},
          {RowToVector(out.logits, 0), RowToVector(out.probabilities, 0)}};
}

/// All chunks of a clip go through the encoder as one batch.
inline TechniqueEncoder::Output SteForwardClip(TechniqueEncoder &model, const MelSpectrogram &mel) {
  return model.Infer(StackChunks<float>(ChunkMel(mel)));
}

/// Clip-level embedding: arithmetic mean of the chunk embeddings.
inline TechniqueEmbedding EmbedClip(TechniqueEncoder &model, const MelSpectrogram &mel) {
  if (mel.NumFrames() < 1) Fail(ErrorKind::kEmptyInput, "mel has no frames");
  const auto out = SteForwardClip(model, mel);
  return EmbeddingFromVector(out.embedding.colwise().mean().transpose());
}

/// Clip-level posterior: mean of the chunk posteriors.
inline std::vector<float> ClipProbabilities(TechniqueEncoder &model, const MelSpectrogram &mel) {
  const auto out = SteForwardClip(model, mel);
  const Eigen::VectorXf p = out.probabilities.colwise().mean().transpose();
  return {p.data(), p.data() + p.size()};
}

struct LabelledClip {
  ManifestEntry entry;
  MelSpectrogram mel;
  int label = -1;
};

/// Loads and featurizes the entries of one split (or all, if split is empty).
inline std::vector<LabelledClip> LoadClips(const DatasetManifest &m,
                                           std::optional<Split> split = std::nullopt,
                                           bool require_labels = true) {
  std::vector<LabelledClip> clips;
  for (const auto &e : m.entries) {
    if (split && e.split != *split) continue;
    if (require_labels && !e.technique)
      Fail(ErrorKind::kLabelling, "unlabelled entry " + e.clip_path);
    LabelledClip c;
    c.entry = e;
    c.mel = ComputeMel(LoadAndResample(m.ResolvePath(e)));
    c.label = e.technique ? int(*e.technique) : -1;
    clips.push_back(std::move(c));
  }
  return clips;
}

/// Clip accuracy where the prediction is argmax of the mean chunk posterior.
inline double EvaluateAccuracy(TechniqueEncoder &model, const std::vector<LabelledClip> &clips) {
  if (clips.empty()) Fail(ErrorKind::kEmptyInput, "no clips to evaluate");
  int correct = 0;
  for (const auto &c : clips) {
    if (c.label < 0) Fail(ErrorKind::kLabelling, "unlabelled clip " + c.entry.clip_path);
    const auto p = ClipProbabilities(model, c.mel);
    correct += int(std::max_element(p.begin(), p.end()) - p.begin()) == c.label;
  }
  return double(correct) / double(clips.size());
}

struct SteEpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double test_accuracy = 0.0;
};

struct SteTrainOptions {
  // Restore the parameters of the best test-accuracy epoch at the end.
  bool keep_best = true;
  // Stop early once test accuracy reaches this value.
  double stop_at_accuracy = 2.0;
  std::function<void(const SteEpochMetrics &)> on_epoch;
};

struct SteTrainResult {
  std::vector<SteEpochMetrics> history;
  int best_epoch = 0;
  double best_accuracy = 0.0;
};

/// Cross-entropy training on chunk labels (each chunk inherits its clip label).
inline SteTrainResult TrainSte(TechniqueEncoder &model, const std::vector<LabelledClip> &train,
                               const std::vector<LabelledClip> &test,
                               const SteTrainOptions &opts = {}) {
  const SteConfig &cfg = model.config();
  if (train.empty()) Fail(ErrorKind::kEmptyInput, "no training clips");
  std::vector<RowMatrixF> chunks;
  std::vector<int> labels;
  for (const auto &c : train) {
    if (c.label < 0) Fail(ErrorKind::kLabelling, "unlabelled entry " + c.entry.clip_path);
    for (auto &ch : ChunkMel(c.mel)) {
      chunks.push_back(std::move(ch));
      labels.push_back(c.label);
    }
  }
  auto params = model.Params();
  nn::Adam<float> adam(params, cfg.learning_rate);
  std::mt19937_64 rng(cfg.seed ^ 0x5eedULL);
  std::vector<std::size_t> order(chunks.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<nn::Mat<float>> best;
  SteTrainResult result;
  result.best_accuracy = -1.0;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += std::size_t(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + std::size_t(cfg.batch_size));
      if (end - start < 2) continue;  // batch statistics need >= 2 items
      std::vector<RowMatrixF> batch;
      std::vector<int> y;
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(chunks[order[i]]);
        y.push_back(labels[order[i]]);
      }
      typename TechniqueEncoder::Cache cache;
      adam.ZeroGrad();
      const auto out = model.Forward(StackChunks<float>(batch), true, cache);
      nn::Mat<float> dlogits;
      const float loss = nn::CrossEntropy<float>(out.logits, y, &dlogits);
      if (!std::isfinite(loss))
        Fail(ErrorKind::kDivergence, "STE loss diverged at epoch " + std::to_string(epoch));
      model.Backward(cache, dlogits);
      adam.Step();
      loss_sum += loss;
      ++batches;
    }
    SteEpochMetrics m{epoch, batches ? loss_sum / batches : 0.0,
                      test.empty() ? 0.0 : EvaluateAccuracy(model, test)};
    result.history.push_back(m);
    if (opts.on_epoch) opts.on_epoch(m);
    if (m.test_accuracy > result.best_accuracy) {
      result.best_accuracy = m.test_accuracy;
      result.best_epoch = epoch;
      best.clear();
      for (auto *p : params) best.push_back(p->value);
    }
    if (m.test_accuracy >= opts.stop_at_accuracy) break;
  }
  if (opts.keep_best && !best.empty())
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best[i];
  return result;
}

/// Per-class mean embedding over a set of labelled clips.
inline std::vector<TechniqueEmbedding> TechniqueCentroids(TechniqueEncoder &model,
                                                           const std::vector<LabelledClip> &clips) {
  const int dim = model.config().embedding_dim;
  std::vector<Eigen::VectorXf> sum(kNumTechniques, Eigen::VectorXf::Zero(dim));
  std::vector<int> count(kNumTechniques, 0);
  for (const auto &c : clips) {
    if (c.label < 0) continue;
    const auto e = EmbedClip(model, c.mel);
    sum[c.label] += Eigen::Map<const Eigen::VectorXf>(e.values.data(), dim);
    ++count[c.label];
  }
  std::vector<TechniqueEmbedding> out;
  for (int k = 0; k < kNumTechniques; ++k) {
    if (count[k] == 0)
      Fail(ErrorKind::kEmptyInput, "no clips for technique " + std::string(kTechniqueNames[k]));
    out.push_back(EmbeddingFromVector(sum[k] / float(count[k])));
  }
  return out;
}

inline constexpr const char *kCentroidTensor = "technique_centroids";

/// A trained encoder plus, optionally, the per-class training centroids used
/// for label-addressed conversion targets.
struct SteBundle {
  TechniqueEncoder model;
  std::vector<TechniqueEmbedding> centroids;  // empty or kNumTechniques rows
};

inline nn::Checkpoint BundleToCheckpoint(SteBundle &bundle) {
  nn::Checkpoint ck = bundle.model.ToCheckpoint();
  if (!bundle.centroids.empty()) {
    nn::TensorRecord rec;
    const auto dim = std::uint32_t(bundle.model.config().embedding_dim);
    rec.shape = {std::uint32_t(bundle.centroids.size()), dim};
    for (const auto &c : bundle.centroids) rec.data.insert(rec.data.end(), c.values.begin(), c.values.end());
    ck.tensors[kCentroidTensor] = std::move(rec);
  }
  return ck;
}

inline SteBundle BundleFromCheckpoint(const nn::Checkpoint &ck, const std::string &label) {
  SteBundle b{TechniqueEncoder::FromCheckpoint(ck, label), {}};
  const auto it = ck.tensors.find(kCentroidTensor);
  if (it != ck.tensors.end()) {
    const auto &rec = it->second;
    const auto dim = std::size_t(b.model.config().embedding_dim);
    if (rec.shape.size() != 2 || rec.shape[0] != kNumTechniques || rec.shape[1] != dim)
      Fail(ErrorKind::kLoad, label + ": bad centroid table");
    for (std::size_t k = 0; k < kNumTechniques; ++k)
      b.centroids.push_back({{rec.data.begin() + long(k * dim), rec.data.begin() + long((k + 1) * dim)}});
  }
  return b;
}

inline void WriteSteBundle(const std::string &path, SteBundle &bundle) {
  nn::WriteCheckpoint(path, BundleToCheckpoint(bundle));
}

inline SteBundle ReadSteBundle(const std::string &path) {
  return BundleFromCheckpoint(nn::ReadCheckpoint(path), path);
}

}  // namespace stc

#endif  // STC_STE_STE_TRAIN_HPP_
