// tests/unit/micro_configs.hpp

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
// Tiny model configurations for double-precision gradient checks.
#ifndef STC_TESTS_MICRO_CONFIGS_HPP_
#define STC_TESTS_MICRO_CONFIGS_HPP_

#include <random>

#include "stc/autostc/autostc_model.hpp"
#include "stc/ste/ste_model.hpp"
#include "gradcheck.hpp"

namespace stc::testing {

inline SteConfig MicroSteConfig() {
  SteConfig c;
  c.conv_channels = {2, 3, 3, 2};
  c.dense_dims = {4, 4};
  c.blstm_hidden = 3;
  c.embedding_dim = 8;
  return c;
}

inline AutoStcConfig MicroAutoStcConfig() {
  AutoStcConfig c;
  c.encoder_channels = 8;
  c.decoder_channels = 8;
  c.decoder_lstm1 = 4;
  c.decoder_lstm2 = 4;
  c.postnet_channels = 8;
  c.code_dim = 4;
  c.time_downsample = 4;
  c.embedding_dim = 3;
  c.n_mels = 6;
  c.crop_frames = 8;
  return c;
}

inline nn::Mat<double> Gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
                                double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sd);
  nn::Mat<double> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

inline GradCheckResult SteMicroGradCheck(int samples, std::uint64_t seed) {
  SteModel<double> model(MicroSteConfig());
  const nn::Mat<double> x = Gaussian(3 * 32, 80, seed);
  const std::vector<int> labels = {0, 4, 2};
  auto params = model.Params();
  auto run = [&](bool grad) {
    typename SteModel<double>::Cache cache;
    const auto out = model.Forward(x, true, cache);
    nn::Mat<double> dlogits;
    const double loss = nn::CrossEntropy<double>(out.logits, labels, grad ? &dlogits : nullptr);
    if (grad) model.Backward(cache, dlogits);
    return loss;
  };
  return GradCheck(
      params,
      [&] {
        for (auto *p : params) p->ZeroGrad();
        return run(true);
      },
      // Max-pool and ReLU kinks sit closer than 1e-4 to some probes.
      [&] { return run(false); }, samples, seed + 1, 1e-6);
}

inline GradCheckResult AutoStcMicroGradCheck(int samples, std::uint64_t seed, bool latent) {
  auto config = MicroAutoStcConfig();
  config.use_latent_loss = latent;
  AutoStcModel<double> model(config);
  const nn::Mat<double> x = Gaussian(2 * 8, config.n_mels, seed);
  const nn::Mat<double> emb = Gaussian(2, config.embedding_dim, seed + 1);
  auto params = model.Params();
  return GradCheck(
      params,
      [&] {
        for (auto *p : params) p->ZeroGrad();
        return model.LossAndGradient(x, 2, emb).total;
      },
      [&] { return model.Loss(x, 2, emb, true).total; }, samples, seed + 2);
}

}  // namespace stc::testing

#endif  // STC_TESTS_MICRO_CONFIGS_HPP_
