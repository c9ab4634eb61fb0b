// tests/unit/nn_test.cpp

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

#include <gtest/gtest.h>

#include "gradcheck.hpp"
#include "stc/nn/checkpoint.hpp"
#include "stc/nn/layers.hpp"
#include "stc/nn/optim.hpp"
#include "stc/nn/recurrent.hpp"

namespace stc {
namespace {

using nn::Mat;

Mat<double> RandomMat(int r, int c, nn::Rng &rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Mat<double> m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

// Weighted sum of outputs makes every output element matter differently.
double Project(const Mat<double> &y, const Mat<double> &w, Mat<double> *dy) {
  if (dy) *dy = w;
  return (y.array() * w.array()).sum();
}

TEST(NnLayers, LinearConvBatchNormGradients) {
  nn::Rng rng(1);
  nn::Conv1d<double> conv("c", 3, 4, 5, rng);
  nn::BatchNorm<double> bn("bn", 4);
  nn::Linear<double> lin("l", 4, 2, rng);
  nn::SeqBatch<double> x(2, 7, RandomMat(14, 3, rng));
  const Mat<double> w = RandomMat(14, 2, rng);
  auto forward = [&](bool grad) {
    Mat<double> cols;
    typename nn::BatchNorm<double>::Cache bc;
    auto h = conv.Forward(x, cols);
    Mat<double> a = nn::Tanh<double>(bn.Forward(h.data, true, bc));
    Mat<double> y = lin.Forward(a);
    Mat<double> dy;
    const double loss = Project(y, w, grad ? &dy : nullptr);
    if (grad) {
      Mat<double> da = lin.Backward(a, dy);
      Mat<double> dh = bn.Backward(bc, nn::TanhBackward<double>(a, da));
      conv.Backward(cols, nn::SeqBatch<double>(2, 7, dh));
    }
    return loss;
  };
  nn::ParamList<double> params;
  conv.Collect(params);
  bn.Collect(params);
  lin.Collect(params);
  auto res = testing::GradCheck(
      params,
      [&] {
        for (auto *p : params) p->ZeroGrad();
        return forward(true);
      },
      [&] { return forward(false); }, 120, 3);
  EXPECT_LT(res.max_rel_error, 1e-5);
}

TEST(NnLayers, BlstmAttentionGradients) {
  nn::Rng rng(2);
  nn::Blstm<double> rnn("r", 3, 4, rng);
  nn::AttentionPool<double> att("a", 8, 5, rng);
  nn::SeqBatch<double> x(2, 5, RandomMat(10, 3, rng));
  const Mat<double> w = RandomMat(2, 8, rng);
  auto forward = [&](bool grad) {
    typename nn::Blstm<double>::Cache rc;
    typename nn::AttentionPool<double>::Cache ac;
    auto h = rnn.Forward(x, rc);
    Mat<double> y = att.Forward(h, ac);
    Mat<double> dy;
    const double loss = Project(y, w, grad ? &dy : nullptr);
    if (grad) rnn.Backward(rc, att.Backward(ac, dy));
    return loss;
  };
  nn::ParamList<double> params;
  rnn.Collect(params);
  att.Collect(params);
  auto res = testing::GradCheck(
      params,
      [&] {
        for (auto *p : params) p->ZeroGrad();
        return forward(true);
      },
      [&] { return forward(false); }, 150, 4);
  EXPECT_LT(res.max_rel_error, 1e-5);
}

TEST(NnLayers, AttentionOverIdenticalStepsIsUniform) {
  nn::Rng rng(3);
  nn::AttentionPool<double> att("a", 4, 4, rng);
  Mat<double> row = RandomMat(1, 4, rng);
  nn::SeqBatch<double> x(1, 2, 4);
  x.data.row(0) = row;
  x.data.row(1) = row;
  typename nn::AttentionPool<double>::Cache cache;
  const Mat<double> out = att.Forward(x, cache);
  EXPECT_DOUBLE_EQ(cache.weights(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(cache.weights(0, 1), 0.5);
  EXPECT_LT((out - row).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(NnLayers, MaxPoolRoutesGradientToArgmax) {
  nn::ImageBatch<double> x{1, 2, 2, Mat<double>(4, 1)};
  x.data << 1, 5, 3, 2;
  std::vector<Eigen::Index> arg;
  auto y = nn::MaxPool2x2(x, arg);
  EXPECT_EQ(y.data(0, 0), 5);
  nn::ImageBatch<double> dy{1, 1, 1, Mat<double>::Constant(1, 1, 2.0)};
  auto dx = nn::MaxPool2x2Backward(dy, arg);
  EXPECT_EQ(dx.data(1, 0), 2.0);
  EXPECT_EQ(dx.data.sum(), 2.0);
}

TEST(NnCheckpoint, RoundTripPreservesTensors) {
  nn::Rng rng(5);
  nn::Linear<float> a("lin", 3, 2, rng), b("lin", 3, 2, rng);
  nn::ParamList<float> pa, pb;
  a.Collect(pa);
  b.Collect(pb);
  nn::Checkpoint ck;
  ck.config_json = "{\"k\":1}";
  nn::StoreParams(pa, ck);
  const auto decoded = nn::DecodeCheckpoint(nn::EncodeCheckpoint(ck), "mem");
  EXPECT_EQ(decoded.config_json, ck.config_json);
  nn::LoadParams(decoded, pb, "mem");
  EXPECT_EQ(a.weight().value, b.weight().value);
  EXPECT_EQ(a.bias().value, b.bias().value);
}

TEST(NnCheckpoint, TruncatedInputIsALoadError) {
  nn::Checkpoint ck;
  ck.tensors["x"] = {{2, 2}, {1, 2, 3, 4}};
  std::string bytes = nn::EncodeCheckpoint(ck);
  bytes.resize(bytes.size() - 3);
  try {
    nn::DecodeCheckpoint(bytes, "mem");
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::kLoad);
  }
}

TEST(NnOptim, CrossEntropyGradientMatchesSoftmaxMinusOneHot) {
  Mat<double> logits(1, 3);
  logits << 1.0, 2.0, 0.5;
  Mat<double> d;
  const double loss = nn::CrossEntropy<double>(logits, {1}, &d);
  const Mat<double> p = nn::Softmax<double>(logits);
  EXPECT_NEAR(loss, -std::log(p(0, 1)), 1e-12);
  EXPECT_NEAR(d(0, 1), p(0, 1) - 1.0, 1e-12);
  EXPECT_NEAR(d.sum(), 0.0, 1e-12);
}

}  // namespace
}  // namespace stc
