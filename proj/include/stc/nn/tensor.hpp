// stc/nn/tensor.hpp

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

#ifndef STC_NN_TENSOR_HPP_
#define STC_NN_TENSOR_HPP_

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stc/base/error.hpp"

namespace stc::nn {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using RowVec = Eigen::Matrix<S, 1, Eigen::Dynamic>;

/// A learnable tensor (or a non-trainable buffer such as batch-norm running
/// statistics) stored as a row-major matrix.
template <typename S>
struct Param {
  std::string name;
  Mat<S> value;
  Mat<S> grad;
  bool trainable = true;

  Param() = default;
  Param(std::string n, int rows, int cols, bool train = true)
      : name(std::move(n)), value(Mat<S>::Zero(rows, cols)), grad(Mat<S>::Zero(rows, cols)),
        trainable(train) {}

  void ZeroGrad() { grad.setZero(); }
};

template <typename S>
using ParamList = std::vector<Param<S> *>;

using Rng = std::mt19937_64;

template <typename S>
void InitUniform(Param<S> &p, double bound, Rng &rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = S(u(rng));
}

/// Batch of sequences laid out as (batch * steps) x features, row b*steps+t.
template <typename S>
struct SeqBatch {
  int batch = 0;
  int steps = 0;
  Mat<S> data;

  SeqBatch() = default;
  SeqBatch(int b, int t, int f) : batch(b), steps(t), data(Mat<S>::Zero(b * t, f)) {}
  SeqBatch(int b, int t, Mat<S> d) : batch(b), steps(t), data(std::move(d)) {}

  int features() const { return int(data.cols()); }
  Eigen::Index Row(int b, int t) const { return Eigen::Index(b) * steps + t; }
};

/// NHWC image batch laid out as (batch * height * width) x channels.
template <typename S>
struct ImageBatch {
  int batch = 0, height = 0, width = 0;
  Mat<S> data;

  int channels() const { return int(data.cols()); }
  Eigen::Index Row(int b, int i, int j) const {
    return (Eigen::Index(b) * height + i) * width + j;
  }
};

template <typename S>
void CheckFinite(const Mat<S> &m, const std::string &what) {
  if (!m.allFinite()) Fail(ErrorKind::kNumeric, "non-finite values in " + what);
}

template <typename S>
S Sigmoid(S x) {
  return S(1) / (S(1) + std::exp(-x));
}

}  // namespace stc::nn

#endif  // STC_NN_TENSOR_HPP_
