// stc/nn/layers.hpp

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

#ifndef STC_NN_LAYERS_HPP_
#define STC_NN_LAYERS_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "stc/nn/tensor.hpp"

namespace stc::nn {

/// y = x W + b, applied row-wise.
template <typename S>
class Linear {
 public:
  Linear() = default;
  Linear(const std::string &name, int in, int out, Rng &rng)
      : weight_(name + ".weight", in, out), bias_(name + ".bias", 1, out) {
    const double bound = 1.0 / std::sqrt(double(in));
    InitUniform(weight_, bound, rng);
    InitUniform(bias_, bound, rng);
  }

  Mat<S> Forward(const Mat<S> &x) const {
    Mat<S> y = x * weight_.value;
    y.rowwise() += bias_.value.row(0);
    return y;
  }

  // `x` is the input that was given to Forward().
  Mat<S> Backward(const Mat<S> &x, const Mat<S> &dy) {
    weight_.grad.noalias() += x.transpose() * dy;
    bias_.grad += dy.colwise().sum();
    return dy * weight_.value.transpose();
  }

  void Collect(ParamList<S> &out) {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }

  Param<S> &weight() { return weight_; }
  Param<S> &bias() { return bias_; }
  int in_dim() const { return int(weight_.value.rows()); }
  int out_dim() const { return int(weight_.value.cols()); }

 private:
  Param<S> weight_, bias_;
};

/// 1-D convolution along the time axis of a SeqBatch, odd kernel, "same"
/// zero padding, stride 1. Weight layout: (kernel * in) x out.
template <typename S>
class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(const std::string &name, int in, int out, int kernel, Rng &rng)
      : kernel_(kernel),
        in_(in),
        weight_(name + ".weight", kernel * in, out),
        bias_(name + ".bias", 1, out) {
    if (kernel % 2 != 1) Fail(ErrorKind::kConfig, "conv kernel must be odd");
    const double bound = 1.0 / std::sqrt(double(kernel * in));
    InitUniform(weight_, bound, rng);
    InitUniform(bias_, bound, rng);
  }

  Mat<S> Im2Col(const SeqBatch<S> &x) const {
    const int pad = kernel_ / 2;
    Mat<S> cols = Mat<S>::Zero(x.data.rows(), Eigen::Index(kernel_) * in_);
    for (int b = 0; b < x.batch; ++b)
      for (int t = 0; t < x.steps; ++t)
        for (int k = 0; k < kernel_; ++k) {
          const int src = t + k - pad;
          if (src < 0 || src >= x.steps) continue;
          cols.row(x.Row(b, t)).segment(Eigen::Index(k) * in_, in_) = x.data.row(x.Row(b, src));
        }
    return cols;
  }

  // Returns the output and stores the unfolded input in `cols` for Backward.
  SeqBatch<S> Forward(const SeqBatch<S> &x, Mat<S> &cols) const {
    if (x.features() != in_) Fail(ErrorKind::kShape, "conv1d input width mismatch");
    cols = Im2Col(x);
    Mat<S> y = cols * weight_.value;
    y.rowwise() += bias_.value.row(0);
    return {x.batch, x.steps, std::move(y)};
  }

  SeqBatch<S> Backward(const Mat<S> &cols, const SeqBatch<S> &dy) {
    weight_.grad.noalias() += cols.transpose() * dy.data;
    bias_.grad += dy.data.colwise().sum();
    const Mat<S> dcols = dy.data * weight_.value.transpose();
    const int pad = kernel_ / 2;
    SeqBatch<S> dx(dy.batch, dy.steps, in_);
    for (int b = 0; b < dy.batch; ++b)
      for (int t = 0; t < dy.steps; ++t)
        for (int k = 0; k < kernel_; ++k) {
          const int src = t + k - pad;
          if (src < 0 || src >= dy.steps) continue;
          dx.data.row(dx.Row(b, src)) += dcols.row(dy.Row(b, t)).segment(Eigen::Index(k) * in_, in_);
        }
    return dx;
  }

  void Collect(ParamList<S> &out) {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }
  Param<S> &weight() { return weight_; }
  Param<S> &bias() { return bias_; }

 private:
  int kernel_ = 1, in_ = 0;
  Param<S> weight_, bias_;
};

/// 3x3 convolution on NHWC images, stride 1, same padding.
template <typename S>
class Conv2d {
 public:
  static constexpr int kK = 3;
  Conv2d() = default;
  Conv2d(const std::string &name, int in, int out, Rng &rng)
      : in_(in), weight_(name + ".weight", kK * kK * in, out), bias_(name + ".bias", 1, out) {
    const double bound = 1.0 / std::sqrt(double(kK * kK * in));
    InitUniform(weight_, bound, rng);
    InitUniform(bias_, bound, rng);
  }

  ImageBatch<S> Forward(const ImageBatch<S> &x, Mat<S> &cols) const {
    if (x.channels() != in_) Fail(ErrorKind::kShape, "conv2d channel mismatch");
    cols = Mat<S>::Zero(x.data.rows(), Eigen::Index(kK * kK) * in_);
    for (int b = 0; b < x.batch; ++b)
      for (int i = 0; i < x.height; ++i)
        for (int j = 0; j < x.width; ++j) {
          const auto r = x.Row(b, i, j);
          for (int di = 0; di < kK; ++di) {
            const int si = i + di - 1;
            if (si < 0 || si >= x.height) continue;
            for (int dj = 0; dj < kK; ++dj) {
              const int sj = j + dj - 1;
              if (sj < 0 || sj >= x.width) continue;
              cols.row(r).segment(Eigen::Index(di * kK + dj) * in_, in_) = x.data.row(x.Row(b, si, sj));
            }
          }
        }
    ImageBatch<S> y{x.batch, x.height, x.width, cols * weight_.value};
    y.data.rowwise() += bias_.value.row(0);
    return y;
  }

  ImageBatch<S> Backward(const Mat<S> &cols, const ImageBatch<S> &dy) {
    weight_.grad.noalias() += cols.transpose() * dy.data;
    bias_.grad += dy.data.colwise().sum();
    const Mat<S> dcols = dy.data * weight_.value.transpose();
    ImageBatch<S> dx{dy.batch, dy.height, dy.width, Mat<S>::Zero(dy.data.rows(), in_)};
    for (int b = 0; b < dy.batch; ++b)
      for (int i = 0; i < dy.height; ++i)
        for (int j = 0; j < dy.width; ++j) {
          const auto r = dy.Row(b, i, j);
          for (int di = 0; di < kK; ++di) {
            const int si = i + di - 1;
            if (si < 0 || si >= dy.height) continue;
            for (int dj = 0; dj < kK; ++dj) {
              const int sj = j + dj - 1;
              if (sj < 0 || sj >= dy.width) continue;
              dx.data.row(dx.Row(b, si, sj)) += dcols.row(r).segment(Eigen::Index(di * kK + dj) * in_, in_);
            }
          }
        }
    return dx;
  }

  void Collect(ParamList<S> &out) {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }

 private:
  int in_ = 0;
  Param<S> weight_, bias_;
};

/// Per-column normalization over all rows (batch and time/space positions).
/// Training mode uses batch statistics and updates the running estimates;
/// inference mode uses the running estimates only.
template <typename S>
class BatchNorm {
 public:
  struct Cache {
    Mat<S> xhat;
    RowVec<S> inv_std;
    bool training = false;
  };

  BatchNorm() = default;
  BatchNorm(const std::string &name, int dim, double momentum = 0.1, double eps = 1e-5)
      : gamma_(name + ".gamma", 1, dim),
        beta_(name + ".beta", 1, dim),
        running_mean_(name + ".running_mean", 1, dim, false),
        running_var_(name + ".running_var", 1, dim, false),
        momentum_(momentum),
        eps_(eps) {
    gamma_.value.setOnes();
    running_var_.value.setOnes();
  }

  Mat<S> Forward(const Mat<S> &x, bool training, Cache &cache) {
    const auto n = x.rows();
    cache.training = training;
    RowVec<S> mean, var;
    if (training) {
      mean = x.colwise().mean();
      var = (x.rowwise() - mean).array().square().colwise().mean().matrix();
      const S unbias = n > 1 ? S(n) / S(n - 1) : S(1);
      running_mean_.value = (S(1 - momentum_) * running_mean_.value.array() + S(momentum_) * mean.array()).matrix();
      running_var_.value = (S(1 - momentum_) * running_var_.value.array() + S(momentum_) * unbias * var.array()).matrix();
    } else {
      mean = running_mean_.value.row(0);
      var = running_var_.value.row(0);
    }
    cache.inv_std = (var.array() + S(eps_)).rsqrt().matrix();
    cache.xhat = ((x.rowwise() - mean).array().rowwise() * cache.inv_std.array()).matrix();
    Mat<S> y = (cache.xhat.array().rowwise() * gamma_.value.row(0).array()).matrix();
    y.rowwise() += beta_.value.row(0);
    return y;
  }

  Mat<S> Backward(const Cache &cache, const Mat<S> &dy) {
    gamma_.grad += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
    beta_.grad += dy.colwise().sum();
    const Mat<S> dxhat = (dy.array().rowwise() * gamma_.value.row(0).array()).matrix();
    if (!cache.training) return (dxhat.array().rowwise() * cache.inv_std.array()).matrix();
    const S n = S(dy.rows());
    const RowVec<S> sum_d = dxhat.colwise().sum();
    const RowVec<S> sum_dx = (dxhat.array() * cache.xhat.array()).colwise().sum().matrix();
    Mat<S> dx = (dxhat * n).rowwise() - sum_d;
    dx.array() -= cache.xhat.array().rowwise() * sum_dx.array();
    dx.array().rowwise() *= (cache.inv_std.array() / n);
    return dx;
  }

  void Collect(ParamList<S> &out) {
    out.push_back(&gamma_);
    out.push_back(&beta_);
    out.push_back(&running_mean_);
    out.push_back(&running_var_);
  }
  Param<S> &gamma() { return gamma_; }
  Param<S> &beta() { return beta_; }

 private:
  Param<S> gamma_, beta_, running_mean_, running_var_;
  double momentum_ = 0.1, eps_ = 1e-5;
};

template <typename S>
Mat<S> Relu(const Mat<S> &x) {
  return x.cwiseMax(S(0));
}
// `y` is the ReLU output.
template <typename S>
Mat<S> ReluBackward(const Mat<S> &y, const Mat<S> &dy) {
  return (y.array() > S(0)).select(dy, S(0));
}
template <typename S>
Mat<S> Tanh(const Mat<S> &x) {
  return x.array().tanh().matrix();
}
// `y` is the tanh output.
template <typename S>
Mat<S> TanhBackward(const Mat<S> &y, const Mat<S> &dy) {
  return (dy.array() * (S(1) - y.array().square())).matrix();
}

/// 2x2 max pooling with stride 2; height and width must be even.
template <typename S>
ImageBatch<S> MaxPool2x2(const ImageBatch<S> &x, std::vector<Eigen::Index> &argmax) {
  if (x.height % 2 || x.width % 2) Fail(ErrorKind::kShape, "max-pool needs even spatial dims");
  ImageBatch<S> y{x.batch, x.height / 2, x.width / 2,
                  Mat<S>(Eigen::Index(x.batch) * (x.height / 2) * (x.width / 2), x.channels())};
  const int c = x.channels();
  argmax.assign(std::size_t(y.data.size()), 0);
  for (int b = 0; b < y.batch; ++b)
    for (int i = 0; i < y.height; ++i)
      for (int j = 0; j < y.width; ++j) {
        const auto r = y.Row(b, i, j);
        for (int ch = 0; ch < c; ++ch) {
          Eigen::Index best = x.Row(b, 2 * i, 2 * j);
          for (int di = 0; di < 2; ++di)
            for (int dj = 0; dj < 2; ++dj) {
              const auto cand = x.Row(b, 2 * i + di, 2 * j + dj);
              if (x.data(cand, ch) > x.data(best, ch)) best = cand;
            }
          y.data(r, ch) = x.data(best, ch);
          argmax[std::size_t(r * c + ch)] = best;
        }
      }
  return y;
}

template <typename S>
ImageBatch<S> MaxPool2x2Backward(const ImageBatch<S> &dy, const std::vector<Eigen::Index> &argmax) {
  const int c = dy.channels();
  ImageBatch<S> dx{dy.batch, dy.height * 2, dy.width * 2,
                   Mat<S>::Zero(dy.data.rows() * 4, c)};
  for (Eigen::Index r = 0; r < dy.data.rows(); ++r)
    for (int ch = 0; ch < c; ++ch) dx.data(argmax[std::size_t(r * c + ch)], ch) += dy.data(r, ch);
  return dx;
}

}  // namespace stc::nn

#endif  // STC_NN_LAYERS_HPP_
