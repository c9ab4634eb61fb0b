// stc/nn/optim.hpp

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

#ifndef STC_NN_OPTIM_HPP_
#define STC_NN_OPTIM_HPP_

#include <cmath>
#include <vector>

#include "stc/nn/tensor.hpp"

namespace stc::nn {

/// Adam over a fixed parameter list; buffers (trainable == false) are skipped.
template <typename S>
class Adam {
 public:
  Adam(ParamList<S> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8)
      : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (auto *p : params_) {
      m_.push_back(Mat<S>::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Mat<S>::Zero(p->value.rows(), p->value.cols()));
    }
  }

  void ZeroGrad() {
    for (auto *p : params_) p->ZeroGrad();
  }

  void Step() {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, double(t_));
    const double c2 = 1.0 - std::pow(beta2_, double(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto *p = params_[i];
      if (!p->trainable) continue;
      m_[i] = S(beta1_) * m_[i] + S(1 - beta1_) * p->grad;
      v_[i] = (S(beta2_) * v_[i].array() + S(1 - beta2_) * p->grad.array().square()).matrix();
      p->value.array() -= S(lr_ / c1) * m_[i].array() / ((v_[i].array() / S(c2)).sqrt() + S(eps_));
    }
  }

  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }

 private:
  ParamList<S> params_;
  std::vector<Mat<S>> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

/// Softmax over each row.
template <typename S>
Mat<S> Softmax(const Mat<S> &logits) {
  Mat<S> p = logits;
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    p.row(r).array() -= p.row(r).maxCoeff();
    p.row(r) = p.row(r).array().exp().matrix();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

/// Mean cross-entropy of row-wise softmax; writes d(loss)/d(logits).
template <typename S>
S CrossEntropy(const Mat<S> &logits, const std::vector<int> &labels, Mat<S> *dlogits) {
  const Mat<S> p = Softmax(logits);
  const auto n = logits.rows();
  S loss = 0;
  for (Eigen::Index r = 0; r < n; ++r) loss -= std::log(std::max(p(r, labels[r]), S(1e-30)));
  if (dlogits) {
    *dlogits = p;
    for (Eigen::Index r = 0; r < n; ++r) (*dlogits)(r, labels[r]) -= S(1);
    *dlogits /= S(n);
  }
  return loss / S(n);
}

/// Mean |a - b| (L1) or mean (a - b)^2 (L2); writes the gradient w.r.t. a.
template <typename S>
S ReconstructionLoss(const Mat<S> &a, const Mat<S> &b, bool l1, Mat<S> *da) {
  const S n = S(a.size());
  const auto diff = (a - b).array();
  if (l1) {
    if (da) *da = (diff.sign() / n).matrix();
    return diff.abs().sum() / n;
  }
  if (da) *da = (S(2) * diff / n).matrix();
  return diff.square().sum() / n;
}

}  // namespace stc::nn

#endif  // STC_NN_OPTIM_HPP_
