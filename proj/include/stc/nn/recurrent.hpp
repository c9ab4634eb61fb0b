// stc/nn/recurrent.hpp

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

#ifndef STC_NN_RECURRENT_HPP_
#define STC_NN_RECURRENT_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "stc/nn/tensor.hpp"

namespace stc::nn {

/// Single-layer LSTM over a SeqBatch. Gate order in the 4H weight columns is
/// input, forget, cell, output. `reverse` runs from the last step to the first.
template <typename S>
class Lstm {
 public:
  struct Cache {
    Mat<S> input;
    // Per processing step (not per time index), batch x 4H activated gates,
    // batch x H cell state, tanh(cell) and hidden state.
    std::vector<Mat<S>> gates, cell, tanh_cell, hidden;
  };

  Lstm() = default;
  Lstm(const std::string &name, int in, int hidden, bool reverse, Rng &rng)
      : hidden_(hidden),
        reverse_(reverse),
        w_input_(name + ".w_input", in, 4 * hidden),
        w_hidden_(name + ".w_hidden", hidden, 4 * hidden),
        bias_(name + ".bias", 1, 4 * hidden) {
    const double bound = 1.0 / std::sqrt(double(hidden));
    InitUniform(w_input_, bound, rng);
    InitUniform(w_hidden_, bound, rng);
    InitUniform(bias_, bound, rng);
  }

  int hidden() const { return hidden_; }

  int TimeAt(int step, int steps) const { return reverse_ ? steps - 1 - step : step; }

  SeqBatch<S> Forward(const SeqBatch<S> &x, Cache &cache) const {
    const int B = x.batch, T = x.steps, H = hidden_;
    cache.input = x.data;
    Mat<S> pre = x.data * w_input_.value;
    pre.rowwise() += bias_.value.row(0);
    cache.gates.assign(T, Mat<S>());
    cache.cell.assign(T, Mat<S>());
    cache.tanh_cell.assign(T, Mat<S>());
    cache.hidden.assign(T, Mat<S>());
    SeqBatch<S> y(B, T, H);
    Mat<S> h = Mat<S>::Zero(B, H), c = Mat<S>::Zero(B, H);
    Mat<S> g(B, 4 * H);
    for (int s = 0; s < T; ++s) {
      const int t = TimeAt(s, T);
      for (int b = 0; b < B; ++b) g.row(b) = pre.row(x.Row(b, t));
      g.noalias() += h * w_hidden_.value;
      auto a = g.array();
      a.leftCols(2 * H) = S(1) / (S(1) + (-a.leftCols(2 * H)).exp());
      a.middleCols(2 * H, H) = a.middleCols(2 * H, H).tanh();
      a.rightCols(H) = S(1) / (S(1) + (-a.rightCols(H)).exp());
      c = (a.middleCols(H, H) * c.array() + a.leftCols(H) * a.middleCols(2 * H, H)).matrix();
      Mat<S> tc = c.array().tanh().matrix();
      h = (a.rightCols(H) * tc.array()).matrix();
      for (int b = 0; b < B; ++b) y.data.row(y.Row(b, t)) = h.row(b);
      cache.gates[s] = g;
      cache.cell[s] = c;
      cache.tanh_cell[s] = std::move(tc);
      cache.hidden[s] = h;
    }
    return y;
  }

  SeqBatch<S> Backward(const Cache &cache, const SeqBatch<S> &dy) {
    const int B = dy.batch, T = dy.steps, H = hidden_;
    Mat<S> dpre(Eigen::Index(B) * T, 4 * H);
    Mat<S> dh_next = Mat<S>::Zero(B, H), dc_next = Mat<S>::Zero(B, H);
    Mat<S> dg(B, 4 * H);
    const Mat<S> zero = Mat<S>::Zero(B, H);
    for (int s = T - 1; s >= 0; --s) {
      const int t = TimeAt(s, T);
      Mat<S> dh = dh_next;
      for (int b = 0; b < B; ++b) dh.row(b) += dy.data.row(dy.Row(b, t));
      const auto a = cache.gates[s].array();
      const auto i = a.leftCols(H), f = a.middleCols(H, H), gg = a.middleCols(2 * H, H),
                 o = a.rightCols(H);
      const auto tc = cache.tanh_cell[s].array();
      const auto c_prev = s > 0 ? cache.cell[s - 1].array() : zero.array();
      const Mat<S> dc = (dc_next.array() + dh.array() * o * (S(1) - tc.square())).matrix();
      dg.leftCols(H) = (dc.array() * gg * i * (S(1) - i)).matrix();
      dg.middleCols(H, H) = (dc.array() * c_prev * f * (S(1) - f)).matrix();
      dg.middleCols(2 * H, H) = (dc.array() * i * (S(1) - gg.square())).matrix();
      dg.rightCols(H) = (dh.array() * tc * o * (S(1) - o)).matrix();
      dc_next = (dc.array() * f).matrix();
      if (s > 0) w_hidden_.grad.noalias() += cache.hidden[s - 1].transpose() * dg;
      dh_next.noalias() = dg * w_hidden_.value.transpose();
      for (int b = 0; b < B; ++b) dpre.row(dy.Row(b, t)) = dg.row(b);
    }
    w_input_.grad.noalias() += cache.input.transpose() * dpre;
    bias_.grad += dpre.colwise().sum();
    return {B, T, dpre * w_input_.value.transpose()};
  }

  void Collect(ParamList<S> &out) {
    out.push_back(&w_input_);
    out.push_back(&w_hidden_);
    out.push_back(&bias_);
  }

 private:
  int hidden_ = 0;
  bool reverse_ = false;
  Param<S> w_input_, w_hidden_, bias_;
};

/// Bidirectional LSTM; the output is [forward | backward], 2H wide.
template <typename S>
class Blstm {
 public:
  struct Cache {
    typename Lstm<S>::Cache fwd, bwd;
  };

  Blstm() = default;
  Blstm(const std::string &name, int in, int hidden, Rng &rng)
      : fwd_(name + ".fwd", in, hidden, false, rng), bwd_(name + ".bwd", in, hidden, true, rng) {}

  int hidden() const { return fwd_.hidden(); }

  SeqBatch<S> Forward(const SeqBatch<S> &x, Cache &cache) const {
    const auto f = fwd_.Forward(x, cache.fwd);
    const auto b = bwd_.Forward(x, cache.bwd);
    SeqBatch<S> y(x.batch, x.steps, 2 * hidden());
    y.data.leftCols(hidden()) = f.data;
    y.data.rightCols(hidden()) = b.data;
    return y;
  }

  SeqBatch<S> Backward(const Cache &cache, const SeqBatch<S> &dy) {
    const int H = hidden();
    SeqBatch<S> df(dy.batch, dy.steps, dy.data.leftCols(H));
    SeqBatch<S> db(dy.batch, dy.steps, dy.data.rightCols(H));
    auto dx = fwd_.Backward(cache.fwd, df);
    dx.data += bwd_.Backward(cache.bwd, db).data;
    return dx;
  }

  void Collect(ParamList<S> &out) {
    fwd_.Collect(out);
    bwd_.Collect(out);
  }

 private:
  Lstm<S> fwd_, bwd_;
};

/// Single-query feed-forward attention pooling over the time axis:
/// score_t = v . tanh(W h_t + b), weights = softmax(score), out = sum_t w_t h_t.
template <typename S>
class AttentionPool {
 public:
  struct Cache {
    SeqBatch<S> input;
    Mat<S> hidden;   // tanh(W h + b), (B*T) x A
    Mat<S> weights;  // B x T
  };

  AttentionPool() = default;
  AttentionPool(const std::string &name, int in, int attn_dim, Rng &rng)
      : proj_(name + ".proj", in, attn_dim),
        proj_bias_(name + ".proj_bias", 1, attn_dim),
        query_(name + ".query", attn_dim, 1) {
    const double bound = 1.0 / std::sqrt(double(in));
    InitUniform(proj_, bound, rng);
    InitUniform(proj_bias_, bound, rng);
    InitUniform(query_, 1.0 / std::sqrt(double(attn_dim)), rng);
  }

  Mat<S> Forward(const SeqBatch<S> &x, Cache &cache) const {
    const int B = x.batch, T = x.steps;
    cache.input = x;
    cache.hidden = x.data * proj_.value;
    cache.hidden.rowwise() += proj_bias_.value.row(0);
    cache.hidden = cache.hidden.array().tanh().matrix();
    const Mat<S> scores = cache.hidden * query_.value;  // (B*T) x 1
    cache.weights.resize(B, T);
    Mat<S> out = Mat<S>::Zero(B, x.features());
    for (int b = 0; b < B; ++b) {
      S mx = scores(x.Row(b, 0), 0);
      for (int t = 1; t < T; ++t) mx = std::max(mx, scores(x.Row(b, t), 0));
      S sum = 0;
      for (int t = 0; t < T; ++t) {
        cache.weights(b, t) = std::exp(scores(x.Row(b, t), 0) - mx);
        sum += cache.weights(b, t);
      }
      for (int t = 0; t < T; ++t) {
        cache.weights(b, t) /= sum;
        out.row(b) += cache.weights(b, t) * x.data.row(x.Row(b, t));
      }
    }
    return out;
  }

  SeqBatch<S> Backward(const Cache &cache, const Mat<S> &dout) {
    const auto &x = cache.input;
    const int B = x.batch, T = x.steps;
    SeqBatch<S> dx(B, T, x.features());
    Mat<S> dscore(Eigen::Index(B) * T, 1);
    for (int b = 0; b < B; ++b) {
      S dot_sum = 0;
      std::vector<S> dw(T);
      for (int t = 0; t < T; ++t) {
        dw[t] = dout.row(b).dot(x.data.row(x.Row(b, t)));
        dot_sum += cache.weights(b, t) * dw[t];
        dx.data.row(x.Row(b, t)) = cache.weights(b, t) * dout.row(b);
      }
      for (int t = 0; t < T; ++t)
        dscore(x.Row(b, t), 0) = cache.weights(b, t) * (dw[t] - dot_sum);
    }
    query_.grad.noalias() += cache.hidden.transpose() * dscore;
    const Mat<S> dpre =
        ((dscore * query_.value.transpose()).array() * (S(1) - cache.hidden.array().square())).matrix();
    proj_.grad.noalias() += x.data.transpose() * dpre;
    proj_bias_.grad += dpre.colwise().sum();
    dx.data.noalias() += dpre * proj_.value.transpose();
    return dx;
  }

  void Collect(ParamList<S> &out) {
    out.push_back(&proj_);
    out.push_back(&proj_bias_);
    out.push_back(&query_);
  }

 private:
  Param<S> proj_, proj_bias_, query_;
};

}  // namespace stc::nn

#endif  // STC_NN_RECURRENT_HPP_
