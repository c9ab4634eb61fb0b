// tests/unit/gradcheck.hpp

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
// Central finite-difference gradient check shared by the model tests.

#ifndef STC_TESTS_GRADCHECK_HPP_
#define STC_TESTS_GRADCHECK_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "stc/nn/tensor.hpp"

namespace stc::testing {

struct GradCheckResult {
  double max_rel_error = 0.0;
  int checked = 0;
};

/// `loss_and_grad` must zero the gradients, run forward + backward and return
/// the loss; `loss_only` must evaluate the loss without touching gradients.
/// Samples up to `samples` trainable scalar entries spread over all params.
inline GradCheckResult GradCheck(nn::ParamList<double> params,
                                 const std::function<double()> &loss_and_grad,
                                 const std::function<double()> &loss_only, int samples,
                                 std::uint64_t seed, double step = 1e-4) {
  loss_and_grad();
  std::vector<std::pair<nn::Param<double> *, Eigen::Index>> picks;
  std::vector<nn::Param<double> *> trainable;
  for (auto *p : params)
    if (p->trainable) trainable.push_back(p);
  std::mt19937_64 rng(seed);
  // Every tensor gets at least one probe, the rest are uniform over tensors.
  for (auto *p : trainable) picks.emplace_back(p, 0);
  while (int(picks.size()) < samples) {
    auto *p = trainable[rng() % trainable.size()];
    picks.emplace_back(p, Eigen::Index(rng() % std::uint64_t(p->value.size())));
  }
  std::vector<double> analytic;
  for (auto &[p, i] : picks) analytic.push_back(p->grad.data()[i]);
  GradCheckResult res;
  for (std::size_t k = 0; k < picks.size(); ++k) {
    auto &[p, i] = picks[k];
    double &w = p->value.data()[i];
    const double orig = w;
    w = orig + step;
    const double up = loss_only();
    w = orig - step;
    const double down = loss_only();
    w = orig;
    const double numeric = (up - down) / (2 * step);
    const double denom = std::max({std::abs(numeric), std::abs(analytic[k]), 1e-6});
    res.max_rel_error = std::max(res.max_rel_error, std::abs(numeric - analytic[k]) / denom);
    ++res.checked;
  }
  return res;
}

}  // namespace stc::testing

#endif  // STC_TESTS_GRADCHECK_HPP_
