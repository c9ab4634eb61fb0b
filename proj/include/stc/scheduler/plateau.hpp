// stc/scheduler/plateau.hpp

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

#ifndef STC_SCHEDULER_PLATEAU_HPP_
#define STC_SCHEDULER_PLATEAU_HPP_

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stc/base/error.hpp"
#include "stc/data/manifest.hpp"

namespace stc {

/// Opaque trained-model snapshot plus the datasets it has been trained on.
struct ModelState {
  std::vector<DatasetId> lineage;
  std::string blob;

  /// FNV-1a over the blob.
  std::uint64_t Fingerprint() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : blob) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return h;
  }
};

using DatasetLosses = std::map<DatasetId, double>;

/// One training session that can be evaluated, advanced and snapshotted.
class PlateauSession {
 public:
  virtual ~PlateauSession() = default;
  /// Test loss on every monitored dataset.
  virtual DatasetLosses Evaluate() = 0;
  virtual void Train(long steps) = 0;
  virtual ModelState Snapshot() = 0;
};

struct PlateauOptions {
  int patience = 3;
  long eval_every = 1000;
  double min_improvement = 1e-4;
  long max_steps = 1000000;

  void Validate() const {
    if (patience < 1) Fail(ErrorKind::kConfig, "patience must be >= 1");
    if (eval_every < 1) Fail(ErrorKind::kConfig, "eval_every must be >= 1");
    if (max_steps < 0) Fail(ErrorKind::kConfig, "max_steps must be >= 0");
  }
};

struct PlateauResult {
  ModelState state;       // snapshot from the best evaluation
  DatasetLosses losses;   // losses at the best evaluation
  long iterations = 0;    // steps trained before stopping
  long best_iteration = 0;
  bool budget_capped = false;
  int evaluations = 0;    // excluding the initial one
};

/// Evaluates once before training, then every eval_every steps. Stops after
/// `patience` consecutive evaluations that fail to lower the monitored loss
/// by at least min_improvement, or when max_steps is reached.
inline PlateauResult TrainUntilPlateau(PlateauSession &session, DatasetId monitored,
                                       const PlateauOptions &opts) {
  opts.Validate();
  auto monitored_loss = [&](const DatasetLosses &l) {
    const auto it = l.find(monitored);
    if (it == l.end())
      Fail(ErrorKind::kRegistry, "no test loss for " + std::string(DatasetName(monitored)));
    if (!std::isfinite(it->second))
      Fail(ErrorKind::kDivergence, "non-finite test loss on " + std::string(DatasetName(monitored)));
    return it->second;
  };
  PlateauResult res;
  res.losses = session.Evaluate();
  double best = monitored_loss(res.losses);
  res.state = session.Snapshot();
  int stale = 0;
  while (stale < opts.patience) {
    if (res.iterations >= opts.max_steps) {
      res.budget_capped = true;
      break;
    }
    const long chunk = std::min(opts.eval_every, opts.max_steps - res.iterations);
    session.Train(chunk);
    res.iterations += chunk;
    const DatasetLosses losses = session.Evaluate();
    ++res.evaluations;
    const double loss = monitored_loss(losses);
    if (best - loss >= opts.min_improvement) {
      best = loss;
      stale = 0;
      res.losses = losses;
      res.best_iteration = res.iterations;
      res.state = session.Snapshot();
    } else {
      ++stale;
    }
  }
  return res;
}

}  // namespace stc

#endif  // STC_SCHEDULER_PLATEAU_HPP_
