// stc/scheduler/autostc_oracle.hpp

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

#ifndef STC_SCHEDULER_AUTOSTC_ORACLE_HPP_
#define STC_SCHEDULER_AUTOSTC_ORACLE_HPP_

#include <map>
#include <memory>
#include <vector>

#include "stc/autostc/autostc.hpp"
#include "stc/scheduler/paths.hpp"

namespace stc {

struct RegisteredDataset {
  std::vector<ReconstructionExample> train;
  std::vector<ReconstructionExample> test;
};

inline std::string EncodeModelBlob(AutoStc &model) {
  return nn::EncodeCheckpoint(model.ToCheckpoint());
}

inline AutoStc DecodeModelBlob(const ModelState &state, const AutoStcConfig &fresh) {
  if (state.blob.empty()) return AutoStc(fresh);
  return AutoStc::FromCheckpoint(nn::DecodeCheckpoint(state.blob, "model state"), "model state");
}

/// Trains on one registered dataset while evaluating every registered test set.
class AutoStcSession : public PlateauSession {
 public:
  AutoStcSession(AutoStc model, const RegisteredDataset &train_on,
                 const std::map<DatasetId, RegisteredDataset> &registry)
      : model_(std::move(model)), trainer_(model_), train_on_(train_on), registry_(registry) {}

  DatasetLosses Evaluate() override {
    DatasetLosses out;
    for (const auto &[id, ds] : registry_) out[id] = EvaluateReconstruction(model_, ds.test).total;
    return out;
  }
  void Train(long steps) override {
    for (long s = 0; s < steps; ++s) trainer_.StepRandom(train_on_.train);
  }
  ModelState Snapshot() override { return {{}, EncodeModelBlob(model_)}; }

 private:
  AutoStc model_;
  AutoStcTrainer trainer_;
  const RegisteredDataset &train_on_;
  const std::map<DatasetId, RegisteredDataset> &registry_;
};

/// Real-trainer oracle. Not cloneable: segments run one after another.
class AutoStcOracle : public TrainerOracle {
 public:
  AutoStcOracle(AutoStcConfig config, std::map<DatasetId, RegisteredDataset> registry,
                PlateauOptions opts, std::vector<DatasetId> order = {})
      : config_(std::move(config)), registry_(std::move(registry)), opts_(opts), order_(std::move(order)) {
    config_.Validate();
    if (order_.empty())
      for (const auto &[id, ds] : registry_) order_.push_back(id);
    for (auto id : order_) {
      const auto it = registry_.find(id);
      if (it == registry_.end())
        Fail(ErrorKind::kRegistry, "dataset " + std::string(DatasetName(id)) + " is not registered");
      if (it->second.train.empty() || it->second.test.empty())
        Fail(ErrorKind::kEmptyInput, "dataset " + std::string(DatasetName(id)) + " needs train and test clips");
    }
  }

  SegmentResult TrainSegment(const ModelState &state, DatasetId dataset) override {
    const auto it = registry_.find(dataset);
    if (it == registry_.end())
      Fail(ErrorKind::kRegistry, "dataset " + std::string(DatasetName(dataset)) + " is not registered");
    AutoStcSession session(DecodeModelBlob(state, config_), it->second, registry_);
    const PlateauResult r = TrainUntilPlateau(session, dataset, opts_);
    SegmentResult out;
    out.state = r.state;
    out.state.lineage = state.lineage;
    out.state.lineage.push_back(dataset);
    out.losses = r.losses;
    out.iterations = r.iterations;
    out.budget_capped = r.budget_capped;
    return out;
  }

  std::vector<DatasetId> Datasets() const override { return order_; }

 private:
  AutoStcConfig config_;
  std::map<DatasetId, RegisteredDataset> registry_;
  PlateauOptions opts_;
  std::vector<DatasetId> order_;
};

}  // namespace stc

#endif  // STC_SCHEDULER_AUTOSTC_ORACLE_HPP_
