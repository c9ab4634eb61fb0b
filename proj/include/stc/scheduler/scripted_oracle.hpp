// stc/scheduler/scripted_oracle.hpp

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

#ifndef STC_SCHEDULER_SCRIPTED_ORACLE_HPP_
#define STC_SCHEDULER_SCRIPTED_ORACLE_HPP_

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "stc/scheduler/paths.hpp"

namespace stc {

struct ScriptedSegment {
  std::vector<DatasetId> path;
  DatasetLosses losses;
  long iterations = 0;
};

struct OracleScript {
  std::vector<DatasetId> datasets;
  std::vector<ScriptedSegment> segments;
};

/// Replays losses keyed by the full path of each segment. The state it hands
/// out is a deterministic blob naming that path.
class ScriptedOracle : public TrainerOracle {
 public:
  explicit ScriptedOracle(OracleScript script) : script_(std::move(script)) {
    for (const auto &s : script_.segments) {
      const std::string key = JoinPath(s.path);
      if (!by_path_.emplace(key, &s).second)
        Fail(ErrorKind::kValidation, "duplicate scripted segment " + key);
    }
  }

  SegmentResult TrainSegment(const ModelState &state, DatasetId dataset) override {
    std::vector<DatasetId> path = state.lineage;
    path.push_back(dataset);
    const std::string key = JoinPath(path);
    const std::string expected_in = state.lineage.empty() ? "" : "scripted:" + JoinPath(state.lineage);
    if (state.blob != expected_in)
      Fail(ErrorKind::kValidation, "state handed to " + key + " is not the previous checkpoint");
    const auto it = by_path_.find(key);
    if (it == by_path_.end()) Fail(ErrorKind::kNotFound, "no scripted segment for " + key);
    ++calls_;
    SegmentResult r;
    r.state.lineage = path;
    r.state.blob = "scripted:" + key;
    r.losses = it->second->losses;
    r.iterations = it->second->iterations;
    return r;
  }

  std::vector<DatasetId> Datasets() const override { return script_.datasets; }
  bool Cloneable() const override { return true; }
  int calls() const { return calls_; }

 private:
  OracleScript script_;
  std::map<std::string, const ScriptedSegment *> by_path_;
  int calls_ = 0;
};

inline DatasetId DatasetFromJson(const nlohmann::json &j) {
  const auto d = ParseDataset(j.get<std::string>());
  if (!d) Fail(ErrorKind::kRegistry, "unknown dataset " + j.dump());
  return *d;
}

/// {"datasets": [...], "segments": [{"path": [...], "losses": {...},
/// "iterations": n}, ...]}
inline OracleScript OracleScriptFromJson(const nlohmann::json &j) {
  OracleScript s;
  try {
    for (const auto &d : j.at("datasets")) s.datasets.push_back(DatasetFromJson(d));
    for (const auto &seg : j.at("segments")) {
      ScriptedSegment out;
      for (const auto &d : seg.at("path")) out.path.push_back(DatasetFromJson(d));
      for (const auto &[k, v] : seg.at("losses").items()) {
        const auto d = ParseDataset(k);
        if (!d) Fail(ErrorKind::kRegistry, "unknown dataset " + k);
        out.losses[*d] = v.get<double>();
      }
      out.iterations = seg.at("iterations").get<long>();
      s.segments.push_back(std::move(out));
    }
  } catch (const nlohmann::json::exception &e) {
    Fail(ErrorKind::kInput, std::string("malformed oracle script: ") + e.what());
  }
  return s;
}

inline nlohmann::json OracleScriptToJson(const OracleScript &s) {
  nlohmann::json j;
  j["datasets"] = nlohmann::json::array();
  for (auto d : s.datasets) j["datasets"].push_back(DatasetName(d));
  j["segments"] = nlohmann::json::array();
  for (const auto &seg : s.segments) {
    nlohmann::json path = nlohmann::json::array(), losses = nlohmann::json::object();
    for (auto d : seg.path) path.push_back(DatasetName(d));
    for (const auto &[d, l] : seg.losses) losses[std::string(DatasetName(d))] = l;
    j["segments"].push_back({{"path", path}, {"losses", losses}, {"iterations", seg.iterations}});
  }
  return j;
}

inline OracleScript ReadOracleScript(const std::string &path) {
  std::ifstream is(path);
  if (!is) Fail(ErrorKind::kIo, "cannot open " + path);
  try {
    return OracleScriptFromJson(nlohmann::json::parse(is));
  } catch (const nlohmann::json::parse_error &e) {
    Fail(ErrorKind::kInput, path + ": " + e.what());
  }
}

/// Scripted replay of the published VCTK / VocalSet / MedleyDB search. Each
/// table tracks one target; a `^` cell is replayed as a segment that raises
/// the target loss by 0.005 over 50k steps.
inline OracleScript PublishedSearchScript(DatasetId target) {
  using D = DatasetId;
  const D Vc = D::kVc, Vs = D::kVs, Md = D::kMd;
  struct Row {
    std::vector<D> path;
    double loss;  // negative: abandoned, replayed as parent + 0.005
    long k;
  };
  std::vector<Row> rows;
  if (target == Vs) {
    rows = {{{Vc}, 0.0653, 300},          {{Vc, Vs}, 0.0274, 100},     {{Vc, Vs, Md}, -1, 50},
            {{Vc, Md}, 0.0386, 150},      {{Vc, Md, Vs}, 0.0268, 50},  {{Vs}, 0.0347, 150},
            {{Vs, Vc}, -1, 50},           {{Vs, Md}, -1, 50},          {{Md}, 0.0500, 200},
            {{Md, Vs}, 0.0290, 50},       {{Md, Vs, Vc}, -1, 50},      {{Md, Vc}, -1, 50}};
  } else if (target == Md) {
    rows = {{{Vc}, 0.0479, 500},          {{Vc, Vs}, 0.0474, 150},     {{Vc, Vs, Md}, 0.0265, 100},
            {{Vc, Md}, 0.0295, 150},      {{Vc, Md, Vs}, -1, 50},      {{Vs}, 0.0562, 150},
            {{Vs, Vc}, 0.0474, 100},      {{Vs, Vc, Md}, 0.0301, 50},  {{Vs, Md}, 0.0370, 100},
            {{Vs, Md, Vc}, -1, 50},       {{Md}, 0.0367, 150},         {{Md, Vs}, -1, 50},
            {{Md, Vc}, -1, 50}};
  } else {
    Fail(ErrorKind::kRegistry, "published search covers targets Vs and Md only");
  }
  OracleScript s;
  s.datasets = {Vc, Vs, Md};
  std::map<std::vector<D>, double> loss_of;
  for (const auto &r : rows) {
    double loss = r.loss;
    if (loss < 0) {
      std::vector<D> parent(r.path.begin(), r.path.end() - 1);
      loss = loss_of.at(parent) + 0.005;
    }
    loss_of[r.path] = loss;
    s.segments.push_back({r.path, {{target, loss}}, r.k * 1000});
  }
  return s;
}

}  // namespace stc

#endif  // STC_SCHEDULER_SCRIPTED_ORACLE_HPP_
