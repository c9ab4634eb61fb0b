// stc/scheduler/paths.hpp

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

#ifndef STC_SCHEDULER_PATHS_HPP_
#define STC_SCHEDULER_PATHS_HPP_

#include <algorithm>
#include <cstdio>
#include <functional>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "stc/scheduler/plateau.hpp"

namespace stc {

struct SegmentResult {
  ModelState state;
  DatasetLosses losses;
  long iterations = 0;
  bool budget_capped = false;
};

/// Trains a model state on one dataset until its test loss plateaus.
class TrainerOracle {
 public:
  virtual ~TrainerOracle() = default;
  virtual SegmentResult TrainSegment(const ModelState &state, DatasetId dataset) = 0;
  /// Datasets that may appear in a path, in exploration order.
  virtual std::vector<DatasetId> Datasets() const = 0;
  /// Independent branches may only be explored concurrently when true.
  virtual bool Cloneable() const { return false; }
};

struct PathNode {
  DatasetId dataset = DatasetId::kVc;
  DatasetLosses loss_at_plateau;
  long iterations = 0;
  bool abandoned = false;
  bool budget_capped = false;
  std::uint64_t state_fingerprint = 0;
};

struct TrainingPath {
  std::vector<PathNode> nodes;
  DatasetId target = DatasetId::kVs;

  double TargetLoss() const {
    const auto it = nodes.back().loss_at_plateau.find(target);
    return it == nodes.back().loss_at_plateau.end() ? std::numeric_limits<double>::infinity()
                                                    : it->second;
  }
  long CumulativeIterations() const {
    long n = 0;
    for (const auto &node : nodes) n += node.iterations;
    return n;
  }
  bool Abandoned() const { return !nodes.empty() && nodes.back().abandoned; }
  std::vector<std::string> Names() const {
    std::vector<std::string> out;
    for (const auto &n : nodes) out.emplace_back(DatasetName(n.dataset));
    return out;
  }
};

inline std::string JoinPath(const std::vector<DatasetId> &ids) {
  std::string s;
  for (std::size_t i = 0; i < ids.size(); ++i) s += (i ? ">" : "") + std::string(DatasetName(ids[i]));
  return s;
}

inline double TargetLossOf(const DatasetLosses &losses, DatasetId target, const std::string &where) {
  const auto it = losses.find(target);
  if (it == losses.end())
    Fail(ErrorKind::kRegistry, where + ": oracle reported no loss for target " +
                                   std::string(DatasetName(target)));
  return it->second;
}

/// Depth-first search over dataset permutations. A node whose target loss
/// exceeds its parent's is marked abandoned and not extended. Returns one
/// path per leaf in visiting order; `on_node` sees every trained node.
inline std::vector<TrainingPath> ExplorePaths(
    TrainerOracle &oracle, DatasetId target,
    const std::function<void(const TrainingPath &)> &on_node = {}) {
  const std::vector<DatasetId> datasets = oracle.Datasets();
  if (datasets.empty()) Fail(ErrorKind::kRegistry, "no datasets registered");
  if (std::find(datasets.begin(), datasets.end(), target) == datasets.end())
    Fail(ErrorKind::kRegistry, "target " + std::string(DatasetName(target)) + " is not registered");
  std::vector<TrainingPath> leaves;
  TrainingPath prefix;
  prefix.target = target;
  std::vector<bool> used(datasets.size(), false);

  std::function<void(const ModelState &)> visit = [&](const ModelState &state) {
    bool extended = false;
    for (std::size_t i = 0; i < datasets.size(); ++i) {
      if (used[i]) continue;
      extended = true;
      std::vector<DatasetId> ids = state.lineage;
      ids.push_back(datasets[i]);
      const std::string where = "path " + JoinPath(ids);
      SegmentResult seg;
      try {
        seg = oracle.TrainSegment(state, datasets[i]);
      } catch (const Error &e) {
        Fail(e.kind(), where + ": " + e.what());
      }
      PathNode node;
      node.dataset = datasets[i];
      node.loss_at_plateau = seg.losses;
      node.iterations = seg.iterations;
      node.budget_capped = seg.budget_capped;
      node.state_fingerprint = seg.state.Fingerprint();
      const double loss = TargetLossOf(seg.losses, target, where);
      if (!prefix.nodes.empty())
        node.abandoned = loss > TargetLossOf(prefix.nodes.back().loss_at_plateau, target, where);
      seg.state.lineage = ids;
      prefix.nodes.push_back(node);
      if (on_node) on_node(prefix);
      if (node.abandoned) {
        leaves.push_back(prefix);
      } else {
        used[i] = true;
        visit(seg.state);
        used[i] = false;
      }
      prefix.nodes.pop_back();
    }
    if (!extended) leaves.push_back(prefix);
  };
  visit(ModelState{});
  return leaves;
}

/// Lowest terminal target loss among completed paths; ties go to fewer
/// cumulative iterations, then to the lexicographically smaller name list.
inline TrainingPath SelectOptimumPath(const std::vector<TrainingPath> &paths) {
  const TrainingPath *best = nullptr;
  auto better = [](const TrainingPath &a, const TrainingPath &b) {
    if (a.TargetLoss() != b.TargetLoss()) return a.TargetLoss() < b.TargetLoss();
    if (a.CumulativeIterations() != b.CumulativeIterations())
      return a.CumulativeIterations() < b.CumulativeIterations();
    return a.Names() < b.Names();
  };
  for (const auto &p : paths) {
    if (p.nodes.empty() || p.Abandoned()) continue;
    if (!best || better(p, *best)) best = &p;
  }
  if (!best) Fail(ErrorKind::kNoViablePath, "every training path was abandoned");
  return *best;
}

/// `0.0653(300k)`: four decimals, iterations rounded to the nearest 1k.
inline std::string FormatCell(double loss, long iterations) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f(%ldk)", loss, (iterations + 500) / 1000);
  return buf;
}

/// One row per leaf path: `dataset | cell` pairs, `^` for an abandoned node,
/// `-` for datasets never reached. The optimum row is suffixed with `*`.
inline std::string RenderPathTable(const std::vector<TrainingPath> &paths, DatasetId target,
                                   const std::vector<DatasetId> &datasets) {
  std::ostringstream os;
  os << "Loss-Iteration for " << DatasetName(target) << "\n";
  std::vector<std::string> best_names;
  try {
    best_names = SelectOptimumPath(paths).Names();
  } catch (const Error &) {
  }
  std::vector<std::vector<std::string>> rows;
  for (const auto &p : paths) {
    std::vector<std::string> row;
    std::vector<DatasetId> remaining = datasets;
    for (const auto &n : p.nodes) {
      row.emplace_back(DatasetName(n.dataset));
      remaining.erase(std::remove(remaining.begin(), remaining.end(), n.dataset), remaining.end());
      if (n.abandoned) {
        row.emplace_back("^");
      } else {
        const auto it = n.loss_at_plateau.find(p.target);
        row.push_back(it == n.loss_at_plateau.end() ? "?" : FormatCell(it->second, n.iterations));
      }
    }
    for (auto d : remaining) {
      row.emplace_back(DatasetName(d));
      row.emplace_back("-");
    }
    if (!p.Abandoned() && !best_names.empty() && p.Names() == best_names) row.emplace_back("*");
    rows.push_back(std::move(row));
  }
  std::vector<std::size_t> width;
  for (const auto &r : rows)
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (width.size() <= c) width.push_back(0);
      width[c] = std::max(width[c], r[c].size());
    }
  for (const auto &r : rows) {
    os << "|";
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (r[c] == "*") {
        os << " *";
        continue;
      }
      os << " " << r[c] << std::string(width[c] - r[c].size(), ' ') << " |";
    }
    os << "\n";
  }
  return os.str();
}

/// Line-delimited run-log record for one trained node.
inline nlohmann::json PathNodeRecord(const TrainingPath &prefix) {
  const PathNode &n = prefix.nodes.back();
  nlohmann::json losses = nlohmann::json::object();
  for (const auto &[d, l] : n.loss_at_plateau) losses[std::string(DatasetName(d))] = l;
  char fp[17];
  std::snprintf(fp, sizeof fp, "%016llx", static_cast<unsigned long long>(n.state_fingerprint));
  return {{"path", prefix.Names()},
          {"dataset", DatasetName(n.dataset)},
          {"target", DatasetName(prefix.target)},
          {"losses", losses},
          {"iterations", n.iterations},
          {"abandoned", n.abandoned},
          {"budget_capped", n.budget_capped},
          {"state_fingerprint", fp}};
}

}  // namespace stc

#endif  // STC_SCHEDULER_PATHS_HPP_
