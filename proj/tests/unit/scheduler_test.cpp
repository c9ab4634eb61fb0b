// tests/unit/scheduler_test.cpp

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

#include <random>
#include <set>

#include <gtest/gtest.h>

#include "stc/scheduler/autostc_oracle.hpp"
#include "stc/scheduler/scripted_oracle.hpp"
#include "test_util.hpp"

namespace stc {
namespace {

using testing::ExpectErrorKind;
constexpr DatasetId Vc = DatasetId::kVc, Vs = DatasetId::kVs, Md = DatasetId::kMd;

/// Reports a scripted loss sequence; evaluation k happens after k chunks.
class SequenceSession : public PlateauSession {
 public:
  explicit SequenceSession(std::vector<double> losses) : losses_(std::move(losses)) {}
  DatasetLosses Evaluate() override {
    const double l = losses_[std::min(evals_, losses_.size() - 1)];
    ++evals_;
    return {{Vs, l}};
  }
  void Train(long steps) override { trained_ += steps; }
  ModelState Snapshot() override { return {{}, "after " + std::to_string(trained_)}; }
  long trained() const { return trained_; }

 private:
  std::vector<double> losses_;
  std::size_t evals_ = 0;
  long trained_ = 0;
};

TEST(TrainUntilPlateau, StopsAfterPatienceStaleEvaluations) {
  SequenceSession s({0.5, 0.4, 0.4, 0.4});
  PlateauOptions opts;
  opts.patience = 2;
  opts.eval_every = 1000;
  const auto r = TrainUntilPlateau(s, Vs, opts);
  EXPECT_EQ(r.iterations, 3000);
  EXPECT_DOUBLE_EQ(r.losses.at(Vs), 0.4);
  EXPECT_EQ(r.best_iteration, 1000);
  EXPECT_EQ(r.state.blob, "after 1000");
  EXPECT_FALSE(r.budget_capped);
}

TEST(TrainUntilPlateau, BudgetCap) {
  std::vector<double> falling;
  for (int i = 0; i < 100; ++i) falling.push_back(1.0 - 0.01 * i);
  SequenceSession s(falling);
  PlateauOptions opts;
  opts.eval_every = 10;
  opts.max_steps = 250;
  const auto r = TrainUntilPlateau(s, Vs, opts);
  EXPECT_TRUE(r.budget_capped);
  EXPECT_EQ(r.iterations, 250);
  EXPECT_EQ(s.trained(), 250);
  EXPECT_EQ(r.evaluations, 25);
}

TEST(TrainUntilPlateau, ImmediatePlateau) {
  SequenceSession s({0.3, 0.35, 0.1});
  PlateauOptions opts;
  opts.patience = 1;
  const auto r = TrainUntilPlateau(s, Vs, opts);
  EXPECT_EQ(r.evaluations, 1);
  EXPECT_EQ(r.iterations, opts.eval_every);
  EXPECT_DOUBLE_EQ(r.losses.at(Vs), 0.3);
  EXPECT_EQ(r.state.blob, "after 0");
}

TEST(TrainUntilPlateau, SubThresholdGainsAreStale) {
  SequenceSession s({0.3, 0.29997, 0.29994, 0.29992});
  PlateauOptions opts;
  opts.patience = 3;
  const auto r = TrainUntilPlateau(s, Vs, opts);
  EXPECT_EQ(r.evaluations, 3);
  EXPECT_DOUBLE_EQ(r.losses.at(Vs), 0.3);
}

TEST(TrainUntilPlateau, Errors) {
  SequenceSession s({std::nan("")});
  ExpectErrorKind([&] { TrainUntilPlateau(s, Vs, {}); }, ErrorKind::kDivergence);
  SequenceSession t({0.1});
  ExpectErrorKind([&] { TrainUntilPlateau(t, Md, {}); }, ErrorKind::kRegistry);
  PlateauOptions bad;
  bad.patience = 0;
  ExpectErrorKind([&] { TrainUntilPlateau(t, Vs, bad); }, ErrorKind::kConfig);
}

TEST(PathSearch, PublishedVsSearch) {
  ScriptedOracle oracle(PublishedSearchScript(Vs));
  const auto paths = ExplorePaths(oracle, Vs);
  EXPECT_EQ(oracle.calls(), 12);
  const auto best = SelectOptimumPath(paths);
  EXPECT_EQ(best.Names(), (std::vector<std::string>{"Vc", "Md", "Vs"}));
  EXPECT_DOUBLE_EQ(best.TargetLoss(), 0.0268);
  EXPECT_EQ(best.CumulativeIterations(), 500000);
  const std::string table = RenderPathTable(paths, Vs, oracle.Datasets());
  EXPECT_NE(table.find("0.0653(300k)"), std::string::npos) << table;
  EXPECT_NE(table.find("^"), std::string::npos);
  EXPECT_NE(table.find("| Vs | 0.0347(150k) | Vc | ^            | Md | -"), std::string::npos) << table;
  EXPECT_NE(table.find("| Vc | 0.0653(300k) | Md | 0.0386(150k) | Vs | 0.0268(50k) | *"),
            std::string::npos)
      << table;
}

TEST(PathSearch, PublishedMdSearch) {
  ScriptedOracle oracle(PublishedSearchScript(Md));
  const auto paths = ExplorePaths(oracle, Md);
  const auto best = SelectOptimumPath(paths);
  EXPECT_EQ(best.Names(), (std::vector<std::string>{"Vc", "Vs", "Md"}));
  EXPECT_DOUBLE_EQ(best.TargetLoss(), 0.0265);
  EXPECT_EQ(best.CumulativeIterations(), 750000);
  const std::string table = RenderPathTable(paths, Md, oracle.Datasets());
  EXPECT_NE(table.find("0.0479(500k)"), std::string::npos) << table;
  EXPECT_EQ(std::count(table.begin(), table.end(), '*'), 1);
}

TEST(PathSearch, SingleDataset) {
  OracleScript s{{Vs}, {{{Vs}, {{Vs, 0.1}}, 1000}}};
  ScriptedOracle oracle(s);
  const auto paths = ExplorePaths(oracle, Vs);
  ASSERT_EQ(paths.size(), 1u);
  ASSERT_EQ(paths[0].nodes.size(), 1u);
  EXPECT_FALSE(paths[0].nodes[0].abandoned);
  EXPECT_EQ(SelectOptimumPath(paths).Names(), std::vector<std::string>{"Vs"});
}

TEST(PathSearch, TieBreaks) {
  auto path = [](std::vector<DatasetId> ids, double loss, long iters) {
    TrainingPath p;
    p.target = Vs;
    for (auto d : ids) p.nodes.push_back({d, {{Vs, loss}}, iters / long(ids.size()), false, false, 0});
    return p;
  };
  const auto a = path({Vc, Vs}, 0.03, 100000), b = path({Md, Vs}, 0.03, 150000);
  EXPECT_EQ(SelectOptimumPath({b, a}).Names(), a.Names());
  const auto c = path({Vs, Vc}, 0.03, 100000);
  EXPECT_EQ(SelectOptimumPath({c, a}).Names(), a.Names());
  auto abandoned = path({Vc}, 0.01, 1000);
  abandoned.nodes.back().abandoned = true;
  ExpectErrorKind([&] { SelectOptimumPath({abandoned}); }, ErrorKind::kNoViablePath);
  EXPECT_EQ(SelectOptimumPath({abandoned, b}).Names(), b.Names());
}

TEST(PathSearch, EmptyTableIsHeaderOnly) {
  EXPECT_EQ(RenderPathTable({}, Vs, {Vc, Vs, Md}), "Loss-Iteration for Vs\n");
}

// Random scripts over n datasets: positive loss per path prefix.
OracleScript RandomScript(int n, std::mt19937_64 &rng, bool monotone) {
  const std::vector<DatasetId> all = {Vc, Vs, Md, DatasetId::kSynth};
  OracleScript s;
  s.datasets.assign(all.begin(), all.begin() + n);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  std::function<void(std::vector<DatasetId>, double)> rec = [&](std::vector<DatasetId> prefix, double parent) {
    for (auto d : s.datasets) {
      if (std::find(prefix.begin(), prefix.end(), d) != prefix.end()) continue;
      auto p = prefix;
      p.push_back(d);
      const double loss = monotone ? parent * 0.9 : u(rng);
      s.segments.push_back({p, {{Vs, loss}}, long(1000 * (1 + rng() % 300))});
      rec(p, loss);
    }
  };
  rec({}, 1.0);
  return s;
}

TEST(PathSearch, MonotoneOracleVisitsAllPermutations) {
  std::mt19937_64 rng(1);
  for (int n = 1; n <= 4; ++n) {
    const auto s = RandomScript(n, rng, true);
    ScriptedOracle oracle(s);
    if (n < 2) {
      continue;
    }
    const auto paths = ExplorePaths(oracle, Vs);
    const int fact[] = {1, 1, 2, 6, 24};
    EXPECT_EQ(int(paths.size()), fact[n]);
    std::set<std::vector<std::string>> distinct;
    for (const auto &p : paths) {
      EXPECT_EQ(int(p.nodes.size()), n);
      EXPECT_FALSE(p.Abandoned());
      distinct.insert(p.Names());
    }
    EXPECT_EQ(int(distinct.size()), fact[n]);
  }
}

TEST(PathSearch, PruningSoundnessAndOrderInvariance) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const auto s = RandomScript(3, rng, false);
    std::map<std::vector<DatasetId>, double> loss;
    for (const auto &seg : s.segments) loss[seg.path] = seg.losses.at(Vs);
    ScriptedOracle oracle(s);
    std::vector<TrainingPath> paths;
    try {
      paths = ExplorePaths(oracle, Vs);
    } catch (const Error &) {
      FAIL();
    }
    for (const auto &p : paths) {
      std::vector<DatasetId> ids;
      bool increased = false;
      for (std::size_t k = 0; k < p.nodes.size(); ++k) {
        ids.push_back(p.nodes[k].dataset);
        if (k > 0) {
          auto parent = ids;
          parent.pop_back();
          increased = loss[ids] > loss[parent];
        }
        EXPECT_EQ(p.nodes[k].abandoned, increased);
        if (increased) EXPECT_EQ(k + 1, p.nodes.size());
      }
      if (!p.Abandoned()) EXPECT_EQ(p.nodes.size(), 3u);
    }
    bool viable = std::any_of(paths.begin(), paths.end(), [](const auto &p) { return !p.Abandoned(); });
    if (!viable) continue;
    const auto best = SelectOptimumPath(paths);
    for (int shuffle = 0; shuffle < 5; ++shuffle) {
      auto copy = paths;
      std::shuffle(copy.begin(), copy.end(), rng);
      EXPECT_EQ(SelectOptimumPath(copy).Names(), best.Names());
    }
  }
}

/// Records the fingerprints handed in and out of each segment.
class RecordingOracle : public TrainerOracle {
 public:
  SegmentResult TrainSegment(const ModelState &state, DatasetId dataset) override {
    in_[JoinPath(state.lineage)].push_back(state.Fingerprint());
    SegmentResult r;
    r.state.blob = state.blob + "|" + std::string(DatasetName(dataset)) + std::to_string(counter_++);
    auto lineage = state.lineage;
    lineage.push_back(dataset);
    out_[JoinPath(lineage)] = r.state.Fingerprint();
    r.losses = {{Vs, 1.0 / double(counter_)}};
    r.iterations = 10;
    return r;
  }
  std::vector<DatasetId> Datasets() const override { return {Vc, Vs, Md}; }
  std::map<std::string, std::vector<std::uint64_t>> in_;
  std::map<std::string, std::uint64_t> out_;
  int counter_ = 0;
};

TEST(PathSearch, CheckpointHandOff) {
  RecordingOracle oracle;
  const auto paths = ExplorePaths(oracle, Vs);
  EXPECT_EQ(paths.size(), 6u);
  for (const auto &[prefix, fps] : oracle.in_) {
    if (prefix.empty()) {
      for (auto fp : fps) EXPECT_EQ(fp, ModelState{}.Fingerprint());
      continue;
    }
    for (auto fp : fps) EXPECT_EQ(fp, oracle.out_.at(prefix)) << prefix;
  }
  for (const auto &p : paths)
    EXPECT_EQ(p.nodes.back().state_fingerprint,
              oracle.out_.at(JoinPath([&] {
                std::vector<DatasetId> v;
                for (auto &n : p.nodes) v.push_back(n.dataset);
                return v;
              }())));
}

TEST(PathSearch, ErrorsCarryPathContext) {
  auto s = PublishedSearchScript(Vs);
  s.segments.erase(s.segments.begin() + 4);  // Vc>Md>Vs
  ScriptedOracle oracle(s);
  ExpectErrorKind([&] { ExplorePaths(oracle, Vs); }, ErrorKind::kNotFound, "Vc>Md>Vs");
  ExpectErrorKind([] { PublishedSearchScript(Vc); }, ErrorKind::kRegistry);
}

TEST(PathSearch, ScriptJsonRoundTripAndRunLog) {
  const auto s = PublishedSearchScript(Md);
  const auto back = OracleScriptFromJson(nlohmann::json::parse(OracleScriptToJson(s).dump()));
  ScriptedOracle a(s), b(back);
  std::vector<std::string> log;
  const auto pa = ExplorePaths(a, Md, [&](const TrainingPath &p) { log.push_back(PathNodeRecord(p).dump()); });
  const auto pb = ExplorePaths(b, Md);
  EXPECT_EQ(RenderPathTable(pa, Md, a.Datasets()), RenderPathTable(pb, Md, b.Datasets()));
  ASSERT_EQ(log.size(), 13u);
  const auto first = nlohmann::json::parse(log[0]);
  EXPECT_EQ(first["path"], nlohmann::json::array({"Vc"}));
  EXPECT_EQ(first["iterations"], 500000);
  EXPECT_EQ(first["abandoned"], false);
  EXPECT_DOUBLE_EQ(first["losses"]["Md"].get<double>(), 0.0479);
  ExpectErrorKind([] { OracleScriptFromJson(nlohmann::json::parse(R"({"datasets":["Xx"],"segments":[]})")); },
                  ErrorKind::kRegistry);
}

TEST(AutoStcOracle, TrainsAndHandsOffCheckpoints) {
  AutoStcConfig cfg;
  cfg.encoder_channels = cfg.decoder_lstm1 = cfg.decoder_channels = cfg.postnet_channels = 8;
  cfg.decoder_lstm2 = 8;
  cfg.embedding_dim = 8;
  cfg.crop_frames = 16;
  cfg.learning_rate = 1e-3;
  std::mt19937_64 rng(3);
  std::normal_distribution<float> n(0, 1);
  auto example = [&] {
    ReconstructionExample ex;
    ex.mel.frames = RowMatrixF::Constant(20, 80, -4.0f);
    for (Eigen::Index i = 0; i < ex.mel.frames.size(); ++i) ex.mel.frames.data()[i] += n(rng);
    for (int i = 0; i < 8; ++i) ex.embedding.values.push_back(0.1f * n(rng));
    return ex;
  };
  std::map<DatasetId, RegisteredDataset> reg;
  reg[Vc] = {{example(), example()}, {example()}};
  reg[Vs] = {{example(), example()}, {example()}};
  PlateauOptions opts;
  opts.eval_every = 5;
  opts.patience = 1;
  opts.max_steps = 20;
  AutoStcOracle oracle(cfg, reg, opts);
  EXPECT_EQ(oracle.Datasets(), (std::vector<DatasetId>{Vc, Vs}));
  EXPECT_FALSE(oracle.Cloneable());
  const auto seg = oracle.TrainSegment({}, Vc);
  EXPECT_EQ(seg.losses.size(), 2u);
  EXPECT_GT(seg.iterations, 0);
  const auto model = DecodeModelBlob(seg.state, cfg);
  EXPECT_EQ(model.config().embedding_dim, 8);
  const auto paths = ExplorePaths(oracle, Vs);
  EXPECT_FALSE(paths.empty());
  ExpectErrorKind([&] { oracle.TrainSegment({}, Md); }, ErrorKind::kRegistry);
}

}  // namespace
}  // namespace stc
