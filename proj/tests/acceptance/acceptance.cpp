// tests/acceptance/acceptance.cpp

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
// Runs every primary acceptance criterion at its stated tolerance and prints
// one PASS/FAIL line per criterion. Exit status is the number of failures.

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <regex>
#include <string>
#include <thread>
#include <vector>

#include "stc/conversion/convert.hpp"
#include "stc/data/synth.hpp"
#include "stc/eval/scores.hpp"
#include "stc/scheduler/scripted_oracle.hpp"
#include "stc/study/server.hpp"

#include "../unit/micro_configs.hpp"
#include "../unit/study_checks.hpp"
#include "../unit/test_util.hpp"

namespace stc {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char *fmt, ...) __attribute__((format(printf, 1, 2)));
std::string Fmt(const char *fmt, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  return buf;
}

// Shared fixtures, built lazily by the criteria that need them.
struct Shared {
  testing::TempDir dir;
  std::optional<DatasetManifest> corpus;
  std::optional<SteBundle> ste;

  const DatasetManifest &Corpus() {
    if (!corpus) corpus = GenerateSyntheticCorpus(dir / "corpus", 20, 4, 7);
    return *corpus;
  }
};

SteBundle Clone(SteBundle &b) { return BundleFromCheckpoint(BundleToCheckpoint(b), "clone"); }

AutoStcConfig DeskAutoStc() {
  AutoStcConfig c;
  c.encoder_channels = c.decoder_lstm1 = c.decoder_channels = c.postnet_channels = 64;
  c.decoder_lstm2 = 128;
  c.learning_rate = 1e-3;
  c.batch_size = 4;
  c.embedding_dim = 64;
  return c;
}

// ---------------------------------------------------------------------------

Outcome SimilarityOracle(Shared &) {
  std::mt19937_64 rng(20);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<SimilarityResponse> set(1 + rng() % 50);
    for (auto &r : set) {
      r.task_id = "r";
      do {
        for (auto &p : r.predictions) p = rng() % 2;
      } while (r.Selected() == 0);
      r.correct_index = int(rng() % 6);
    }
    double sum = 0.0;
    for (const auto &r : set) {
      int correct = 0, predictions = 0;
      for (int i = 0; i < 6; ++i) {
        predictions += r.predictions[std::size_t(i)];
        correct += r.predictions[std::size_t(i)] && i == r.correct_index;
      }
      sum += double(correct) * (1.0 / double(predictions));
    }
    worst = std::max(worst, std::abs(SimilarityScore(set) - sum / double(set.size())));
  }
  return {worst <= 1e-12, Fmt("max |S - brute force| = %.3g over 200 sets", worst)};
}

Outcome ChanceLevel(Shared &) {
  std::mt19937_64 rng(16);
  std::vector<SimilarityResponse> set(10000);
  for (auto &r : set) {
    r.task_id = "mc";
    r.predictions[rng() % 6] = true;
    r.correct_index = int(rng() % 6);
  }
  const double s = SimilarityScore(set);
  return {s >= 0.156 && s <= 0.177, Fmt("S = %.4f over 10000 uniform single guesses", s)};
}

Outcome PathSearchReplay(Shared &) {
  std::string detail;
  bool ok = true;
  struct Want {
    DatasetId target;
    std::vector<std::string> path;
    double loss;
    long iterations;
    const char *cell;
  };
  for (const Want &w : {Want{DatasetId::kVs, {"Vc", "Md", "Vs"}, 0.0268, 500000, "0.0653(300k)"},
                        Want{DatasetId::kMd, {"Vc", "Vs", "Md"}, 0.0265, 750000, "0.0479(500k)"}}) {
    ScriptedOracle oracle(PublishedSearchScript(w.target));
    const auto paths = ExplorePaths(oracle, w.target);
    const auto best = SelectOptimumPath(paths);
    const std::string table = RenderPathTable(paths, w.target, oracle.Datasets());
    const bool here = best.Names() == w.path && std::abs(best.TargetLoss() - w.loss) < 5e-5 &&
                      best.CumulativeIterations() == w.iterations && table.find(w.cell) != std::string::npos &&
                      table.find("| ^") != std::string::npos;
    ok &= here;
    std::string names;
    for (const auto &n : best.Names()) names += (names.empty() ? "" : ">") + n;
    detail += Fmt("%s: %s %.4f %ldk%s; ", std::string(DatasetName(w.target)).c_str(), names.c_str(),
                  best.TargetLoss(), best.CumulativeIterations() / 1000, here ? "" : " (mismatch)");
  }
  return {ok, detail};
}

Outcome ShapeLaw(Shared &) {
  AutoStc model(AutoStcConfig{});
  TechniqueEmbedding emb;
  emb.values.assign(64, 0.1f);
  std::string detail;
  bool ok = true;
  for (int T : {16, 32, 64, 128, 256}) {
    MelSpectrogram mel;
    mel.frames = testing::Gaussian(T, kNumMels, std::uint64_t(T), 2.0).cast<float>();
    mel.frames.array() -= 5.0f;
    const auto code = EncodeContent(model, mel, emb);
    ok &= code.codes.rows() == T / 16 && code.codes.cols() == 32;
    detail += Fmt("T=%d:%ldx%ld ", T, long(code.codes.rows()), long(code.codes.cols()));
  }
  return {ok, detail};
}

Outcome GradientChecks(Shared &) {
  const auto ste = testing::SteMicroGradCheck(240, 3);
  const auto ae = testing::AutoStcMicroGradCheck(240, 31, false);
  const auto ae_latent = testing::AutoStcMicroGradCheck(240, 31, true);
  const bool ok = ste.checked >= 200 && ae.checked >= 200 && ae_latent.checked >= 200 &&
                  ste.max_rel_error < 1e-3 && ae.max_rel_error < 1e-3 && ae_latent.max_rel_error < 1e-3;
  return {ok, Fmt("STE %.2e (%d params), AutoSTC %.2e (%d), AutoSTC+latent %.2e (%d)", ste.max_rel_error,
                  ste.checked, ae.max_rel_error, ae.checked, ae_latent.max_rel_error, ae_latent.checked)};
}

Outcome LossCompositionAndToggle(Shared &) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0, 3);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    AutoStcConfig cfg;
    cfg.mu = u(rng);
    cfg.lambda = u(rng);
    cfg.use_latent_loss = trial % 2;
    cfg.recon_norm = trial % 3 ? ReconNorm::kL1 : ReconNorm::kL2;
    MelSpectrogram x;
    x.frames = testing::Gaussian(32, kNumMels, rng(), 3.0).cast<float>();
    const SpectrogramPair pair{ToModelDomain(testing::Gaussian(32, kNumMels, rng(), 3.0).cast<float>()),
                               ToModelDomain(testing::Gaussian(32, kNumMels, rng(), 3.0).cast<float>())};
    const ContentCode a{testing::Gaussian(2, 32, rng()).cast<float>()};
    const ContentCode b{testing::Gaussian(2, 32, rng()).cast<float>()};
    const auto lb = ComputeLoss(x, pair, a, b, cfg);
    const double composed = lb.l_decoder + cfg.mu * lb.l_postnet + cfg.lambda * lb.l_latent;
    worst = std::max(worst, std::abs(lb.total - composed) / std::max(1.0, std::abs(lb.total)));
  }
  const bool composition = worst <= 4 * std::numeric_limits<double>::epsilon();

  auto run = [](bool latent) {
    AutoStcConfig cfg;
    cfg.encoder_channels = cfg.decoder_lstm1 = cfg.decoder_channels = cfg.postnet_channels = 16;
    cfg.decoder_lstm2 = 16;
    cfg.crop_frames = 32;
    cfg.learning_rate = 1e-3;
    cfg.use_latent_loss = latent;
    cfg.lambda = 0.0;
    AutoStc model(cfg);
    AutoStcTrainer trainer(model);
    std::vector<ReconstructionExample> data;
    for (int i = 0; i < 2; ++i) {
      ReconstructionExample ex;
      ex.mel.frames = testing::Gaussian(48, kNumMels, 40 + i, 3.0).cast<float>();
      ex.embedding.values.assign(64, 0.05f * float(i + 1));
      data.push_back(ex);
    }
    for (int s = 0; s < 3; ++s) trainer.StepRandom(data);
    std::vector<nn::Mat<float>> out;
    for (auto *p : model.Params())
      if (p->trainable) out.push_back(p->value);
    return out;
  };
  const auto off = run(false), on = run(true);
  double diff = 0.0;
  for (std::size_t i = 0; i < off.size(); ++i) diff = std::max(diff, double((off[i] - on[i]).cwiseAbs().maxCoeff()));
  return {composition && diff <= 1e-6,
          Fmt("composition max rel err %.2e over 200 draws; toggle vs lambda=0 max param diff %.2e", worst, diff)};
}

Outcome SteLearning(Shared &sh) {
  const auto &m = sh.Corpus();
  auto train = LoadClips(m, Split::kTrain);
  const auto test = LoadClips(m, Split::kTest);
  SteConfig cfg;
  cfg.max_epochs = 50;
  SteBundle bundle{TechniqueEncoder(cfg), {}};
  const auto real = TrainSte(bundle.model, train, test);
  bundle.centroids = TechniqueCentroids(bundle.model, train);

  std::vector<int> labels;
  for (const auto &c : train) labels.push_back(c.label);
  std::mt19937_64 rng(99);
  std::shuffle(labels.begin(), labels.end(), rng);
  for (std::size_t i = 0; i < train.size(); ++i) train[i].label = labels[i];
  TechniqueEncoder control(cfg);
  SteTrainOptions keep_last;
  keep_last.keep_best = false;
  const auto ctl = TrainSte(control, train, test, keep_last);
  double ctl_max = 0.0, ctl_mean = 0.0;
  int ctl_over = 0;
  for (const auto &h : ctl.history) {
    ctl_max = std::max(ctl_max, h.test_accuracy);
    ctl_mean += h.test_accuracy / double(ctl.history.size());
    ctl_over += h.test_accuracy >= 0.35;
  }

  sh.ste = std::move(bundle);
  return {real.best_accuracy >= 0.90 && ctl_max < 0.35,
          Fmt("test accuracy %.4f (epoch %d of %d); shuffled-label control max %.4f, mean %.4f, final %.4f, "
              "%d of %zu epochs >= 0.35 (%zu test clips)",
              real.best_accuracy, real.best_epoch, cfg.max_epochs, ctl_max, ctl_mean,
              ctl.history.back().test_accuracy, ctl_over, ctl.history.size(), test.size())};
}

Outcome OverfitAndIdentity(Shared &sh) {
  if (!sh.ste) return {false, "needs the STE from the learning criterion"};
  const auto &m = sh.Corpus();
  DatasetManifest four{m.name, {}, m.base_dir};
  for (const auto &e : m.entries)
    for (const char *t : {"vibrato", "straight", "belt", "lip_trill"})
      if (e.clip_path == "wav/s0_" + std::string(t) + "_0.wav") four.entries.push_back(e);
  if (four.entries.size() != 4) return {false, "corpus lacks the four s0 clips"};
  const auto data = MakeReconstructionSet(sh.ste->model, LoadClips(four));
  AutoStc model(DeskAutoStc());
  AutoStcTrainer trainer(model);
  trainer.SetCosineSchedule(2000);
  for (int s = 0; s < 2000; ++s) trainer.StepRandom(data);
  const double l_dec = EvaluateReconstruction(model, data).l_decoder;

  ConversionModels cm(Clone(*sh.ste), std::move(model));
  bool identical = true;
  for (const auto &ex : data) {
    const auto converted = Convert(cm, ex.mel, ConversionTarget(ex.mel));
    const auto self = SelfReconstruct(cm, ex.mel);
    identical &= converted.frames.rows() == self.frames.rows() &&
                 std::memcmp(converted.frames.data(), self.frames.data(),
                             sizeof(float) * std::size_t(self.frames.size())) == 0;
  }
  return {l_dec < 0.01 && identical,
          Fmt("l_decoder %.4f after 2000 steps on 4 clips; identity conversion %s", l_dec,
              identical ? "bit-identical" : "differs")};
}

Outcome ClosedLoop(Shared &sh) {
  if (!sh.ste) return {false, "needs the STE from the learning criterion"};
  const auto &m = sh.Corpus();
  const auto train = MakeReconstructionSet(sh.ste->model, LoadClips(m, Split::kTrain));
  AutoStc model(DeskAutoStc());
  AutoStcTrainer trainer(model);
  constexpr long kSteps = STC_CLOSED_LOOP_STEPS;
  trainer.SetCosineSchedule(kSteps);
  for (long s = 0; s < kSteps; ++s) trainer.StepRandom(train);
  ConversionModels cm(Clone(*sh.ste), std::move(model));
  const int vib = int(Technique::kVibrato);
  double source = 0.0, converted = 0.0;
  int n = 0;
  for (const auto &clip : LoadClips(m)) {
    if (clip.label != int(Technique::kStraight)) continue;
    source += ClipProbabilities(cm.ste.model, clip.mel)[std::size_t(vib)];
    converted += ClipProbabilities(cm.ste.model, Convert(cm, clip.mel, Technique::kVibrato))[std::size_t(vib)];
    if (++n == 10) break;
  }
  source /= n;
  converted /= n;
  return {n == 10 && converted > source,
          Fmt("mean P(vibrato): converted %.4f vs source %.4f over %d straight clips (%ld steps)", converted,
              source, n, kSteps)};
}

Outcome MosAndSpearman(Shared &) {
  const auto mos = MosWithCi(std::vector<double>{3, 4, 5, 4});
  bool ok = std::abs(mos.mean - 4.0) < 1e-12 && std::abs(mos.ci_halfwidth - 1.299) <= 1e-3;
  ok &= FormatMos(3.75, 0.34) == "3.75 ± 0.34";
  ResponseSet rs;
  for (int r : {3, 4, 5, 4})
    rs.naturalness.push_back({"n", r, {ModelTag::kUnconverted, Split::kTest, Gender::kF, {}, {}}});
  const std::string report = RenderReport(Analyze(rs));
  const bool rendered = std::regex_search(report, std::regex("MOS unconverted: 4\\.00 ± 1\\.30"));
  ok &= rendered;
  const double same = SpearmanRho({1, 2, 3, 4, 5}, {1, 2, 3, 4, 5}).rho;
  const double rev = SpearmanRho({1, 2, 3, 4, 5}, {5, 4, 3, 2, 1}).rho;
  // Rank oracle without ties: 1 - 6 sum d^2 / (n (n^2 - 1)).
  const std::vector<double> x{1, 2, 3, 4}, y{2, 1, 4, 3};
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d2 += (x[i] - y[i]) * (x[i] - y[i]);
  const double oracle = 1.0 - 6.0 * d2 / (4.0 * 15.0);
  const double four = SpearmanRho(x, y).rho;
  ok &= same == 1.0 && rev == -1.0 && std::abs(four - oracle) <= 1e-12;
  return {ok, Fmt("MOS %.4f ± %.4f; report %s; rho same %.1f reversed %.1f four-point %.15f vs %.15f", mos.mean,
                  mos.ci_halfwidth, rendered ? "formatted" : "format mismatch", same, rev, four, oracle)};
}

Outcome AllocationBalance(Shared &) {
  const auto catalog = MakeSyntheticCatalog();
  const StudyConfig config;
  int bad = 0;
  std::string first;
  for (int p = 0; p < 100; ++p) {
    const auto tasks = AllocateTasks("participant" + std::to_string(p), config, catalog, 2024);
    const auto v = testing::AllocationViolations(tasks, config, catalog);
    if (!v.empty()) {
      ++bad;
      if (first.empty()) first = v.front();
    }
  }
  return {bad == 0, bad == 0 ? "100 of 100 allocations balanced (54 tasks each)"
                             : Fmt("%d unbalanced allocations, first: %s", bad, first.c_str())};
}

Outcome RoundTrip(Shared &sh) {
  const std::string log = sh.dir / "roundtrip.jsonl";
  StudyService service(StudyConfig{}, MakeSyntheticCatalog(), log, 77);
  StudyHttpServer server(service);
  const int port = server.Bind("127.0.0.1", 0);
  std::thread t([&] { server.Listen(); });
  server.WaitUntilReady();
  httplib::Client cli("127.0.0.1", port);
  std::mt19937 rng(5);
  int submitted = 0, rejected = 0;
  for (int p = 0; p < 6; ++p) {
    const std::string pid = "sim" + std::to_string(p);
    const auto res = cli.Get("/api/session/" + pid);
    if (!res || res->status != 200) {
      ++rejected;
      continue;
    }
    const auto session = nlohmann::json::parse(res->body);
    for (const auto &task : session["tasks"]) {
      nlohmann::json body = {{"participant_id", pid}, {"task_id", task["task_id"]}};
      if (task["kind"] == "naturalness") {
        body["rating"] = int(1 + rng() % 5);
      } else {
        std::set<int> picks{int(rng() % 6)};
        if (rng() % 4 == 0) picks.insert(int(rng() % 6));
        body["selections"] = std::vector<int>(picks.begin(), picks.end());
      }
      const auto ack = cli.Post("/api/response", body.dump(), "application/json");
      if (ack && ack->status == 200) ++submitted;
      else ++rejected;
    }
  }
  server.Stop();
  t.join();
  const auto rs = ReadResponseLog(log);
  const auto summaries = Analyze(rs).summaries;
  std::map<std::string, std::size_t> sums;
  for (const auto &s : summaries) sums[s.facet] += s.n;
  const bool ok = rejected == 0 && submitted == 6 * 54 && rs.size() == std::size_t(submitted) &&
                  sums["model"] == rs.size() && sums["subset"] == rs.size() && sums["gender"] == rs.size();
  return {ok, Fmt("%d submissions, %d rejected; ingested %zu; slice sums model %zu subset %zu gender %zu", submitted,
                  rejected, rs.size(), sums["model"], sums["subset"], sums["gender"])};
}

struct Criterion {
  const char *name;
  double budget_seconds;
  Outcome (*run)(Shared &);
};

}  // namespace
}  // namespace stc

int main() {
  using namespace stc;
  const Criterion criteria[] = {
      {"similarity-oracle", 1, SimilarityOracle},
      {"chance-level", 5, ChanceLevel},
      {"path-search-replay", 1, PathSearchReplay},
      {"bottleneck-shape-law", 10, ShapeLaw},
      {"gradient-checks", 120, GradientChecks},
      {"loss-composition-latent-toggle", 60, LossCompositionAndToggle},
      {"ste-learning", 600, SteLearning},
      {"overfit-identity-conversion", 900, OverfitAndIdentity},
      {"closed-loop-conversion", 0, ClosedLoop},
      {"mos-spearman", 5, MosAndSpearman},
      {"allocation-balance", 30, AllocationBalance},
      {"response-round-trip", 60, RoundTrip},
  };
  Shared shared;
  int failures = 0;
  for (const auto &c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run(shared);
    } catch (const std::exception &e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_budget = c.budget_seconds <= 0 || secs <= c.budget_seconds;
    const bool pass = o.pass && in_budget;
    failures += !pass;
    std::printf("%s %-32s %s [%.1fs%s]\n", pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs,
                in_budget ? "" : Fmt(" > %.0fs budget", c.budget_seconds).c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", int(std::size(criteria)) - failures, std::size(criteria));
  return failures;
}
