// stc/cli/app.hpp

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

#ifndef STC_CLI_APP_HPP_
#define STC_CLI_APP_HPP_

#include <csignal>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "stc/cli/run_config.hpp"
#include "stc/conversion/convert.hpp"
#include "stc/conversion/preview.hpp"
#include "stc/data/synth.hpp"
#include "stc/eval/scores.hpp"
#include "stc/scheduler/autostc_oracle.hpp"
#include "stc/scheduler/scripted_oracle.hpp"
#include "stc/study/server.hpp"

#ifndef STC_DEFAULT_STATIC_DIR
#define STC_DEFAULT_STATIC_DIR ""
#endif

namespace stc {
namespace cli {

namespace fs = std::filesystem;

/// Flag values that override config keys when given on the command line.
class FlagBindings {
 public:
  void Bind(CLI::App *sub, const std::string &flag, const std::string &key, const std::string &help) {
    storage_.emplace_back();
    CLI::Option *opt = sub->add_option(flag, storage_.back(), help + " [" + key + "]");
    bound_.push_back({opt, key, &storage_.back()});
  }
  void Apply(RunConfig &cfg) const {
    for (const auto &b : bound_)
      if (b.option->count() > 0) cfg.Set(b.key, *b.value);
  }

 private:
  struct Bound {
    CLI::Option *option;
    std::string key;
    std::string *value;
  };
  std::deque<std::string> storage_;
  std::vector<Bound> bound_;
};

inline void Log(const std::string &msg) { std::cerr << "stc: " << msg << std::endl; }

inline void EchoConfig(const RunConfig &cfg, const std::vector<std::string> &sections) {
  for (const auto &s : sections) std::cerr << cfg.Dump(s);
}

inline void WriteText(const std::string &path, const std::string &text) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(path);
  if (!os) Fail(ErrorKind::kIo, "cannot write " + path);
  os << text;
}

inline std::string ConfigEcho(const RunConfig &cfg, const std::vector<std::string> &sections) {
  std::string out;
  for (const auto &s : sections) out += cfg.Dump(s) + "\n";
  return out;
}

inline DatasetId ParseDatasetOrFail(const std::string &s) {
  const auto d = ParseDataset(s);
  if (!d || *d == DatasetId::kSynth) Fail(ErrorKind::kConfig, "unknown dataset " + s + " (Vc, Vs, Md)");
  return *d;
}

// ---------------------------------------------------------------------------

inline int MakeSynth(const RunConfig &cfg, const std::string &out) {
  EchoConfig(cfg, {"synth"});
  const long per_class = cfg.GetInt("synth.per_class"), singers = cfg.GetInt("synth.singers");
  if (singers < 1) Fail(ErrorKind::kConfig, "synth.singers must be >= 1");
  const auto m = GenerateSyntheticCorpus(out, int(per_class), int(singers), cfg.GetU64("synth.seed"));
  WriteText((fs::path(out) / "run_config.ini").string(), ConfigEcho(cfg, {"synth"}));
  std::cout << "wrote " << m.entries.size() << " clips and " << (fs::path(out) / "manifest.csv").string()
            << "\n";
  return 0;
}

inline int Prep(const RunConfig &cfg, const std::string &manifest_path, const std::string &out) {
  EchoConfig(cfg, {"prep"});
  DatasetManifest m = ReadManifest(manifest_path);
  if (cfg.GetBool("prep.balance")) m = BuildBalancedSubset(m);
  const bool has_test = std::any_of(m.entries.begin(), m.entries.end(),
                                    [](const ManifestEntry &e) { return e.split == Split::kTest; });
  if (cfg.GetBool("prep.resplit") || !has_test)
    m = SplitTrainTest(m, cfg.GetDouble("prep.split_ratio"), cfg.GetU64("prep.seed"));
  fs::create_directories(fs::path(out) / "mel");
  std::size_t chunks = 0;
  for (auto &e : m.entries) {
    const std::string wav = fs::absolute(m.ResolvePath(e)).string();
    const MelSpectrogram mel = ComputeMel(LoadAndResample(wav));
    chunks += ChunkMel(mel).size();
    WriteMel((fs::path(out) / "mel" / (fs::path(e.clip_path).stem().string() + ".mel")).string(), mel);
    e.clip_path = wav;
  }
  m.base_dir.clear();
  WriteManifest((fs::path(out) / "manifest.csv").string(), m);
  WriteText((fs::path(out) / "run_config.ini").string(), ConfigEcho(cfg, {"prep"}));
  std::size_t train = 0;
  for (const auto &e : m.entries) train += e.split == Split::kTrain;
  std::cout << "prepared " << m.entries.size() << " clips (" << train << " train, "
            << m.entries.size() - train << " test, " << chunks << " chunks)\n";
  return 0;
}

inline int TrainSteCommand(const RunConfig &cfg, const std::string &manifest_path, const std::string &out,
                           bool shuffle_labels) {
  EchoConfig(cfg, {"ste"});
  const SteConfig sc = cfg.Ste();
  const DatasetManifest m = ReadManifest(manifest_path);
  auto train = LoadClips(m, Split::kTrain);
  const auto test = LoadClips(m, Split::kTest);
  if (shuffle_labels) {
    std::vector<int> labels;
    for (const auto &c : train) labels.push_back(c.label);
    std::mt19937_64 rng(sc.seed ^ 0x1abe1ULL);
    std::shuffle(labels.begin(), labels.end(), rng);
    for (std::size_t i = 0; i < train.size(); ++i) train[i].label = labels[i];
    Log("training labels shuffled (control run)");
  }
  Log("seed " + std::to_string(sc.seed) + ", " + std::to_string(train.size()) + " train / " +
      std::to_string(test.size()) + " test clips");
  SteBundle bundle{TechniqueEncoder(sc), {}};
  SteTrainOptions opts;
  opts.stop_at_accuracy = cfg.GetDouble("ste.stop_at_accuracy");
  opts.on_epoch = [](const SteEpochMetrics &e) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "epoch %3d  loss %.4f  test_acc %.4f", e.epoch, e.train_loss, e.test_accuracy);
    std::cout << buf << std::endl;
  };
  const auto result = TrainSte(bundle.model, train, test, opts);
  bundle.centroids = TechniqueCentroids(bundle.model, train);
  WriteSteBundle(out, bundle);
  nlohmann::json hist = nlohmann::json::array();
  for (const auto &h : result.history)
    hist.push_back({{"epoch", h.epoch}, {"train_loss", h.train_loss}, {"test_accuracy", h.test_accuracy}});
  WriteText(out + ".json", nlohmann::json{{"manifest", fs::absolute(manifest_path).string()},
                                          {"best_epoch", result.best_epoch},
                                          {"best_accuracy", result.best_accuracy},
                                          {"shuffled_labels", shuffle_labels},
                                          {"history", hist},
                                          {"config", cfg.Dump("ste")}}
                               .dump(2));
  std::printf("best test accuracy %.4f at epoch %d\n", result.best_accuracy, result.best_epoch);
  return 0;
}

/// Without `manifest_path`, evaluates on the manifest recorded in CKPT.json.
inline int EvalSteCommand(std::string manifest_path, const std::string &model_path, const std::string &split) {
  if (manifest_path.empty()) {
    const std::string sidecar = model_path + ".json";
    std::ifstream is(sidecar);
    if (!is) Fail(ErrorKind::kNotFound, "no --manifest given and " + sidecar + " not found");
    try {
      manifest_path = nlohmann::json::parse(is).at("manifest").get<std::string>();
    } catch (const nlohmann::json::exception &e) {
      Fail(ErrorKind::kLoad, sidecar + ": " + e.what());
    }
  }
  const DatasetManifest m = ReadManifest(manifest_path);
  std::optional<Split> sp;
  if (split == "train") sp = Split::kTrain;
  else if (split == "test") sp = Split::kTest;
  else if (split != "all") Fail(ErrorKind::kConfig, "split must be train, test or all");
  SteBundle bundle = ReadSteBundle(model_path);
  const auto clips = LoadClips(m, sp);
  const double acc = EvaluateAccuracy(bundle.model, clips);
  std::array<std::array<int, kNumTechniques>, kNumTechniques> confusion{};
  for (const auto &c : clips) {
    const auto p = ClipProbabilities(bundle.model, c.mel);
    ++confusion[std::size_t(c.label)][std::size_t(std::max_element(p.begin(), p.end()) - p.begin())];
  }
  std::printf("accuracy %.4f over %zu clips\n", acc, clips.size());
  std::printf("%-10s", "true\\pred");
  for (auto n : kTechniqueNames) std::printf(" %9.9s", std::string(n).c_str());
  std::printf("\n");
  for (int i = 0; i < kNumTechniques; ++i) {
    std::printf("%-10s", std::string(kTechniqueNames[i]).c_str());
    for (int j = 0; j < kNumTechniques; ++j) std::printf(" %9d", confusion[i][j]);
    std::printf("\n");
  }
  return 0;
}

inline int TrainAutoStcCommand(const RunConfig &cfg, const std::string &manifest_path,
                               const std::string &ste_path, const std::string &out) {
  EchoConfig(cfg, {"autostc"});
  SteBundle ste = ReadSteBundle(ste_path);
  const AutoStcConfig ac = cfg.AutoStcFor(ste.model.config().embedding_dim);
  const DatasetManifest m = ReadManifest(manifest_path);
  const auto train = MakeReconstructionSet(ste.model, LoadClips(m, Split::kTrain, false));
  const auto test_clips = LoadClips(m, Split::kTest, false);
  const auto test = test_clips.empty() ? std::vector<ReconstructionExample>{}
                                       : MakeReconstructionSet(ste.model, test_clips);
  if (train.empty()) Fail(ErrorKind::kEmptyInput, "no training clips in " + manifest_path);
  const long steps = cfg.GetInt("autostc.steps"), log_every = std::max(1L, cfg.GetInt("autostc.log_every"));
  Log("seed " + std::to_string(ac.seed) + ", " + std::to_string(train.size()) + " train / " +
      std::to_string(test.size()) + " test clips, " + std::to_string(steps) + " steps");
  AutoStc model(ac);
  AutoStcTrainer trainer(model);
  const double floor = cfg.GetDouble("autostc.cosine_floor");
  if (floor < 1.0) trainer.SetCosineSchedule(steps, floor);
  nlohmann::json log = nlohmann::json::array();
  double running = 0.0;
  for (long s = 1; s <= steps; ++s) {
    running += trainer.StepRandom(train).l_decoder;
    if (s % log_every == 0 || s == steps) {
      const auto eval = EvaluateReconstruction(model, test.empty() ? train : test);
      const long span = s % log_every == 0 ? log_every : s % log_every;
      char buf[160];
      std::snprintf(buf, sizeof buf, "step %6ld  train_l_decoder %.5f  %s l_decoder %.5f total %.5f", s,
                    running / double(span), test.empty() ? "train" : "test", eval.l_decoder, eval.total);
      std::cout << buf << std::endl;
      log.push_back({{"step", s}, {"train_l_decoder", running / double(span)},
                     {"eval_l_decoder", eval.l_decoder}, {"eval_total", eval.total}});
      running = 0.0;
    }
  }
  nn::WriteCheckpoint(out, model.ToCheckpoint());
  WriteText(out + ".json", nlohmann::json{{"log", log}, {"config", cfg.Dump("autostc")}}.dump(2));
  std::cout << "wrote " << out << "\n";
  return 0;
}

inline std::map<DatasetId, RegisteredDataset> BuildRegistry(const RunConfig &cfg, const std::string &ste_path) {
  SteBundle ste = ReadSteBundle(ste_path);
  std::map<DatasetId, RegisteredDataset> registry;
  const std::pair<const char *, DatasetId> keys[] = {
      {"search.manifest_vc", DatasetId::kVc}, {"search.manifest_vs", DatasetId::kVs}, {"search.manifest_md", DatasetId::kMd}};
  for (const auto &[key, id] : keys) {
    const std::string path = cfg.Get(key);
    if (path.empty()) continue;
    const DatasetManifest m = ReadManifest(path);
    RegisteredDataset ds;
    ds.train = MakeReconstructionSet(ste.model, LoadClips(m, Split::kTrain, false));
    ds.test = MakeReconstructionSet(ste.model, LoadClips(m, Split::kTest, false));
    Log("registered " + std::string(DatasetName(id)) + ": " + std::to_string(ds.train.size()) + " train / " +
        std::to_string(ds.test.size()) + " test clips");
    registry.emplace(id, std::move(ds));
  }
  return registry;
}

inline int SearchPathsCommand(const RunConfig &cfg, const std::string &oracle_spec, const std::string &ste_path,
                              const std::string &out) {
  EchoConfig(cfg, {"search"});
  const DatasetId target = ParseDatasetOrFail(cfg.Get("search.target"));
  std::unique_ptr<TrainerOracle> oracle;
  if (oracle_spec.rfind("mock:", 0) == 0) {
    oracle = std::make_unique<ScriptedOracle>(ReadOracleScript(oracle_spec.substr(5)));
  } else if (oracle_spec == "real") {
    if (ste_path.empty()) Fail(ErrorKind::kConfig, "--oracle real needs --ste");
    auto registry = BuildRegistry(cfg, ste_path);
    if (registry.empty()) Fail(ErrorKind::kRegistry, "no dataset manifests configured (search.manifest_*)");
    std::vector<DatasetId> order;
    for (const auto &name : cfg.GetList("search.datasets")) {
      const DatasetId d = ParseDatasetOrFail(name);
      if (registry.count(d)) order.push_back(d);
    }
    const int dim = ReadSteBundle(ste_path).model.config().embedding_dim;
    oracle = std::make_unique<AutoStcOracle>(cfg.AutoStcFor(dim), std::move(registry), cfg.Plateau(), order);
  } else {
    Fail(ErrorKind::kConfig, "--oracle must be real or mock:FILE");
  }
  std::unique_ptr<std::ofstream> run_log;
  if (!out.empty()) {
    fs::create_directories(out);
    run_log = std::make_unique<std::ofstream>((fs::path(out) / "run_log.jsonl").string());
  }
  const auto paths = ExplorePaths(*oracle, target, [&](const TrainingPath &prefix) {
    const std::string line = PathNodeRecord(prefix).dump();
    std::cerr << line << "\n";
    if (run_log) *run_log << line << "\n" << std::flush;
  });
  const std::string table = RenderPathTable(paths, target, oracle->Datasets());
  std::cout << table;
  const TrainingPath best = SelectOptimumPath(paths);
  std::printf("optimum %s  loss %.4f  iterations %ld\n", JoinPath([&] {
                std::vector<DatasetId> ids;
                for (const auto &n : best.nodes) ids.push_back(n.dataset);
                return ids;
              }()).c_str(),
              best.TargetLoss(), best.CumulativeIterations());
  if (!out.empty()) {
    WriteText((fs::path(out) / "table.txt").string(), table);
    WriteText((fs::path(out) / "optimum.json").string(),
              nlohmann::json{{"path", best.Names()},
                             {"target_loss", best.TargetLoss()},
                             {"cumulative_iterations", best.CumulativeIterations()},
                             {"config", cfg.Dump("search")}}
                  .dump(2));
  }
  return 0;
}

inline int ConvertCommand(const RunConfig &cfg, ConversionRequest req, const std::string &out,
                          const std::string &mel_out) {
  EchoConfig(cfg, {"convert"});
  const MelSpectrogram mel = RunConversion(req);
  if (!mel_out.empty()) WriteMel(mel_out, mel);
  SteBundle ste = ReadSteBundle(req.ste_checkpoint);
  const auto p = ClipProbabilities(ste.model, mel);
  std::cout << "technique posterior of the converted clip:";
  for (int k = 0; k < kNumTechniques; ++k) std::printf(" %s=%.3f", std::string(kTechniqueNames[k]).c_str(), p[k]);
  std::cout << "\n";
  if (!out.empty()) {
    const AudioClip audio = MelToAudioPreview(mel, int(cfg.GetInt("convert.preview_iterations")),
                                              cfg.GetU64("convert.seed"));
    WriteClip(out, audio);
    std::cout << "wrote " << out << "\n";
  }
  return 0;
}

inline StudyHttpServer *g_server = nullptr;

inline int ServeStudyCommand(const RunConfig &cfg, const std::string &stimuli, const std::string &log_path,
                             const std::string &static_dir) {
  EchoConfig(cfg, {"study"});
  StudyService service(cfg.Study(), ReadCatalogDir(stimuli, cfg.Get("study.salt")), log_path,
                       cfg.GetU64("study.seed"));
  StudyHttpServer server(service, static_dir);
  const std::string host = cfg.Get("study.host");
  const int port = server.Bind(host, int(cfg.GetInt("study.port")));
  g_server = &server;
  std::signal(SIGINT, [](int) { if (g_server) g_server->Stop(); });
  std::signal(SIGTERM, [](int) { if (g_server) g_server->Stop(); });
  std::cout << "listening on http://" << host << ":" << port << std::endl;
  server.Listen();
  g_server = nullptr;
  return 0;
}

inline int AnalyzeCommand(const RunConfig &cfg, const std::string &responses, const std::string &out) {
  const ResponseSet rs = ReadResponseLog(responses);
  const AnalysisReport rep = Analyze(rs, cfg.GetDouble("analyze.confidence"));
  std::cout << RenderReport(rep);
  if (!out.empty()) {
    WriteAnalysis(rep, out);
    WriteText((fs::path(out) / "run_config.ini").string(), ConfigEcho(cfg, {"analyze"}));
  }
  return 0;
}

// ---------------------------------------------------------------------------

/// Parses argv and runs one subcommand. 0 on success, 1 on a domain error,
/// 2 on a usage error.
inline int Main(int argc, const char *const *argv) {
  CLI::App app{
      "Singing technique conversion workbench.\n"
      "Usage: stc [--config FILE] [--set section.key=value ...] <subcommand> [options]\n"
      "Flags override config file values; see --print-config for every key."};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  std::vector<std::string> sets;
  bool print_config = false;
  app.add_option("--config", config_path, "key=value run configuration with [sections]");
  app.add_option("--set", sets, "override one key, e.g. --set ste.max_epochs=10")->take_all();
  app.add_flag("--print-config", print_config, "print the effective configuration and exit");
  FlagBindings flags;
  std::function<int(RunConfig &)> run;

  auto *synth = app.add_subcommand("make-synth", "write a labelled synthetic corpus and manifest\n"
                                                 "e.g. stc make-synth --out data/ --per-class 20 --singers 4 --seed 7");
  std::string synth_out;
  synth->add_option("--out", synth_out, "output directory")->required();
  flags.Bind(synth, "--per-class", "synth.per_class", "clips per technique");
  flags.Bind(synth, "--singers", "synth.singers", "number of singers");
  flags.Bind(synth, "--seed", "synth.seed", "seed");
  synth->callback([&] { run = [&](RunConfig &c) { return MakeSynth(c, synth_out); }; });

  auto *prep = app.add_subcommand("prep", "balance, split and featurize a manifest");
  std::string prep_manifest, prep_out;
  prep->add_option("--manifest", prep_manifest, "input manifest CSV")->required();
  prep->add_option("--out", prep_out, "output directory")->required();
  flags.Bind(prep, "--balance", "prep.balance", "true|false");
  flags.Bind(prep, "--split-ratio", "prep.split_ratio", "train fraction");
  flags.Bind(prep, "--resplit", "prep.resplit", "true|false");
  flags.Bind(prep, "--seed", "prep.seed", "split seed");
  prep->callback([&] { run = [&](RunConfig &c) { return Prep(c, prep_manifest, prep_out); }; });

  auto *tste = app.add_subcommand("train-ste", "train the technique encoder; writes FILE and FILE.json");
  std::string tste_manifest, tste_out;
  bool shuffle_labels = false;
  tste->add_option("--manifest", tste_manifest, "labelled manifest with train/test split")->required();
  tste->add_option("--out", tste_out, "checkpoint path")->required();
  tste->add_flag("--shuffle-labels", shuffle_labels, "permute training labels (control run)");
  flags.Bind(tste, "--epochs", "ste.max_epochs", "epoch budget");
  flags.Bind(tste, "--seed", "ste.seed", "seed");
  flags.Bind(tste, "--lr", "ste.learning_rate", "learning rate");
  tste->callback([&] {
    run = [&](RunConfig &c) { return TrainSteCommand(c, tste_manifest, tste_out, shuffle_labels); };
  });

  auto *este = app.add_subcommand("eval-ste", "clip accuracy and confusion matrix");
  std::string este_manifest, este_model, este_split = "test";
  este->add_option("--manifest", este_manifest, "labelled manifest (default: the one recorded at training)");
  este->add_option("--ckpt,--model", este_model, "STE checkpoint")->required();
  este->add_option("--split", este_split, "train|test|all")->capture_default_str();
  este->callback([&] { run = [&](RunConfig &) { return EvalSteCommand(este_manifest, este_model, este_split); }; });

  auto *tae = app.add_subcommand("train-autostc", "train the conditioned autoencoder; writes FILE and FILE.json");
  std::string tae_manifest, tae_ste, tae_out;
  tae->add_option("--manifest", tae_manifest, "manifest (labels optional)")->required();
  tae->add_option("--ste", tae_ste, "trained STE checkpoint")->required();
  tae->add_option("--out", tae_out, "checkpoint path")->required();
  flags.Bind(tae, "--steps", "autostc.steps", "training steps");
  flags.Bind(tae, "--seed", "autostc.seed", "seed");
  flags.Bind(tae, "--lr", "autostc.learning_rate", "learning rate");
  tae->callback([&] { run = [&](RunConfig &c) { return TrainAutoStcCommand(c, tae_manifest, tae_ste, tae_out); }; });

  auto *search = app.add_subcommand("search-paths", "explore sequential training orders until plateau");
  std::string oracle_spec, search_ste, search_out;
  search->add_option("--oracle", oracle_spec, "real | mock:SCRIPT.json")->required();
  search->add_option("--ste", search_ste, "STE checkpoint (real oracle)");
  search->add_option("--out", search_out, "directory for run_log.jsonl, table.txt, optimum.json");
  flags.Bind(search, "--target", "search.target", "Vc|Vs|Md");
  flags.Bind(search, "--manifest-vc", "search.manifest_vc", "Vc manifest");
  flags.Bind(search, "--manifest-vs", "search.manifest_vs", "Vs manifest");
  flags.Bind(search, "--manifest-md", "search.manifest_md", "Md manifest");
  flags.Bind(search, "--eval-every", "search.eval_every", "steps between evaluations");
  search->callback([&] {
    run = [&](RunConfig &c) { return SearchPathsCommand(c, oracle_spec, search_ste, search_out); };
  });

  auto *conv = app.add_subcommand("convert", "convert a clip towards a reference clip or a technique");
  ConversionRequest req;
  std::string conv_ref, conv_tech, conv_out, conv_mel;
  conv->add_option("--source", req.source_clip, "source WAV")->required();
  auto *ref_opt = conv->add_option("--target-ref", conv_ref, "reference WAV (zero-shot target)");
  auto *tech_opt = conv->add_option("--target-technique", conv_tech, "technique label target");
  ref_opt->excludes(tech_opt);
  conv->add_option("--ste", req.ste_checkpoint, "STE checkpoint")->required();
  conv->add_option("--autostc", req.autostc_checkpoint, "AutoSTC checkpoint")->required();
  conv->add_option("--out-wav,--out", conv_out, "preview WAV");
  conv->add_option("--out-mel,--mel-out", conv_mel, "converted log-mel (MEL1)");
  flags.Bind(conv, "--preview-iterations", "convert.preview_iterations", "phase reconstruction iterations");
  conv->callback([&] {
    run = [&](RunConfig &c) {
      if (!conv_ref.empty()) req.target_reference_clip = conv_ref;
      if (!conv_tech.empty()) {
        const auto t = ParseTechnique(conv_tech);
        if (!t) Fail(ErrorKind::kInput, "unknown technique " + conv_tech);
        req.target_technique = *t;
      }
      return ConvertCommand(c, req, conv_out, conv_mel);
    };
  });

  auto *serve = app.add_subcommand("serve-study", "serve the listening study");
  std::string stimuli, log_path, static_dir = STC_DEFAULT_STATIC_DIR;
  serve->add_option("--stimuli", stimuli, "directory holding stimuli.csv and audio")->required();
  serve->add_option("--log", log_path, "append-only response log")->required();
  serve->add_option("--static", static_dir, "participant UI bundle mounted at /")->capture_default_str();
  flags.Bind(serve, "--port", "study.port", "port (0 picks a free one)");
  flags.Bind(serve, "--host", "study.host", "bind address");
  flags.Bind(serve, "--seed", "study.seed", "allocation seed");
  serve->callback([&] { run = [&](RunConfig &c) { return ServeStudyCommand(c, stimuli, log_path, static_dir); }; });

  auto *analyze = app.add_subcommand("analyze", "similarity, MOS and correlation summaries of a response log");
  std::string responses, analyze_out;
  analyze->add_option("--responses", responses, "response log (JSONL)")->required();
  analyze->add_option("--out", analyze_out, "directory for summary.csv, bars.csv, report.txt");
  flags.Bind(analyze, "--confidence", "analyze.confidence", "MOS confidence level");
  analyze->callback([&] { run = [&](RunConfig &c) { return AnalyzeCommand(c, responses, analyze_out); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return 2;
  }

  try {
    RunConfig cfg = RunConfig::Defaults();
    if (!config_path.empty()) cfg.LoadFile(config_path);
    for (const auto &s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) Fail(ErrorKind::kConfig, "--set expects section.key=value, got " + s);
      cfg.Set(s.substr(0, eq), s.substr(eq + 1));
    }
    flags.Apply(cfg);
    if (print_config) {
      std::cout << cfg.Describe();
      return 0;
    }
    return run(cfg);
  } catch (const Error &e) {
    std::cerr << "stc: " << e.what() << std::endl;
    return 1;
  } catch (const std::exception &e) {
    std::cerr << "stc: " << e.what() << std::endl;
    return 1;
  }
}

}  // namespace cli
}  // namespace stc

#endif  // STC_CLI_APP_HPP_
