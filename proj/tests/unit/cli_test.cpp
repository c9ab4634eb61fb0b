// tests/unit/cli_test.cpp

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

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "stc/cli/run_config.hpp"
#include "stc/eval/responses.hpp"
#include "stc/study/service.hpp"
#include "httplib.h"
#include "test_util.hpp"

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

namespace stc {
namespace {

using testing::ExpectErrorKind;
using testing::TempDir;

struct RunResult {
  int exit_code = -1;
  std::string out;  // stdout and stderr interleaved
};

RunResult Stc(const std::string &args) {
  const std::string cmd = std::string(STC_CLI_PATH) + " " + args + " 2>&1";
  RunResult r;
  FILE *p = popen(cmd.c_str(), "r");
  std::array<char, 4096> buf;
  while (std::size_t n = fread(buf.data(), 1, buf.size(), p)) r.out.append(buf.data(), n);
  const int status = pclose(p);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string Slurp(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

const char *kTinyConfig = R"(# desk-sized widths for fast tests
[ste]
conv_channels = 4, 4, 4, 4
dense_dims = 8, 8
blstm_hidden = 4
embedding_dim = 8
max_epochs = 2

[autostc]
encoder_channels = 8
decoder_lstm1 = 8
decoder_channels = 8
decoder_lstm2 = 8
postnet_channels = 8
crop_frames = 32
steps = 4
log_every = 2

[search]
eval_every = 2
patience = 1
max_steps = 4
)";

TEST(RunConfig, DefaultsCoverEveryKeyAndMirrorLibraryDefaults) {
  const RunConfig c = RunConfig::Defaults();
  EXPECT_EQ(c.GetInt("ste.max_epochs"), 50);
  EXPECT_EQ(c.Ste().conv_channels, (std::array<int, 4>{32, 64, 64, 128}));
  EXPECT_EQ(c.AutoStcFor(64).encoder_channels, 512);
  EXPECT_EQ(c.Study().tasks_per_type, 24);
  EXPECT_EQ(c.Plateau().min_improvement, 1e-4);
}

TEST(RunConfig, UnknownKeysAndBadValuesAreRejected) {
  RunConfig c = RunConfig::Defaults();
  ExpectErrorKind([&] { c.LoadText("[ste]\nmax_epoch = 3\n", "cfg"); }, ErrorKind::kConfig, "cfg:2");
  ExpectErrorKind([&] { c.LoadText("max_epochs = 3\n", "cfg"); }, ErrorKind::kConfig, "outside a section");
  ExpectErrorKind([&] { c.LoadText("[ste\n", "cfg"); }, ErrorKind::kConfig);
  ExpectErrorKind([&] { c.Set("nope.key", "1"); }, ErrorKind::kConfig);
  c.Set("ste.max_epochs", "ten");
  ExpectErrorKind([&] { c.GetInt("ste.max_epochs"); }, ErrorKind::kConfig, "ste.max_epochs");
  c.Set("autostc.use_latent_loss", "maybe");
  ExpectErrorKind([&] { c.GetBool("autostc.use_latent_loss"); }, ErrorKind::kConfig);
  c = RunConfig::Defaults();
  c.Set("study.tasks_per_type", "25");
  ExpectErrorKind([&] { c.Study(); }, ErrorKind::kConfig);
}

TEST(RunConfig, DumpRoundTrips) {
  RunConfig c = RunConfig::Defaults();
  c.LoadText("[ste]\nmax_epochs = 7   # short\n[study]\nport = 9000\n", "cfg");
  RunConfig d = RunConfig::Defaults();
  d.LoadText(c.Dump(), "dump");
  EXPECT_EQ(d.Dump(), c.Dump());
  EXPECT_EQ(d.GetInt("ste.max_epochs"), 7);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(Stc("").exit_code, 2);
  EXPECT_EQ(Stc("frobnicate").exit_code, 2);
  EXPECT_EQ(Stc("train-ste --manifest x").exit_code, 2);
  EXPECT_EQ(Stc("--help").exit_code, 0);
  const auto help = Stc("convert --help");
  EXPECT_EQ(help.exit_code, 0);
  EXPECT_NE(help.out.find("--target-technique"), std::string::npos);
}

TEST(Cli, DomainErrorsExitOne) {
  const auto r = Stc("analyze --responses /nonexistent/missing.jsonl");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.out.find("not found"), std::string::npos) << r.out;
}

TEST(Cli, ConfigFileRulesAndFlagPrecedence) {
  TempDir dir;
  std::ofstream(dir / "bad.ini") << "[ste]\nunknown_key = 1\n";
  EXPECT_EQ(Stc("--config " + dir / "bad.ini" + " analyze --responses x").exit_code, 1);
  std::ofstream(dir / "good.ini") << "[synth]\nper_class = 9\nseed = 3\n";
  const auto shown = Stc("--config " + dir / "good.ini" + " --print-config make-synth --out x --seed 5");
  EXPECT_EQ(shown.exit_code, 0);
  EXPECT_NE(shown.out.find("synth.per_class = 9"), std::string::npos);
  EXPECT_NE(shown.out.find("synth.seed = 5"), std::string::npos);
  const auto set = Stc("--set synth.seed=11 --print-config make-synth --out x");
  EXPECT_NE(set.out.find("synth.seed = 11"), std::string::npos);
  EXPECT_EQ(Stc("--set synth.sed=11 make-synth --out x").exit_code, 1);
}

TEST(Cli, MakeSynthIsDeterministic) {
  TempDir a, b;
  const auto r = Stc("make-synth --out " + a.str() + " --per-class 3 --singers 2 --seed 7");
  ASSERT_EQ(r.exit_code, 0) << r.out;
  ASSERT_EQ(Stc("make-synth --out " + b.str() + " --per-class 3 --singers 2 --seed 7").exit_code, 0);
  EXPECT_NE(r.out.find("seed = 7"), std::string::npos);
  EXPECT_EQ(Slurp(a / "manifest.csv"), Slurp(b / "manifest.csv"));
  EXPECT_EQ(Slurp(a / "wav/s1_vibrato_1.wav"), Slurp(b / "wav/s1_vibrato_1.wav"));
  EXPECT_FALSE(Slurp(a / "wav/s1_vibrato_1.wav").empty());
  EXPECT_NE(Slurp(a / "run_config.ini").find("seed = 7"), std::string::npos);
}

TEST(Cli, MockPathSearchReplaysPublishedTable) {
  TempDir dir;
  const auto r = Stc("search-paths --oracle mock:" + std::string(STC_SAMPLES_DIR) +
                     "/published_search_vs.json --target Vs --out " + dir.str());
  ASSERT_EQ(r.exit_code, 0) << r.out;
  EXPECT_NE(r.out.find("| Vc | 0.0653(300k) | Md | 0.0386(150k) | Vs | 0.0268(50k) | *"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("optimum Vc>Md>Vs  loss 0.0268  iterations 500000"), std::string::npos);
  const auto opt = nlohmann::json::parse(Slurp(dir / "optimum.json"));
  EXPECT_EQ(opt["path"], nlohmann::json::array({"Vc", "Md", "Vs"}));
  EXPECT_FALSE(Slurp(dir / "run_log.jsonl").empty());
  EXPECT_EQ(Stc("search-paths --oracle mock:/nonexistent.json").exit_code, 1);
  EXPECT_EQ(Stc("search-paths --oracle psychic").exit_code, 1);
}

TEST(Cli, PipelineSmoke) {
  TempDir dir;
  const std::string cfg = dir / "tiny.ini";
  std::ofstream(cfg) << kTinyConfig;
  const std::string data = dir / "data";
  auto run = [&](const std::string &args) {
    const auto r = Stc("--config " + cfg + " " + args);
    EXPECT_EQ(r.exit_code, 0) << args << "\n" << r.out;
    return r;
  };
  run("make-synth --out " + data + " --per-class 3 --singers 2 --seed 7");
  run("prep --manifest " + data + "/manifest.csv --out " + dir / "prep");
  run("train-ste --manifest " + dir / "prep/manifest.csv" + " --out " + dir / "ste.stck");
  EXPECT_NE(run("eval-ste --manifest " + data + "/manifest.csv --ckpt " + dir / "ste.stck").out.find("accuracy"),
            std::string::npos);
  EXPECT_NE(run("eval-ste --ckpt " + dir / "ste.stck" + " --split test").out.find("accuracy"), std::string::npos);
  run("train-autostc --manifest " + data + "/manifest.csv --ste " + dir / "ste.stck" + " --out " + dir / "ae.stck");
  const auto conv = run("convert --source " + data + "/wav/s0_straight_0.wav --target-technique vibrato --ste " +
                        dir / "ste.stck" + " --autostc " + dir / "ae.stck" + " --out-wav " + dir / "conv.wav");
  EXPECT_NE(conv.out.find("vibrato="), std::string::npos);
  EXPECT_GT(Slurp(dir / "conv.wav").size(), 44u);
  run("convert --source " + data + "/wav/s0_straight_0.wav --target-ref " + data + "/wav/s1_belt_1.wav --ste " +
      dir / "ste.stck" + " --autostc " + dir / "ae.stck" + " --out-mel " + dir / "conv.mel");
  EXPECT_EQ(Stc("convert --source " + data + "/wav/s0_straight_0.wav --ste " + dir / "ste.stck" + " --autostc " +
                dir / "ae.stck").exit_code, 1);

  const auto search = run("search-paths --oracle real --ste " + dir / "ste.stck" + " --target Vs --manifest-vc " +
                          data + "/manifest.csv --manifest-vs " + data + "/manifest.csv --out " + dir / "search");
  EXPECT_NE(search.out.find("Loss-Iteration for Vs"), std::string::npos);

  // Simulated participants through the study service, then analysis.
  {
    StudyService svc({}, MakeSyntheticCatalog(), dir / "responses.jsonl", 1);
    for (int p = 0; p < 3; ++p) {
      const std::string pid = "sim" + std::to_string(p);
      for (const auto &t : svc.Session(pid).tasks) {
        if (t.kind == TaskKind::kNaturalness) svc.Record(pid, t.task_id, {{"rating", 1 + (p + 3) % 5}});
        else svc.Record(pid, t.task_id, {{"selections", {p % 6}}});
      }
    }
  }
  const auto an = run("analyze --responses " + dir / "responses.jsonl" + " --out " + dir / "analysis");
  EXPECT_NE(an.out.find("responses: 162"), std::string::npos) << an.out;
  EXPECT_NE(Slurp(dir / "analysis/summary.csv").find("facet,level,n,similarity,mos,ci_halfwidth"), std::string::npos);
}

TEST(Cli, ServeStudyAnswersOverHttp) {
  TempDir dir;
  std::filesystem::create_directories(dir / "stimuli");
  std::ofstream(dir / "stimuli/stimuli.csv") << CatalogToCsv(MakeSyntheticCatalog({}, "demo"));
  int pipefd[2];
  ASSERT_EQ(pipe(pipefd), 0);
  const pid_t pid = fork();
  if (pid == 0) {
    dup2(pipefd[1], STDOUT_FILENO);
    close(pipefd[0]);
    execl(STC_CLI_PATH, "stc", "--set", "study.salt=demo", "serve-study", "--stimuli", (dir / "stimuli").c_str(),
          "--log", (dir / "log.jsonl").c_str(), "--port", "0", static_cast<char *>(nullptr));
    _exit(127);
  }
  close(pipefd[1]);
  std::string line;
  char c;
  while (read(pipefd[0], &c, 1) == 1 && c != '\n') line += c;
  const auto colon = line.rfind(':');
  ASSERT_NE(colon, std::string::npos) << line;
  const int port = std::stoi(line.substr(colon + 1));
  httplib::Client cli("127.0.0.1", port);
  const auto session = cli.Get("/api/session/p1");
  ASSERT_TRUE(session);
  const auto j = nlohmann::json::parse(session->body);
  EXPECT_EQ(j["tasks"].size(), 54u);
  const std::string task = j["tasks"][0]["task_id"];
  const bool nat = j["tasks"][0]["kind"] == "naturalness";
  const nlohmann::json body = nat ? nlohmann::json{{"participant_id", "p1"}, {"task_id", task}, {"rating", 4}}
                                  : nlohmann::json{{"participant_id", "p1"}, {"task_id", task}, {"selections", {2}}};
  EXPECT_EQ(cli.Post("/api/response", body.dump(), "application/json")->status, 200);
  EXPECT_EQ(cli.Get("/")->status, 200);
  kill(pid, SIGTERM);
  int status = 0;
  waitpid(pid, &status, 0);
  close(pipefd[0]);
  EXPECT_TRUE(WIFEXITED(status) && WEXITSTATUS(status) == 0);
  EXPECT_EQ(ReadResponseLog(dir / "log.jsonl").size(), 1u);
}

}  // namespace
}  // namespace stc
