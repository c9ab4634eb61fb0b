// stc/cli/run_config.hpp

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

#ifndef STC_CLI_RUN_CONFIG_HPP_
#define STC_CLI_RUN_CONFIG_HPP_

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "stc/autostc/autostc_model.hpp"
#include "stc/scheduler/plateau.hpp"
#include "stc/ste/ste_model.hpp"
#include "stc/study/allocation.hpp"

namespace stc {

/// Sectioned key=value run configuration.
///
///   # comment
///   [ste]
///   max_epochs = 50
///
/// Keys are addressed as `section.key`. Every key has a default and unknown
/// keys are rejected.
class RunConfig {
 public:
  struct Entry {
    std::string value;
    std::string doc;
  };

  static RunConfig Defaults() {
    RunConfig c;
    const SteConfig ste;
    const AutoStcConfig ae;
    const PlateauOptions plateau;
    const StudyConfig study;
    auto list = [](const auto &xs) {
      std::string s;
      for (const auto &x : xs) s += (s.empty() ? "" : ",") + std::to_string(x);
      return s;
    };
    auto num = [](double v) {
      std::ostringstream os;
      os << v;
      return os.str();
    };
    c.Add("synth.per_class", "20", "clips per technique");
    c.Add("synth.singers", "4", "synthetic singers (alternating F/M)");
    c.Add("synth.seed", "7", "corpus seed");

    c.Add("prep.balance", "true", "keep min-class-count clips of every technique");
    c.Add("prep.split_ratio", "0.8", "train fraction per technique");
    c.Add("prep.resplit", "false", "reassign train/test even if the manifest has a split");
    c.Add("prep.seed", "7", "split seed");

    c.Add("ste.conv_channels", list(ste.conv_channels), "four conv block widths");
    c.Add("ste.dense_dims", list(ste.dense_dims), "two dense widths");
    c.Add("ste.blstm_hidden", std::to_string(ste.blstm_hidden), "BLSTM hidden size per direction");
    c.Add("ste.embedding_dim", std::to_string(ste.embedding_dim), "technique embedding length");
    c.Add("ste.learning_rate", num(ste.learning_rate), "Adam learning rate");
    c.Add("ste.batch_size", std::to_string(ste.batch_size), "chunks per batch");
    c.Add("ste.max_epochs", std::to_string(ste.max_epochs), "epoch budget");
    c.Add("ste.seed", std::to_string(ste.seed), "init and shuffle seed");
    c.Add("ste.stop_at_accuracy", "2", "stop once test accuracy reaches this (2 = never)");

    c.Add("autostc.time_downsample", std::to_string(ae.time_downsample), "bottleneck downsampling factor");
    c.Add("autostc.code_dim", std::to_string(ae.code_dim), "bottleneck features per code");
    c.Add("autostc.mu", num(ae.mu), "postnet loss weight");
    c.Add("autostc.lambda", num(ae.lambda), "latent loss weight");
    c.Add("autostc.use_latent_loss", ae.use_latent_loss ? "true" : "false", "include the latent loss term");
    c.Add("autostc.recon_norm", "L1", "L1 or L2 reconstruction norm");
    c.Add("autostc.learning_rate", num(ae.learning_rate), "Adam learning rate");
    c.Add("autostc.seed", std::to_string(ae.seed), "init and crop seed");
    c.Add("autostc.kernel", std::to_string(ae.kernel), "conv kernel width");
    c.Add("autostc.encoder_channels", std::to_string(ae.encoder_channels), "encoder conv width");
    c.Add("autostc.decoder_lstm1", std::to_string(ae.decoder_lstm1), "first decoder LSTM width");
    c.Add("autostc.decoder_channels", std::to_string(ae.decoder_channels), "decoder conv width");
    c.Add("autostc.decoder_lstm2", std::to_string(ae.decoder_lstm2), "second decoder LSTM width");
    c.Add("autostc.postnet_channels", std::to_string(ae.postnet_channels), "postnet conv width");
    c.Add("autostc.batch_size", std::to_string(ae.batch_size), "crops per step");
    c.Add("autostc.crop_frames", std::to_string(ae.crop_frames), "crop length in frames");
    c.Add("autostc.steps", "2000", "train-autostc step budget");
    c.Add("autostc.cosine_floor", "1", "cosine lr floor as a fraction of learning_rate (1 = constant lr)");
    c.Add("autostc.log_every", "100", "steps between progress lines");

    c.Add("search.target", "Vs", "optimised dataset (Vc, Vs, Md)");
    c.Add("search.datasets", "Vc,Vs,Md", "exploration order");
    c.Add("search.patience", std::to_string(plateau.patience), "non-improving evaluations before plateau");
    c.Add("search.eval_every", std::to_string(plateau.eval_every), "steps between evaluations");
    c.Add("search.min_improvement", num(plateau.min_improvement), "smallest loss drop that counts");
    c.Add("search.max_steps", std::to_string(plateau.max_steps), "per-segment step cap");
    c.Add("search.manifest_vc", "", "manifest for Vc (real oracle)");
    c.Add("search.manifest_vs", "", "manifest for Vs (real oracle)");
    c.Add("search.manifest_md", "", "manifest for Md (real oracle)");

    c.Add("convert.preview_iterations", "60", "phase reconstruction iterations");
    c.Add("convert.seed", "0", "initial phase seed");

    c.Add("study.per_model_examples", std::to_string(study.per_model_examples), "tasks per model per type");
    c.Add("study.models", "Vs1,Vs2,M1", "model tags under study");
    c.Add("study.tasks_per_type", std::to_string(study.tasks_per_type), "naturalness (and similarity) tasks");
    c.Add("study.unconverted_clips", std::to_string(study.unconverted_clips), "unconverted naturalness tasks");
    c.Add("study.candidate_count", std::to_string(study.candidate_count), "similarity candidates");
    c.Add("study.seed", "0", "allocation seed");
    c.Add("study.salt", "stc", "audio id salt");
    c.Add("study.host", "127.0.0.1", "bind address");
    c.Add("study.port", "8080", "bind port");

    c.Add("analyze.confidence", "0.95", "MOS confidence level");
    return c;
  }

  bool Has(const std::string &key) const { return entries_.count(key) > 0; }

  void Set(const std::string &key, const std::string &value) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) Fail(ErrorKind::kConfig, "unknown config key " + key);
    it->second.value = value;
  }

  void LoadText(const std::string &text, const std::string &label) {
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const std::string where = label + ":" + std::to_string(lineno);
      line = Trim(line.substr(0, line.find('#')));
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') Fail(ErrorKind::kConfig, where + ": malformed section header");
        section = Trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) Fail(ErrorKind::kConfig, where + ": expected key = value");
      const std::string key = Trim(line.substr(0, eq));
      if (section.empty()) Fail(ErrorKind::kConfig, where + ": key outside a section");
      const std::string full = section + "." + key;
      if (!Has(full)) Fail(ErrorKind::kConfig, where + ": unknown config key " + full);
      Set(full, Trim(line.substr(eq + 1)));
    }
  }

  void LoadFile(const std::string &path) {
    std::ifstream is(path);
    if (!is) Fail(ErrorKind::kNotFound, "config file not found: " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    LoadText(ss.str(), path);
  }

  const std::string &Get(const std::string &key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) Fail(ErrorKind::kConfig, "unknown config key " + key);
    return it->second.value;
  }

  long GetInt(const std::string &key) const { return ParseNumber<long>(key); }
  std::uint64_t GetU64(const std::string &key) const { return ParseNumber<std::uint64_t>(key); }
  double GetDouble(const std::string &key) const { return ParseNumber<double>(key); }

  bool GetBool(const std::string &key) const {
    const std::string &v = Get(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    Fail(ErrorKind::kConfig, key + ": expected a boolean, got " + v);
  }

  std::vector<std::string> GetList(const std::string &key) const {
    std::vector<std::string> out;
    std::istringstream is(Get(key));
    for (std::string item; std::getline(is, item, ',');)
      if (!Trim(item).empty()) out.push_back(Trim(item));
    return out;
  }

  std::vector<int> GetIntList(const std::string &key) const {
    std::vector<int> out;
    for (const auto &s : GetList(key)) {
      int v = 0;
      const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
      if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        Fail(ErrorKind::kConfig, key + ": expected integers, got " + Get(key));
      out.push_back(v);
    }
    return out;
  }

  /// Effective configuration in the same format it is read from.
  std::string Dump(const std::string &only_section = "") const {
    std::ostringstream os;
    std::string section;
    for (const auto &[key, e] : entries_) {
      const std::string sec = key.substr(0, key.find('.'));
      if (!only_section.empty() && sec != only_section) continue;
      if (sec != section) {
        os << (section.empty() ? "" : "\n") << "[" << sec << "]\n";
        section = sec;
      }
      os << key.substr(key.find('.') + 1) << " = " << e.value << "\n";
    }
    return os.str();
  }

  /// Documented listing for --help-config.
  std::string Describe() const {
    std::ostringstream os;
    for (const auto &[key, e] : entries_) os << key << " = " << e.value << "    # " << e.doc << "\n";
    return os.str();
  }

  SteConfig Ste() const {
    SteConfig c;
    const auto conv = GetIntList("ste.conv_channels");
    const auto dense = GetIntList("ste.dense_dims");
    if (conv.size() != 4) Fail(ErrorKind::kConfig, "ste.conv_channels needs 4 values");
    if (dense.size() != 2) Fail(ErrorKind::kConfig, "ste.dense_dims needs 2 values");
    std::copy(conv.begin(), conv.end(), c.conv_channels.begin());
    std::copy(dense.begin(), dense.end(), c.dense_dims.begin());
    c.blstm_hidden = int(GetInt("ste.blstm_hidden"));
    c.embedding_dim = int(GetInt("ste.embedding_dim"));
    c.learning_rate = GetDouble("ste.learning_rate");
    c.batch_size = int(GetInt("ste.batch_size"));
    c.max_epochs = int(GetInt("ste.max_epochs"));
    c.seed = GetU64("ste.seed");
    c.Validate();
    return c;
  }

  AutoStcConfig AutoStcFor(int embedding_dim) const {
    AutoStcConfig c;
    c.time_downsample = int(GetInt("autostc.time_downsample"));
    c.code_dim = int(GetInt("autostc.code_dim"));
    c.mu = GetDouble("autostc.mu");
    c.lambda = GetDouble("autostc.lambda");
    c.use_latent_loss = GetBool("autostc.use_latent_loss");
    const std::string norm = Get("autostc.recon_norm");
    if (norm != "L1" && norm != "L2") Fail(ErrorKind::kConfig, "autostc.recon_norm must be L1 or L2");
    c.recon_norm = norm == "L1" ? ReconNorm::kL1 : ReconNorm::kL2;
    c.embedding_dim = embedding_dim;
    c.learning_rate = GetDouble("autostc.learning_rate");
    c.seed = GetU64("autostc.seed");
    c.kernel = int(GetInt("autostc.kernel"));
    c.encoder_channels = int(GetInt("autostc.encoder_channels"));
    c.decoder_lstm1 = int(GetInt("autostc.decoder_lstm1"));
    c.decoder_channels = int(GetInt("autostc.decoder_channels"));
    c.decoder_lstm2 = int(GetInt("autostc.decoder_lstm2"));
    c.postnet_channels = int(GetInt("autostc.postnet_channels"));
    c.batch_size = int(GetInt("autostc.batch_size"));
    c.crop_frames = int(GetInt("autostc.crop_frames"));
    c.Validate();
    return c;
  }

  PlateauOptions Plateau() const {
    PlateauOptions p;
    p.patience = int(GetInt("search.patience"));
    p.eval_every = GetInt("search.eval_every");
    p.min_improvement = GetDouble("search.min_improvement");
    p.max_steps = GetInt("search.max_steps");
    p.Validate();
    return p;
  }

  StudyConfig Study() const {
    StudyConfig s;
    s.per_model_examples = int(GetInt("study.per_model_examples"));
    s.models.clear();
    for (const auto &m : GetList("study.models")) {
      const auto tag = ParseModel(m);
      if (!tag) Fail(ErrorKind::kConfig, "study.models: unknown model " + m);
      s.models.push_back(*tag);
    }
    s.tasks_per_type = int(GetInt("study.tasks_per_type"));
    s.unconverted_clips = int(GetInt("study.unconverted_clips"));
    s.candidate_count = int(GetInt("study.candidate_count"));
    s.Validate();
    return s;
  }

 private:
  void Add(const std::string &key, const std::string &value, const std::string &doc) {
    entries_[key] = {value, doc};
  }

  static std::string Trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  }

  template <typename T>
  T ParseNumber(const std::string &key) const {
    const std::string &v = Get(key);
    T out{};
    const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size())
      Fail(ErrorKind::kConfig, key + ": expected a number, got '" + v + "'");
    return out;
  }

  std::map<std::string, Entry> entries_;
};

}  // namespace stc

#endif  // STC_CLI_RUN_CONFIG_HPP_
