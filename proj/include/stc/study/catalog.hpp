// stc/study/catalog.hpp

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

#ifndef STC_STUDY_CATALOG_HPP_
#define STC_STUDY_CATALOG_HPP_

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "stc/base/error.hpp"
#include "stc/data/manifest.hpp"
#include "stc/eval/responses.hpp"

namespace stc {

/// `converted` clips are model outputs, `unconverted` clips are resynthesised
/// originals, `candidate` clips are labelled recordings used as the six
/// similarity choices.
enum class StimulusRole { kConverted, kUnconverted, kCandidate };

inline std::string_view StimulusRoleName(StimulusRole r) {
  switch (r) {
    case StimulusRole::kConverted: return "converted";
    case StimulusRole::kUnconverted: return "unconverted";
    case StimulusRole::kCandidate: return "candidate";
  }
  return "?";
}

struct Stimulus {
  std::string clip_id;
  std::string path;
  StimulusRole role = StimulusRole::kConverted;
  ModelTag model = ModelTag::kUnconverted;
  Split subset = Split::kTrain;
  Gender gender = Gender::kF;
  std::string singer_id;
  std::optional<Technique> source_technique;
  std::optional<Technique> target_technique;
  // Candidates only.
  std::optional<Technique> technique;

  ConditionKey Conditions() const {
    ConditionKey c{model, subset, gender, std::nullopt, std::nullopt};
    if (role == StimulusRole::kConverted) {
      c.source_technique = source_technique;
      c.target_technique = target_technique;
    }
    return c;
  }
};

inline void ValidateStimulus(const Stimulus &s) {
  const std::string where = "stimulus " + s.clip_id;
  if (s.clip_id.empty()) Fail(ErrorKind::kValidation, "stimulus with empty clip_id");
  if (s.singer_id.empty()) Fail(ErrorKind::kValidation, where + ": empty singer_id");
  switch (s.role) {
    case StimulusRole::kConverted:
      if (s.model == ModelTag::kUnconverted)
        Fail(ErrorKind::kValidation, where + ": converted clip needs a model");
      if (!s.target_technique) Fail(ErrorKind::kValidation, where + ": converted clip needs a target technique");
      break;
    case StimulusRole::kUnconverted:
      if (s.model != ModelTag::kUnconverted)
        Fail(ErrorKind::kValidation, where + ": unconverted clip cannot name a model");
      break;
    case StimulusRole::kCandidate:
      if (!s.technique) Fail(ErrorKind::kValidation, where + ": candidate needs a technique");
      break;
  }
}

/// FNV-1a 64.
inline std::uint64_t Fnv1a64(std::string_view s, std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// Opaque audio id. Clip ids often spell out techniques, so the UI only ever
/// sees a salted hash.
inline std::string OpaqueClipId(const std::string &clip_id, const std::string &salt) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(Fnv1a64(salt + '\x1f' + clip_id)));
  return buf;
}

class StimulusCatalog {
 public:
  StimulusCatalog() = default;
  explicit StimulusCatalog(std::vector<Stimulus> stimuli, std::string salt = "stc")
      : stimuli_(std::move(stimuli)), salt_(std::move(salt)) {
    for (std::size_t i = 0; i < stimuli_.size(); ++i) {
      ValidateStimulus(stimuli_[i]);
      if (!by_id_.emplace(stimuli_[i].clip_id, i).second)
        Fail(ErrorKind::kValidation, "duplicate stimulus " + stimuli_[i].clip_id);
      if (!by_opaque_.emplace(OpaqueClipId(stimuli_[i].clip_id, salt_), i).second)
        Fail(ErrorKind::kValidation, "opaque id collision for " + stimuli_[i].clip_id);
    }
    if (stimuli_.empty()) Fail(ErrorKind::kEmptyInput, "stimulus catalog is empty");
  }

  const std::vector<Stimulus> &stimuli() const { return stimuli_; }
  const std::string &salt() const { return salt_; }

  const Stimulus &Get(const std::string &clip_id) const {
    const auto it = by_id_.find(clip_id);
    if (it == by_id_.end()) Fail(ErrorKind::kNotFound, "unknown clip " + clip_id);
    return stimuli_[it->second];
  }

  const Stimulus *FindOpaque(const std::string &opaque) const {
    const auto it = by_opaque_.find(opaque);
    return it == by_opaque_.end() ? nullptr : &stimuli_[it->second];
  }

  std::string Opaque(const std::string &clip_id) const { return OpaqueClipId(clip_id, salt_); }

 private:
  std::vector<Stimulus> stimuli_;
  std::string salt_ = "stc";
  std::map<std::string, std::size_t> by_id_;
  std::map<std::string, std::size_t> by_opaque_;
};

inline constexpr const char *kCatalogHeader =
    "clip_id,path,role,model,subset,gender,singer_id,source_technique,target_technique,technique";

inline std::string CatalogToCsv(const StimulusCatalog &catalog) {
  std::ostringstream os;
  os << kCatalogHeader << '\n';
  auto tech = [](const std::optional<Technique> &t) { return t ? std::string(TechniqueName(*t)) : ""; };
  for (const auto &s : catalog.stimuli()) {
    os << s.clip_id << ',' << s.path << ',' << StimulusRoleName(s.role) << ','
       << (s.role == StimulusRole::kConverted ? std::string(ModelName(s.model)) : "") << ','
       << SplitName(s.subset) << ',' << GenderName(s.gender) << ',' << s.singer_id << ','
       << tech(s.source_technique) << ',' << tech(s.target_technique) << ',' << tech(s.technique)
       << '\n';
  }
  return os.str();
}

/// Parses a catalog CSV. Relative paths resolve against `base_dir`.
inline StimulusCatalog CatalogFromCsv(const std::string &text, const std::string &base_dir = "",
                                      const std::string &salt = "stc") {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) Fail(ErrorKind::kEmptyInput, "empty stimulus catalog");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCatalogHeader) Fail(ErrorKind::kInput, "unexpected catalog header: " + line);
  std::vector<Stimulus> out;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = SplitCsvLine(line);
    const std::string where = "catalog line " + std::to_string(lineno);
    if (f.size() != 10) Fail(ErrorKind::kInput, where + ": expected 10 fields");
    Stimulus s;
    s.clip_id = f[0];
    s.path = f[1];
    if (!base_dir.empty() && !s.path.empty() && std::filesystem::path(s.path).is_relative())
      s.path = (std::filesystem::path(base_dir) / s.path).string();
    if (f[2] == "converted") s.role = StimulusRole::kConverted;
    else if (f[2] == "unconverted") s.role = StimulusRole::kUnconverted;
    else if (f[2] == "candidate") s.role = StimulusRole::kCandidate;
    else Fail(ErrorKind::kInput, where + ": unknown role " + f[2]);
    if (!f[3].empty()) {
      const auto m = ParseModel(f[3]);
      if (!m) Fail(ErrorKind::kInput, where + ": unknown model " + f[3]);
      s.model = *m;
    }
    if (f[4] != "train" && f[4] != "test") Fail(ErrorKind::kInput, where + ": unknown subset " + f[4]);
    s.subset = f[4] == "train" ? Split::kTrain : Split::kTest;
    if (f[5] != "F" && f[5] != "M") Fail(ErrorKind::kInput, where + ": unknown gender " + f[5]);
    s.gender = f[5] == "F" ? Gender::kF : Gender::kM;
    s.singer_id = f[6];
    auto tech = [&](const std::string &v) -> std::optional<Technique> {
      if (v.empty()) return std::nullopt;
      const auto t = ParseTechnique(v);
      if (!t) Fail(ErrorKind::kInput, where + ": unknown technique " + v);
      return t;
    };
    s.source_technique = tech(f[7]);
    s.target_technique = tech(f[8]);
    s.technique = tech(f[9]);
    out.push_back(std::move(s));
  }
  return StimulusCatalog(std::move(out), salt);
}

inline constexpr const char *kCatalogFile = "stimuli.csv";

/// Loads `DIR/stimuli.csv`.
inline StimulusCatalog ReadCatalogDir(const std::string &dir, const std::string &salt = "stc") {
  const std::string path = (std::filesystem::path(dir) / kCatalogFile).string();
  std::ifstream is(path);
  if (!is) Fail(ErrorKind::kNotFound, "stimulus catalog not found: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return CatalogFromCsv(ss.str(), dir, salt);
}

struct SyntheticCatalogOptions {
  int singers_per_gender_subset = 2;
  // Converted clips per (model, singer).
  int clips_per_model_singer = 3;
  int unconverted_per_singer = 2;
  int medley_singers_per_gender_subset = 2;
};

/// Label-complete catalog without audio: every Vs singer has all six
/// candidates in its partition, Vs1/Vs2 outputs come from those singers and
/// M1 outputs from separate singers.
inline StimulusCatalog MakeSyntheticCatalog(const SyntheticCatalogOptions &opt = {},
                                            const std::string &salt = "stc") {
  std::vector<Stimulus> out;
  int n = 0;
  auto next_id = [&] { return "clip" + std::to_string(n++); };
  for (Gender g : {Gender::kF, Gender::kM}) {
    for (Split sp : {Split::kTrain, Split::kTest}) {
      for (int k = 0; k < opt.singers_per_gender_subset; ++k) {
        const std::string singer = std::string(GenderName(g)) + std::string(SplitName(sp)) + "_vs" + std::to_string(k);
        for (int t = 0; t < kNumTechniques; ++t) {
          Stimulus c;
          c.clip_id = next_id();
          c.role = StimulusRole::kCandidate;
          c.subset = sp;
          c.gender = g;
          c.singer_id = singer;
          c.technique = Technique(t);
          out.push_back(c);
        }
        for (auto m : {ModelTag::kVs1, ModelTag::kVs2}) {
          for (int i = 0; i < opt.clips_per_model_singer; ++i) {
            Stimulus c;
            c.clip_id = next_id();
            c.model = m;
            c.subset = sp;
            c.gender = g;
            c.singer_id = singer;
            c.source_technique = Technique((i + k) % kNumTechniques);
            c.target_technique = Technique((i + k + 1) % kNumTechniques);
            out.push_back(c);
          }
        }
        for (int i = 0; i < opt.unconverted_per_singer; ++i) {
          Stimulus c;
          c.clip_id = next_id();
          c.role = StimulusRole::kUnconverted;
          c.subset = sp;
          c.gender = g;
          c.singer_id = singer;
          c.technique = Technique(i % kNumTechniques);
          out.push_back(c);
        }
      }
      for (int k = 0; k < opt.medley_singers_per_gender_subset; ++k) {
        const std::string singer = std::string(GenderName(g)) + std::string(SplitName(sp)) + "_md" + std::to_string(k);
        for (int i = 0; i < opt.clips_per_model_singer; ++i) {
          Stimulus c;
          c.clip_id = next_id();
          c.model = ModelTag::kM1;
          c.subset = sp;
          c.gender = g;
          c.singer_id = singer;
          c.target_technique = Technique((i + k) % kNumTechniques);
          out.push_back(c);
        }
      }
    }
  }
  return StimulusCatalog(std::move(out), salt);
}

}  // namespace stc

#endif  // STC_STUDY_CATALOG_HPP_
