// stc/data/manifest.hpp

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

#ifndef STC_DATA_MANIFEST_HPP_
#define STC_DATA_MANIFEST_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "stc/base/error.hpp"

namespace stc {

inline constexpr int kNumTechniques = 6;

enum class Technique { kBelt, kStraight, kVibrato, kLipTrill, kVocalFry, kBreathy };

inline constexpr std::array<std::string_view, kNumTechniques> kTechniqueNames = {
    "belt", "straight", "vibrato", "lip_trill", "vocal_fry", "breathy"};

inline std::string_view TechniqueName(Technique t) { return kTechniqueNames[int(t)]; }

inline std::optional<Technique> ParseTechnique(std::string_view s) {
  for (int i = 0; i < kNumTechniques; ++i)
    if (kTechniqueNames[i] == s) return Technique(i);
  return std::nullopt;
}

enum class DatasetId { kVc, kVs, kMd, kSynth };

inline std::string_view DatasetName(DatasetId d) {
  switch (d) {
    case DatasetId::kVc: return "Vc";
    case DatasetId::kVs: return "Vs";
    case DatasetId::kMd: return "Md";
    case DatasetId::kSynth: return "Synth";
  }
  return "?";
}

inline std::optional<DatasetId> ParseDataset(std::string_view s) {
  for (auto d : {DatasetId::kVc, DatasetId::kVs, DatasetId::kMd, DatasetId::kSynth})
    if (DatasetName(d) == s) return d;
  return std::nullopt;
}

enum class Gender { kF, kM };
enum class Split { kTrain, kTest };

inline std::string_view GenderName(Gender g) { return g == Gender::kF ? "F" : "M"; }
inline std::string_view SplitName(Split s) { return s == Split::kTrain ? "train" : "test"; }

struct ManifestEntry {
  std::string clip_path;
  DatasetId dataset_id = DatasetId::kSynth;
  std::string singer_id;
  Gender gender = Gender::kF;
  std::optional<Technique> technique;
  Split split = Split::kTrain;
};

struct DatasetManifest {
  std::string name;
  std::vector<ManifestEntry> entries;
  // Directory relative clip paths are resolved against; not serialized.
  std::string base_dir;

  std::string ResolvePath(const ManifestEntry &e) const {
    std::filesystem::path p(e.clip_path);
    if (p.is_absolute() || base_dir.empty()) return p.string();
    return (std::filesystem::path(base_dir) / p).string();
  }

  DatasetManifest Filter(Split split) const {
    DatasetManifest out{name, {}, base_dir};
    for (const auto &e : entries)
      if (e.split == split) out.entries.push_back(e);
    return out;
  }
};

/// Checks the per-entry and cross-entry invariants. Throws on violation.
inline void ValidateManifest(const DatasetManifest &m) {
  std::set<std::string> seen;
  for (const auto &e : m.entries) {
    if (!seen.insert(e.clip_path).second)
      Fail(ErrorKind::kValidation, "duplicate clip_path " + e.clip_path);
    if ((e.dataset_id == DatasetId::kVs || e.dataset_id == DatasetId::kSynth) && !e.technique)
      Fail(ErrorKind::kLabelling, "missing technique for " + e.clip_path);
  }
}

inline const char *kManifestHeader = "clip_path,dataset_id,singer_id,gender,technique,split";

inline std::string ManifestToCsv(const DatasetManifest &m) {
  std::ostringstream os;
  os << kManifestHeader << '\n';
  for (const auto &e : m.entries) {
    os << e.clip_path << ',' << DatasetName(e.dataset_id) << ',' << e.singer_id << ','
       << GenderName(e.gender) << ',' << (e.technique ? TechniqueName(*e.technique) : "")
       << ',' << SplitName(e.split) << '\n';
  }
  return os.str();
}

inline std::vector<std::string> SplitCsvLine(const std::string &line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

inline DatasetManifest ManifestFromCsv(const std::string &text, const std::string &label) {
  DatasetManifest m;
  m.name = label;
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || SplitCsvLine(line) != SplitCsvLine(kManifestHeader))
    Fail(ErrorKind::kDecode, label + ": bad manifest header");
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = SplitCsvLine(line);
    const std::string where = label + ":" + std::to_string(lineno);
    if (f.size() != 6) Fail(ErrorKind::kDecode, where + ": expected 6 fields");
    ManifestEntry e;
    e.clip_path = f[0];
    auto ds = ParseDataset(f[1]);
    if (!ds) Fail(ErrorKind::kDecode, where + ": unknown dataset_id " + f[1]);
    e.dataset_id = *ds;
    e.singer_id = f[2];
    if (f[3] == "F") e.gender = Gender::kF;
    else if (f[3] == "M") e.gender = Gender::kM;
    else Fail(ErrorKind::kDecode, where + ": gender must be F or M");
    if (!f[4].empty()) {
      e.technique = ParseTechnique(f[4]);
      if (!e.technique) Fail(ErrorKind::kDecode, where + ": unknown technique " + f[4]);
    }
    if (f[5] == "train") e.split = Split::kTrain;
    else if (f[5] == "test") e.split = Split::kTest;
    else Fail(ErrorKind::kDecode, where + ": split must be train or test");
    m.entries.push_back(std::move(e));
  }
  ValidateManifest(m);
  return m;
}

inline DatasetManifest ReadManifest(const std::string &path) {
  std::ifstream is(path);
  if (!is) Fail(ErrorKind::kIo, "cannot open manifest " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  DatasetManifest m = ManifestFromCsv(ss.str(), path);
  m.name = std::filesystem::path(path).stem().string();
  m.base_dir = std::filesystem::path(path).parent_path().string();
  return m;
}

inline void WriteManifest(const std::string &path, const DatasetManifest &m) {
  std::ofstream os(path);
  if (!os) Fail(ErrorKind::kIo, "cannot write manifest " + path);
  os << ManifestToCsv(m);
}

/// Keeps min-class-count entries of every technique, chosen as the first k by
/// sorted clip_path. Unlabelled entries are dropped.
inline DatasetManifest BuildBalancedSubset(const DatasetManifest &m) {
  std::array<std::vector<const ManifestEntry *>, kNumTechniques> by_class;
  for (const auto &e : m.entries)
    if (e.technique) by_class[int(*e.technique)].push_back(&e);
  std::size_t k = SIZE_MAX;
  for (int c = 0; c < kNumTechniques; ++c) {
    if (by_class[c].empty())
      Fail(ErrorKind::kImbalance,
           "class " + std::string(kTechniqueNames[c]) + " has no entries");
    k = std::min(k, by_class[c].size());
  }
  std::set<const ManifestEntry *> keep;
  for (auto &cls : by_class) {
    std::sort(cls.begin(), cls.end(),
              [](auto *a, auto *b) { return a->clip_path < b->clip_path; });
    keep.insert(cls.begin(), cls.begin() + std::ptrdiff_t(k));
  }
  DatasetManifest out{m.name, {}, m.base_dir};
  for (const auto &e : m.entries)
    if (keep.count(&e)) out.entries.push_back(e);
  return out;
}

/// Stratified (per technique; unlabelled entries form one stratum) train/test
/// assignment: floor(n * ratio) of each stratum go to train, the rest to test.
inline DatasetManifest SplitTrainTest(const DatasetManifest &m, double ratio,
                                      std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) Fail(ErrorKind::kSplit, "ratio must be in (0, 1)");
  std::map<int, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    const auto &t = m.entries[i].technique;
    strata[t ? int(*t) : -1].push_back(i);
  }
  DatasetManifest out = m;
  std::mt19937_64 rng(seed);
  for (auto &[cls, idx] : strata) {
    const std::string name = cls < 0 ? "unlabelled" : std::string(kTechniqueNames[cls]);
    if (idx.size() < 2) Fail(ErrorKind::kSplit, "class " + name + " has fewer than 2 entries");
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return m.entries[a].clip_path < m.entries[b].clip_path;
    });
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_train = std::size_t(std::floor(double(idx.size()) * ratio + 1e-9));
    for (std::size_t j = 0; j < idx.size(); ++j)
      out.entries[idx[j]].split = j < n_train ? Split::kTrain : Split::kTest;
  }
  return out;
}

}  // namespace stc

#endif  // STC_DATA_MANIFEST_HPP_
