// stc/eval/responses.hpp

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

#ifndef STC_EVAL_RESPONSES_HPP_
#define STC_EVAL_RESPONSES_HPP_

#include <array>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "stc/base/error.hpp"
#include "stc/data/manifest.hpp"

namespace stc {

inline constexpr int kCandidateCount = 6;

enum class ModelTag { kVs1, kVs2, kM1, kUnconverted };
inline constexpr std::array<ModelTag, 4> kModelTags = {ModelTag::kVs1, ModelTag::kVs2, ModelTag::kM1,
                                                       ModelTag::kUnconverted};

inline std::string_view ModelName(ModelTag m) {
  switch (m) {
    case ModelTag::kVs1: return "Vs1";
    case ModelTag::kVs2: return "Vs2";
    case ModelTag::kM1: return "M1";
    case ModelTag::kUnconverted: return "unconverted";
  }
  return "?";
}

inline std::optional<ModelTag> ParseModel(std::string_view s) {
  for (auto m : kModelTags)
    if (ModelName(m) == s) return m;
  return std::nullopt;
}

struct ConditionKey {
  ModelTag model = ModelTag::kVs1;
  Split subset = Split::kTrain;
  Gender gender = Gender::kF;
  std::optional<Technique> source_technique;
  std::optional<Technique> target_technique;

  void Validate() const {
    if (model == ModelTag::kUnconverted && (source_technique || target_technique))
      Fail(ErrorKind::kValidation, "unconverted conditions carry no techniques");
  }
  bool operator==(const ConditionKey &) const = default;
};

struct SimilarityResponse {
  std::string task_id;
  std::array<bool, kCandidateCount> predictions{};
  int correct_index = 0;
  ConditionKey conditions;

  int Selected() const {
    int n = 0;
    for (bool p : predictions) n += p;
    return n;
  }
  void Validate() const {
    if (Selected() < 1) Fail(ErrorKind::kValidation, "task " + task_id + ": no candidate selected");
    if (correct_index < 0 || correct_index >= kCandidateCount)
      Fail(ErrorKind::kValidation, "task " + task_id + ": correct index out of range");
    conditions.Validate();
  }
};

struct NaturalnessResponse {
  std::string task_id;
  int rating = 0;
  ConditionKey conditions;

  void Validate() const {
    if (rating < 1 || rating > 5)
      Fail(ErrorKind::kValidation, "task " + task_id + ": rating must be in [1, 5]");
    conditions.Validate();
  }
};

struct ResponseSet {
  std::vector<SimilarityResponse> similarity;
  std::vector<NaturalnessResponse> naturalness;
  std::size_t size() const { return similarity.size() + naturalness.size(); }
};

inline nlohmann::json ConditionsToJson(const ConditionKey &c) {
  nlohmann::json j = {{"model", ModelName(c.model)},
                      {"subset", SplitName(c.subset)},
                      {"gender", GenderName(c.gender)}};
  if (c.source_technique) j["source_technique"] = TechniqueName(*c.source_technique);
  if (c.target_technique) j["target_technique"] = TechniqueName(*c.target_technique);
  return j;
}

inline ConditionKey ConditionsFromJson(const nlohmann::json &j) {
  ConditionKey c;
  const auto model = ParseModel(j.at("model").get<std::string>());
  if (!model) Fail(ErrorKind::kInput, "unknown model " + j.at("model").dump());
  c.model = *model;
  const std::string subset = j.at("subset").get<std::string>();
  if (subset != "train" && subset != "test") Fail(ErrorKind::kInput, "unknown subset " + subset);
  c.subset = subset == "train" ? Split::kTrain : Split::kTest;
  const std::string gender = j.at("gender").get<std::string>();
  if (gender != "F" && gender != "M") Fail(ErrorKind::kInput, "unknown gender " + gender);
  c.gender = gender == "F" ? Gender::kF : Gender::kM;
  auto technique = [&](const char *key) -> std::optional<Technique> {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    const auto t = ParseTechnique(j.at(key).get<std::string>());
    if (!t) Fail(ErrorKind::kInput, std::string("unknown ") + key + " " + j.at(key).dump());
    return t;
  };
  c.source_technique = technique("source_technique");
  c.target_technique = technique("target_technique");
  c.Validate();
  return c;
}

/// Parses one response-log record into `out`.
inline void IngestResponseRecord(const nlohmann::json &j, ResponseSet &out) {
  const std::string kind = j.at("kind").get<std::string>();
  const std::string task = j.at("task_id").get<std::string>();
  if (kind == "naturalness") {
    NaturalnessResponse r{task, j.at("rating").get<int>(), ConditionsFromJson(j.at("conditions"))};
    r.Validate();
    out.naturalness.push_back(r);
  } else if (kind == "similarity") {
    SimilarityResponse r;
    r.task_id = task;
    for (const auto &s : j.at("selections")) {
      const int k = s.get<int>();
      if (k < 0 || k >= kCandidateCount)
        Fail(ErrorKind::kValidation, "task " + task + ": selection out of range");
      r.predictions[std::size_t(k)] = true;
    }
    r.correct_index = j.at("correct_index").get<int>();
    r.conditions = ConditionsFromJson(j.at("conditions"));
    r.Validate();
    out.similarity.push_back(r);
  } else {
    Fail(ErrorKind::kInput, "unknown response kind " + kind);
  }
}

/// Reads a line-delimited JSON response log. Blank lines are skipped.
inline ResponseSet ReadResponseLog(const std::string &path) {
  std::ifstream is(path);
  if (!is) Fail(ErrorKind::kNotFound, "response log not found: " + path);
  ResponseSet out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      IngestResponseRecord(nlohmann::json::parse(line), out);
    } catch (const nlohmann::json::exception &e) {
      Fail(ErrorKind::kInput, path + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const Error &e) {
      Fail(e.kind(), path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace stc

#endif  // STC_EVAL_RESPONSES_HPP_
