// stc/study/allocation.hpp

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

#ifndef STC_STUDY_ALLOCATION_HPP_
#define STC_STUDY_ALLOCATION_HPP_

#include <algorithm>
#include <array>
#include <cstdio>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "stc/study/catalog.hpp"

namespace stc {

struct StudyConfig {
  int per_model_examples = 8;
  std::vector<ModelTag> models = {ModelTag::kVs1, ModelTag::kVs2, ModelTag::kM1};
  int tasks_per_type = 24;
  int unconverted_clips = 6;
  int candidate_count = kCandidateCount;

  void Validate() const {
    if (candidate_count != kCandidateCount)
      Fail(ErrorKind::kConfig, "candidate_count must be " + std::to_string(kCandidateCount));
    if (models.empty()) Fail(ErrorKind::kConfig, "study needs at least one model");
    for (std::size_t i = 0; i < models.size(); ++i) {
      if (models[i] == ModelTag::kUnconverted)
        Fail(ErrorKind::kConfig, "unconverted is not a study model");
      for (std::size_t j = 0; j < i; ++j)
        if (models[i] == models[j]) Fail(ErrorKind::kConfig, "duplicate study model");
    }
    if (per_model_examples * int(models.size()) != tasks_per_type)
      Fail(ErrorKind::kConfig, "per_model_examples x models must equal tasks_per_type");
    if (per_model_examples <= 0 || per_model_examples % 4 != 0)
      Fail(ErrorKind::kConfig, "per_model_examples must be a positive multiple of 4 to balance gender and subset");
    if (unconverted_clips < 0) Fail(ErrorKind::kConfig, "unconverted_clips must be non-negative");
  }
  int TotalTasks() const { return 2 * tasks_per_type + unconverted_clips; }
};

enum class TaskKind { kNaturalness, kSimilarity };

inline std::string_view TaskKindName(TaskKind k) {
  return k == TaskKind::kNaturalness ? "naturalness" : "similarity";
}

struct StudyTask {
  std::string task_id;
  TaskKind kind = TaskKind::kNaturalness;
  std::string reference_clip;
  std::vector<std::string> candidate_clips;
  // Server side only.
  int correct_index = -1;
  ConditionKey conditions;
};

/// Candidate clips per (singer, subset), indexed by technique.
class CandidateIndex {
 public:
  explicit CandidateIndex(const StimulusCatalog &catalog) {
    for (const auto &s : catalog.stimuli()) {
      if (s.role != StimulusRole::kCandidate) continue;
      auto &slot = sets_[{s.singer_id, s.subset}];
      slot.gender = s.gender;
      slot.clips[std::size_t(*s.technique)] = s.clip_id;
    }
    for (const auto &[key, set] : sets_)
      if (set.Complete()) complete_[set.gender].push_back(key);
  }

  const std::array<std::optional<std::string>, kNumTechniques> *Complete(const std::string &singer,
                                                                      Split subset) const {
    const auto it = sets_.find({singer, subset});
    if (it == sets_.end() || !it->second.Complete()) return nullptr;
    return &it->second.clips;
  }

  const std::vector<std::pair<std::string, Split>> &CompleteForGender(Gender g) const {
    static const std::vector<std::pair<std::string, Split>> kNone;
    const auto it = complete_.find(g);
    return it == complete_.end() ? kNone : it->second;
  }

  const std::array<std::optional<std::string>, kNumTechniques> &At(
      const std::pair<std::string, Split> &key) const {
    return sets_.at(key).clips;
  }

 private:
  struct Set {
    Gender gender = Gender::kF;
    std::array<std::optional<std::string>, kNumTechniques> clips;
    bool Complete() const {
      return std::all_of(clips.begin(), clips.end(), [](const auto &c) { return c.has_value(); });
    }
  };
  std::map<std::pair<std::string, Split>, Set> sets_;
  std::map<Gender, std::vector<std::pair<std::string, Split>>> complete_;
};

/// Models trained on unlabelled data borrow candidates from a random
/// same-gender labelled singer; the others use the reference's own singer.
inline bool BorrowsCandidates(ModelTag m) { return m == ModelTag::kM1; }

inline std::mt19937_64 ParticipantRng(const std::string &participant_id, std::uint64_t seed) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32),
                    std::uint32_t(Fnv1a64(participant_id)), std::uint32_t(Fnv1a64(participant_id) >> 32)};
  return std::mt19937_64(seq);
}

/// Balanced allocation: per model and task type, per_model_examples / 4
/// clips from each (gender, subset) stratum, plus unconverted naturalness
/// clips. Presentation order is shuffled; deterministic given the seed.
inline std::vector<StudyTask> AllocateTasks(const std::string &participant_id, const StudyConfig &config,
                                            const StimulusCatalog &catalog, std::uint64_t seed) {
  config.Validate();
  if (participant_id.empty()) Fail(ErrorKind::kValidation, "empty participant id");
  auto rng = ParticipantRng(participant_id, seed);
  const CandidateIndex candidates(catalog);
  const int quota = config.per_model_examples / 4;
  std::vector<StudyTask> tasks;

  for (ModelTag model : config.models) {
    for (TaskKind kind : {TaskKind::kNaturalness, TaskKind::kSimilarity}) {
      for (Gender g : {Gender::kF, Gender::kM}) {
        for (Split sp : {Split::kTrain, Split::kTest}) {
          std::vector<const Stimulus *> pool;
          for (const auto &s : catalog.stimuli()) {
            if (s.role != StimulusRole::kConverted || s.model != model || s.gender != g || s.subset != sp)
              continue;
            if (kind == TaskKind::kSimilarity) {
              if (BorrowsCandidates(model) ? candidates.CompleteForGender(g).empty()
                                           : !candidates.Complete(s.singer_id, sp))
                continue;
            }
            pool.push_back(&s);
          }
          if (int(pool.size()) < quota) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "stratum (%s, %s, %s) has %zu of %d %s clips",
                          std::string(ModelName(model)).c_str(), std::string(GenderName(g)).c_str(),
                          std::string(SplitName(sp)).c_str(), pool.size(), quota,
                          std::string(TaskKindName(kind)).c_str());
            Fail(ErrorKind::kAllocation, buf);
          }
          std::shuffle(pool.begin(), pool.end(), rng);
          for (int i = 0; i < quota; ++i) {
            const Stimulus &ref = *pool[std::size_t(i)];
            StudyTask t;
            t.kind = kind;
            t.reference_clip = ref.clip_id;
            t.conditions = ref.Conditions();
            if (kind == TaskKind::kSimilarity) {
              const std::array<std::optional<std::string>, kNumTechniques> *set = nullptr;
              if (BorrowsCandidates(model)) {
                const auto &keys = candidates.CompleteForGender(g);
                set = &candidates.At(keys[std::uniform_int_distribution<std::size_t>(0, keys.size() - 1)(rng)]);
              } else {
                set = candidates.Complete(ref.singer_id, sp);
              }
              std::array<int, kNumTechniques> order;
              for (int k = 0; k < kNumTechniques; ++k) order[std::size_t(k)] = k;
              std::shuffle(order.begin(), order.end(), rng);
              for (int k = 0; k < kNumTechniques; ++k) {
                t.candidate_clips.push_back(*(*set)[std::size_t(order[std::size_t(k)])]);
                if (Technique(order[std::size_t(k)]) == *ref.target_technique) t.correct_index = k;
              }
            }
            tasks.push_back(std::move(t));
          }
        }
      }
    }
  }

  std::vector<const Stimulus *> unconverted;
  for (const auto &s : catalog.stimuli())
    if (s.role == StimulusRole::kUnconverted) unconverted.push_back(&s);
  if (int(unconverted.size()) < config.unconverted_clips)
    Fail(ErrorKind::kAllocation, "stratum (unconverted) has " + std::to_string(unconverted.size()) + " of " +
                                     std::to_string(config.unconverted_clips) + " clips");
  std::shuffle(unconverted.begin(), unconverted.end(), rng);
  for (int i = 0; i < config.unconverted_clips; ++i) {
    StudyTask t;
    t.reference_clip = unconverted[std::size_t(i)]->clip_id;
    t.conditions = unconverted[std::size_t(i)]->Conditions();
    tasks.push_back(std::move(t));
  }

  std::shuffle(tasks.begin(), tasks.end(), rng);
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "t%02zu", i);
    tasks[i].task_id = id;
  }
  return tasks;
}

}  // namespace stc

#endif  // STC_STUDY_ALLOCATION_HPP_
