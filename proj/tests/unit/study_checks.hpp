// tests/unit/study_checks.hpp

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

#ifndef STC_TESTS_STUDY_CHECKS_HPP_
#define STC_TESTS_STUDY_CHECKS_HPP_

#include <map>
#include <set>
#include <string>
#include <vector>

#include "stc/study/allocation.hpp"

namespace stc::testing {

/// Recounts an allocation from the catalog and returns every balance
/// violation found; empty means balanced.
inline std::vector<std::string> AllocationViolations(const std::vector<StudyTask> &tasks,
                                                     const StudyConfig &config,
                                                     const StimulusCatalog &catalog) {
  std::vector<std::string> bad;
  auto expect = [&](bool ok, const std::string &what) {
    if (!ok) bad.push_back(what);
  };
  expect(int(tasks.size()) == config.TotalTasks(), "total " + std::to_string(tasks.size()));
  std::map<std::string, int> count;
  std::set<std::string> task_ids, natural_refs;
  int nat = 0, sim = 0, unconverted = 0;
  for (const auto &t : tasks) {
    expect(task_ids.insert(t.task_id).second, "duplicate task id " + t.task_id);
    const Stimulus &ref = catalog.Get(t.reference_clip);
    if (t.kind == TaskKind::kNaturalness) {
      ++nat;
      expect(natural_refs.insert(t.reference_clip).second, "naturalness clip repeated " + t.reference_clip);
    } else {
      ++sim;
    }
    if (ref.role == StimulusRole::kUnconverted) {
      ++unconverted;
      expect(t.kind == TaskKind::kNaturalness, "unconverted similarity task");
      continue;
    }
    expect(ref.role == StimulusRole::kConverted, "reference is a candidate clip");
    expect(t.conditions == ref.Conditions(), "conditions differ from catalog for " + t.task_id);
    const std::string m(ModelName(ref.model)), k(TaskKindName(t.kind));
    ++count[m + "/" + k];
    ++count[m + "/" + k + "/" + std::string(GenderName(ref.gender))];
    ++count[m + "/" + k + "/" + std::string(SplitName(ref.subset))];
    if (t.kind == TaskKind::kSimilarity) {
      expect(t.candidate_clips.size() == 6, "candidate count");
      std::set<int> techniques;
      std::set<std::string> singers;
      Gender g = ref.gender;
      for (const auto &c : t.candidate_clips) {
        const Stimulus &cs = catalog.Get(c);
        expect(cs.role == StimulusRole::kCandidate, "candidate role");
        techniques.insert(int(*cs.technique));
        singers.insert(cs.singer_id);
        g = cs.gender;
      }
      expect(techniques.size() == 6, "candidates do not cover six techniques in " + t.task_id);
      expect(singers.size() == 1, "candidates span singers in " + t.task_id);
      expect(g == ref.gender, "candidate gender differs in " + t.task_id);
      if (ref.model != ModelTag::kM1) {
        expect(*singers.begin() == ref.singer_id, "candidate singer differs in " + t.task_id);
        expect(catalog.Get(t.candidate_clips[0]).subset == ref.subset, "candidate partition differs");
      }
      expect(t.correct_index >= 0 && t.correct_index < 6 &&
                 *catalog.Get(t.candidate_clips[std::size_t(t.correct_index)]).technique == *ref.target_technique,
             "correct index does not point at the target technique in " + t.task_id);
    }
  }
  expect(nat == config.tasks_per_type + config.unconverted_clips, "naturalness count " + std::to_string(nat));
  expect(sim == config.tasks_per_type, "similarity count " + std::to_string(sim));
  expect(unconverted == config.unconverted_clips, "unconverted count " + std::to_string(unconverted));
  const int half = config.per_model_examples / 2;
  for (ModelTag m : config.models) {
    for (const char *k : {"naturalness", "similarity"}) {
      const std::string key = std::string(ModelName(m)) + "/" + k;
      expect(count[key] == config.per_model_examples, key + " count " + std::to_string(count[key]));
      for (const char *level : {"F", "M", "train", "test"})
        expect(count[key + "/" + level] == half, key + "/" + level + " count " + std::to_string(count[key + "/" + level]));
    }
  }
  return bad;
}

}  // namespace stc::testing

#endif  // STC_TESTS_STUDY_CHECKS_HPP_
