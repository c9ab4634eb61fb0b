// stc/study/service.hpp

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

#ifndef STC_STUDY_SERVICE_HPP_
#define STC_STUDY_SERVICE_HPP_

#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "stc/study/allocation.hpp"

namespace stc {

/// A validated answer: a rating for naturalness tasks, a sorted selection
/// set for similarity tasks.
struct ResponsePayload {
  std::optional<int> rating;
  std::vector<int> selections;
  bool operator==(const ResponsePayload &) const = default;
};

/// Checks `body` against the task kind. Accepts `rating` or `selections`.
inline ResponsePayload ParsePayload(const nlohmann::json &body, TaskKind kind) {
  ResponsePayload p;
  if (kind == TaskKind::kNaturalness) {
    if (!body.contains("rating")) Fail(ErrorKind::kValidation, "naturalness response needs a rating");
    if (body.contains("selections")) Fail(ErrorKind::kValidation, "naturalness response cannot carry selections");
    const auto &r = body.at("rating");
    if (!r.is_number_integer()) Fail(ErrorKind::kValidation, "rating must be an integer");
    const int v = r.get<int>();
    if (v < 1 || v > 5) Fail(ErrorKind::kValidation, "rating must be in [1, 5]");
    p.rating = v;
  } else {
    if (!body.contains("selections")) Fail(ErrorKind::kValidation, "similarity response needs selections");
    if (body.contains("rating")) Fail(ErrorKind::kValidation, "similarity response cannot carry a rating");
    const auto &s = body.at("selections");
    if (!s.is_array()) Fail(ErrorKind::kValidation, "selections must be an array");
    std::set<int> seen;
    for (const auto &x : s) {
      if (!x.is_number_integer()) Fail(ErrorKind::kValidation, "selections must be integers");
      const int k = x.get<int>();
      if (k < 0 || k >= kCandidateCount) Fail(ErrorKind::kValidation, "selection out of range");
      if (!seen.insert(k).second) Fail(ErrorKind::kValidation, "repeated selection");
    }
    if (seen.empty()) Fail(ErrorKind::kValidation, "selection set is empty");
    p.selections.assign(seen.begin(), seen.end());
  }
  return p;
}

inline std::string UtcTimestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, int(ms));
  return buf;
}

struct SessionRecord {
  std::string participant_id;
  std::vector<StudyTask> tasks;
  std::map<std::string, ResponsePayload> completed;
  std::map<std::string, std::string> answered_at;
  std::string created_at;

  const StudyTask *Find(const std::string &task_id) const {
    for (const auto &t : tasks)
      if (t.task_id == task_id) return &t;
    return nullptr;
  }
};

struct Acknowledgement {
  std::string task_id;
  bool duplicate = false;
  std::size_t completed = 0;
  std::size_t total = 0;
};

/// Sessions are allocated on first fetch and cached. Responses are appended
/// to a line-delimited JSON log and flushed before acknowledgement; one
/// mutex serializes all state changes and log writes. An existing log is
/// replayed at start-up so participants can resume.
class StudyService {
 public:
  StudyService(StudyConfig config, StimulusCatalog catalog, std::string log_path, std::uint64_t seed)
      : config_(std::move(config)), catalog_(std::move(catalog)), log_path_(std::move(log_path)), seed_(seed) {
    config_.Validate();
    Replay();
    log_.open(log_path_, std::ios::app);
    if (!log_) Fail(ErrorKind::kIo, "cannot open response log " + log_path_);
  }

  const StudyConfig &config() const { return config_; }
  const StimulusCatalog &catalog() const { return catalog_; }

  /// Allocates on first call; later calls return the cached session.
  SessionRecord Session(const std::string &participant_id) {
    std::lock_guard<std::mutex> lock(mu_);
    return EnsureSession(participant_id);
  }

  bool HasSession(const std::string &participant_id) const {
    std::lock_guard<std::mutex> lock(mu_);
    return sessions_.count(participant_id) > 0;
  }

  Acknowledgement Record(const std::string &participant_id, const std::string &task_id,
                         const nlohmann::json &body) {
    std::lock_guard<std::mutex> lock(mu_);
    const auto it = sessions_.find(participant_id);
    if (it == sessions_.end()) Fail(ErrorKind::kNotFound, "unknown participant " + participant_id);
    SessionRecord &session = it->second;
    const StudyTask *task = session.Find(task_id);
    if (!task) Fail(ErrorKind::kNotFound, "task " + task_id + " is not allocated to " + participant_id);
    const ResponsePayload payload = ParsePayload(body, task->kind);
    Acknowledgement ack{task_id, false, 0, session.tasks.size()};
    if (const auto done = session.completed.find(task_id); done != session.completed.end()) {
      if (!(done->second == payload))
        Fail(ErrorKind::kConflict, "task " + task_id + " already answered with a different payload");
      ack.duplicate = true;
      ack.completed = session.completed.size();
      return ack;
    }
    const std::string ts = UtcTimestamp();
    log_ << LogLine(participant_id, *task, payload, ts).dump() << '\n';
    log_.flush();
    if (!log_) Fail(ErrorKind::kIo, "write to response log failed");
    session.completed.emplace(task_id, payload);
    session.answered_at.emplace(task_id, ts);
    ack.completed = session.completed.size();
    return ack;
  }

  std::string AudioPath(const std::string &opaque) const {
    const Stimulus *s = catalog_.FindOpaque(opaque);
    if (!s || s->path.empty()) Fail(ErrorKind::kNotFound, "unknown audio " + opaque);
    return s->path;
  }

  /// Participant-facing session: ids, kinds, audio URLs and progress. No
  /// labels, conditions or correct answers.
  nlohmann::json SessionJson(const std::string &participant_id) {
    const SessionRecord s = Session(participant_id);
    nlohmann::json tasks = nlohmann::json::array();
    for (const auto &t : s.tasks) {
      nlohmann::json j = {{"task_id", t.task_id},
                          {"kind", TaskKindName(t.kind)},
                          {"audio_url", AudioUrl(t.reference_clip)},
                          {"completed", s.completed.count(t.task_id) > 0}};
      if (t.kind == TaskKind::kSimilarity) {
        nlohmann::json urls = nlohmann::json::array();
        for (const auto &c : t.candidate_clips) urls.push_back(AudioUrl(c));
        j["candidate_urls"] = urls;
      }
      tasks.push_back(j);
    }
    return {{"participant_id", s.participant_id},
            {"tasks", tasks},
            {"progress", {{"completed", s.completed.size()}, {"total", s.tasks.size()}}}};
  }

  std::string AudioUrl(const std::string &clip_id) const { return "/api/audio/" + catalog_.Opaque(clip_id); }

  static nlohmann::json LogLine(const std::string &participant_id, const StudyTask &task,
                                const ResponsePayload &p, const std::string &timestamp) {
    nlohmann::json j = {{"participant_id", participant_id},
                        {"task_id", task.task_id},
                        {"kind", TaskKindName(task.kind)}};
    if (p.rating) j["rating"] = *p.rating;
    else j["selections"] = p.selections;
    j["conditions"] = ConditionsToJson(task.conditions);
    if (task.kind == TaskKind::kSimilarity) j["correct_index"] = task.correct_index;
    j["timestamp"] = timestamp;
    return j;
  }

 private:
  SessionRecord &EnsureSession(const std::string &participant_id) {
    auto it = sessions_.find(participant_id);
    if (it != sessions_.end()) return it->second;
    SessionRecord s;
    s.participant_id = participant_id;
    s.tasks = AllocateTasks(participant_id, config_, catalog_, seed_);
    s.created_at = UtcTimestamp();
    return sessions_.emplace(participant_id, std::move(s)).first->second;
  }

  void Replay() {
    std::ifstream is(log_path_);
    if (!is) return;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const std::string where = log_path_ + ":" + std::to_string(lineno);
      try {
        const auto j = nlohmann::json::parse(line);
        SessionRecord &s = EnsureSession(j.at("participant_id").get<std::string>());
        const std::string task_id = j.at("task_id").get<std::string>();
        const StudyTask *t = s.Find(task_id);
        if (!t || TaskKindName(t->kind) != j.at("kind").get<std::string>())
          Fail(ErrorKind::kLoad, where + ": log does not match the current allocation");
        s.completed[task_id] = ParsePayload(j, t->kind);
        s.answered_at[task_id] = j.value("timestamp", "");
      } catch (const nlohmann::json::exception &e) {
        Fail(ErrorKind::kLoad, where + ": " + e.what());
      }
    }
  }

  StudyConfig config_;
  StimulusCatalog catalog_;
  std::string log_path_;
  std::uint64_t seed_;
  mutable std::mutex mu_;
  std::map<std::string, SessionRecord> sessions_;
  std::ofstream log_;
};

}  // namespace stc

#endif  // STC_STUDY_SERVICE_HPP_
