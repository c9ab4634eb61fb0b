// stc/study/server.hpp

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

#ifndef STC_STUDY_SERVER_HPP_
#define STC_STUDY_SERVER_HPP_

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "stc/study/service.hpp"

// Keep after anything that pulls in Eigen (resolv.h defines _res).
#include "httplib.h"

namespace stc {

inline int HttpStatusFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kNotFound: return 404;
    case ErrorKind::kConflict: return 409;
    case ErrorKind::kValidation:
    case ErrorKind::kInput: return 400;
    case ErrorKind::kAllocation: return 503;
    default: return 500;
  }
}

/// HTTP front end:
///   GET  /api/session/{participant_id}
///   GET  /api/progress/{participant_id}
///   GET  /api/audio/{clip_id}          (Range requests honoured)
///   POST /api/response                 {participant_id, task_id, rating | selections}
/// and the participant UI bundle mounted at `/`.
class StudyHttpServer {
 public:
  explicit StudyHttpServer(StudyService &service, const std::string &static_dir = "") : service_(service) {
    auto fail = [](httplib::Response &res, const Error &e) {
      res.status = HttpStatusFor(e.kind());
      res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
    };

    server_.Get(R"(/api/session/([^/]+))", [this, fail](const httplib::Request &req, httplib::Response &res) {
      try {
        res.set_content(service_.SessionJson(req.matches[1]).dump(), "application/json");
      } catch (const Error &e) {
        fail(res, e);
      }
    });

    server_.Get(R"(/api/progress/([^/]+))", [this, fail](const httplib::Request &req, httplib::Response &res) {
      try {
        const std::string pid = req.matches[1];
        if (!service_.HasSession(pid)) Fail(ErrorKind::kNotFound, "unknown participant " + pid);
        const SessionRecord s = service_.Session(pid);
        res.set_content(nlohmann::json{{"completed", s.completed.size()}, {"total", s.tasks.size()}}.dump(),
                        "application/json");
      } catch (const Error &e) {
        fail(res, e);
      }
    });

    server_.Get(R"(/api/audio/([0-9a-f]+))", [this, fail](const httplib::Request &req, httplib::Response &res) {
      try {
        const std::string path = service_.AudioPath(req.matches[1]);
        std::ifstream is(path, std::ios::binary);
        if (!is) Fail(ErrorKind::kNotFound, "audio file missing");
        std::ostringstream ss;
        ss << is.rdbuf();
        res.set_header("Accept-Ranges", "bytes");
        res.set_content(ss.str(), "audio/wav");
      } catch (const Error &e) {
        fail(res, e);
      }
    });

    server_.Post("/api/response", [this, fail](const httplib::Request &req, httplib::Response &res) {
      try {
        nlohmann::json body;
        try {
          body = nlohmann::json::parse(req.body);
        } catch (const nlohmann::json::exception &) {
          Fail(ErrorKind::kValidation, "request body is not JSON");
        }
        if (!body.is_object() || !body.contains("participant_id") || !body.contains("task_id") ||
            !body["participant_id"].is_string() || !body["task_id"].is_string())
          Fail(ErrorKind::kValidation, "body needs string participant_id and task_id");
        const auto ack = service_.Record(body["participant_id"], body["task_id"], body);
        res.set_content(nlohmann::json{{"status", "ok"},
                                       {"task_id", ack.task_id},
                                       {"duplicate", ack.duplicate},
                                       {"completed", ack.completed},
                                       {"total", ack.total}}
                            .dump(),
                        "application/json");
      } catch (const Error &e) {
        fail(res, e);
      }
    });

    if (!static_dir.empty()) {
      if (!std::filesystem::is_directory(static_dir))
        Fail(ErrorKind::kNotFound, "static bundle directory not found: " + static_dir);
      server_.set_mount_point("/", static_dir);
    }
  }

  /// Binds to `port`; 0 picks a free port. Returns the bound port.
  int Bind(const std::string &host, int port) {
    const int bound = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
    if (bound < 0) Fail(ErrorKind::kIo, "cannot bind " + host + ":" + std::to_string(port));
    return bound;
  }

  /// Blocks until Stop().
  bool Listen() { return server_.listen_after_bind(); }
  void Stop() { server_.stop(); }
  void WaitUntilReady() const { server_.wait_until_ready(); }

 private:
  StudyService &service_;
  httplib::Server server_;
};

}  // namespace stc

#endif  // STC_STUDY_SERVER_HPP_
