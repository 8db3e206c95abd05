// Copyright 2026 The Screentime Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <httplib.h>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "screentime/annotation.hpp"
#include "screentime/error.hpp"
#include "screentime/io.hpp"

namespace screentime::annotation {

namespace {

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  nlohmann::ordered_json j;
  j["error"] = code;
  j["message"] = message;
  res.status = status;
  res.set_content(j.dump(), "application/json");
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownTask: return 404;
    case ErrorCode::InvalidEnum:
    case ErrorCode::MalformedRecord:
    case ErrorCode::InvalidArgument: return 400;
    default: return 500;
  }
}

std::string content_type_for(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".png") return "image/png";
  if (ext == ".webp") return "image/webp";
  return "image/jpeg";
}

}  // namespace

struct AnnotationServer::Impl {
  ReviewStore& store;
  std::filesystem::path frames_root;
  httplib::Server server;

  Impl(ReviewStore& s, std::filesystem::path root) : store(s), frames_root(std::move(root)) {}
};

AnnotationServer::AnnotationServer(ReviewStore& store, std::filesystem::path frames_root,
                                   std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>(store, std::move(frames_root))) {
  auto& srv = impl_->server;
  Impl* self = impl_.get();

  srv.Get("/api/task/next", [self](const httplib::Request& req, httplib::Response& res) {
    const auto reviewer = req.get_param_value("reviewer");
    if (reviewer.empty()) return send_error(res, 400, "InvalidArgument", "query parameter reviewer is required");
    auto task = self->store.next_task(reviewer);
    if (!task) {
      res.set_content(R"({"done":true})", "application/json");
      return;
    }
    res.set_content(task_document(*task), "application/json");
  });

  srv.Get(R"(/api/frame/([^/]+))", [self](const httplib::Request& req, httplib::Response& res) {
    const auto* task = self->store.find_task(req.matches[1]);
    if (!task) return send_error(res, 404, "UnknownTask", "unknown task " + std::string(req.matches[1]));
    const auto path = self->frames_root / task->frame_ref;
    std::string bytes;
    try {
      bytes = read_file(path);
    } catch (const Error&) {
      return send_error(res, 404, "Unreadable", "frame image missing for " + task->task_id);
    }
    res.set_content(std::move(bytes), content_type_for(path).c_str());
  });

  srv.Post("/api/review", [self](const httplib::Request& req, httplib::Response& res) {
    try {
      self->store.submit(review_from_json(req.body));
      res.status = 204;
    } catch (const Error& e) {
      send_error(res, status_for(e.code()), std::string(to_string(e.code())), e.what());
    }
  });

  srv.Get("/api/progress", [self](const httplib::Request&, httplib::Response& res) {
    res.set_content(progress_document(self->store.progress()), "application/json");
  });

  srv.Get("/api/export", [self](const httplib::Request&, httplib::Response& res) {
    res.set_content(self->store.export_csv(), "text/csv");
  });

  if (static_dir && !srv.set_mount_point("/", static_dir->string())) {
    throw Error(ErrorCode::MissingPrerequisite, "static UI directory not found: " + static_dir->string());
  }
}

AnnotationServer::~AnnotationServer() { stop(); }

int AnnotationServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool AnnotationServer::serve() { return impl_->server.listen_after_bind(); }

void AnnotationServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace screentime::annotation
