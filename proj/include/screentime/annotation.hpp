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

// Review collection for the annotation protocol: a task queue that favours
// the least-reviewed frames, an append-only review log, and the HTTP
// endpoints the browser frontend talks to.
//
//   GET  /api/task/next?reviewer=ID   task document, or {"done": true}
//   GET  /api/frame/{task_id}         frame image bytes
//   POST /api/review                  review document, answers 204
//   GET  /api/progress                counts document
//   GET  /api/export                  review export CSV

#ifndef SCREENTIME_ANNOTATION_HPP_
#define SCREENTIME_ANNOTATION_HPP_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "screentime/calibration.hpp"
#include "screentime/random.hpp"

namespace screentime::annotation {

using calibration::AnnotationTask;
using calibration::Review;
using calibration::ReviewRow;

/// One line of the review log.
struct LogEntry {
  Review review;
  bool replaces = false;  // an earlier answer of this reviewer on this task is superseded
};

std::string log_entry_to_json(const LogEntry& entry);
LogEntry log_entry_from_json(std::string_view line);

/// Parses a review document (the POST body). `submitted_at` is optional.
/// Throws MalformedRecord or InvalidEnum.
Review review_from_json(std::string_view body);
std::string review_to_json(const Review& review);
std::string task_document(const AnnotationTask& task);

struct Progress {
  std::uint64_t total_reviews = 0;  // effective reviews, replacements excluded
  std::uint64_t log_entries = 0;
  std::size_t tasks = 0;
  std::map<std::uint64_t, std::size_t> tasks_by_review_count;
  double mean_reviews_per_task = 0.0;
  double sd_reviews_per_task = 0.0;  // population
};

std::string progress_document(const Progress& p);

enum class SubmitOutcome { Appended, Replaced };

class ReviewStore {
 public:
  /// Loads the task set and replays `log_path` when it exists. An empty
  /// `log_path` keeps the log in memory only.
  ReviewStore(std::vector<AnnotationTask> tasks, std::filesystem::path log_path, std::uint64_t seed);

  /// A uniformly random task among those with the fewest reviews that this
  /// reviewer has not answered; empty when none remain.
  std::optional<AnnotationTask> next_task(const std::string& reviewer_id);

  /// Throws UnknownTask or InvalidArgument (empty reviewer id).
  SubmitOutcome submit(Review review);

  Progress progress() const;
  std::vector<ReviewRow> export_rows() const;
  std::string export_csv() const;

  const AnnotationTask* find_task(const std::string& task_id) const;
  const std::vector<LogEntry>& log() const { return log_; }
  std::size_t review_count(const std::string& task_id) const;

 private:
  void apply(const LogEntry& entry);

  std::vector<AnnotationTask> tasks_;
  std::map<std::string, std::size_t> index_;
  std::filesystem::path log_path_;
  std::ofstream log_out_;
  Rng rng_;
  mutable std::mutex mu_;
  std::vector<LogEntry> log_;
  // task -> reviewer -> index of the effective entry in log_
  std::map<std::string, std::map<std::string, std::size_t>> effective_;
};

/// Rebuilds export rows from a log; the same function backs the live store.
std::vector<ReviewRow> export_from_log(const std::vector<AnnotationTask>& tasks,
                                       const std::vector<LogEntry>& log);

std::string utc_timestamp();

/// HTTP front of a ReviewStore.
class AnnotationServer {
 public:
  AnnotationServer(ReviewStore& store, std::filesystem::path frames_root,
                   std::optional<std::filesystem::path> static_dir = std::nullopt);
  ~AnnotationServer();
  AnnotationServer(const AnnotationServer&) = delete;
  AnnotationServer& operator=(const AnnotationServer&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port or -1.
  int bind(const std::string& host, int port);
  /// Serves until stop(); blocking.
  bool serve();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace screentime::annotation

#endif  // SCREENTIME_ANNOTATION_HPP_
