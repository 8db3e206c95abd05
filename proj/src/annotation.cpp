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

#include "screentime/annotation.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "screentime/error.hpp"
#include "screentime/io.hpp"

namespace screentime::annotation {

using nlohmann::ordered_json;

namespace {

std::string required_string(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string()) {
    throw Error(ErrorCode::MalformedRecord, fmt::format("review document lacks string field {}", key));
  }
  return j[key].get<std::string>();
}

Review parse_review_object(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::MalformedRecord, "review document is not a JSON object");
  Review r;
  r.task_id = required_string(j, "task_id");
  r.reviewer_id = required_string(j, "reviewer_id");
  const auto in_box = required_string(j, "in_box");
  const auto outside = required_string(j, "outside_box");
  auto a = calibration::parse_in_box(in_box);
  if (!a) throw Error(ErrorCode::InvalidEnum, "in_box must be female, male, doubt or no_face, got " + in_box);
  auto b = calibration::parse_outside_box(outside);
  if (!b) throw Error(ErrorCode::InvalidEnum, "outside_box must be yes, no or doubt, got " + outside);
  r.in_box = *a;
  r.outside_box = *b;
  if (j.contains("submitted_at")) {
    if (!j["submitted_at"].is_string()) throw Error(ErrorCode::MalformedRecord, "submitted_at must be a string");
    r.submitted_at = j["submitted_at"].get<std::string>();
  }
  return r;
}

ordered_json review_object(const Review& r) {
  ordered_json j;
  j["task_id"] = r.task_id;
  j["reviewer_id"] = r.reviewer_id;
  j["in_box"] = calibration::to_string(r.in_box);
  j["outside_box"] = calibration::to_string(r.outside_box);
  j["submitted_at"] = r.submitted_at;
  return j;
}

}  // namespace

std::string review_to_json(const Review& review) { return review_object(review).dump(); }

Review review_from_json(std::string_view body) {
  auto j = nlohmann::json::parse(body.begin(), body.end(), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::MalformedRecord, "review document is not JSON");
  return parse_review_object(j);
}

std::string log_entry_to_json(const LogEntry& entry) {
  auto j = review_object(entry.review);
  j["replaces"] = entry.replaces;
  return j.dump();
}

LogEntry log_entry_from_json(std::string_view line) {
  auto j = nlohmann::json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::MalformedRecord, "review log line is not JSON");
  LogEntry e;
  e.review = parse_review_object(j);
  e.replaces = j.value("replaces", false);
  return e;
}

std::string task_document(const AnnotationTask& task) { return calibration::task_to_json(task); }

std::string progress_document(const Progress& p) {
  ordered_json by_count = ordered_json::object();
  for (const auto& [count, tasks] : p.tasks_by_review_count) by_count[std::to_string(count)] = tasks;
  ordered_json j;
  j["total_reviews"] = p.total_reviews;
  j["log_entries"] = p.log_entries;
  j["tasks"] = p.tasks;
  j["tasks_by_review_count"] = by_count;
  j["mean_reviews_per_task"] = round6(p.mean_reviews_per_task);
  j["sd_reviews_per_task"] = round6(p.sd_reviews_per_task);
  return j.dump();
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}Z", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                     tm.tm_hour, tm.tm_min, tm.tm_sec);
}

ReviewStore::ReviewStore(std::vector<AnnotationTask> tasks, std::filesystem::path log_path, std::uint64_t seed)
    : tasks_(std::move(tasks)), log_path_(std::move(log_path)), rng_(seed) {
  if (tasks_.empty()) throw Error(ErrorCode::InvalidArgument, "empty task set");
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    if (!index_.emplace(tasks_[i].task_id, i).second) {
      throw Error(ErrorCode::DuplicateId, "duplicate task id " + tasks_[i].task_id);
    }
    effective_[tasks_[i].task_id];
  }
  if (log_path_.empty()) return;
  if (std::filesystem::exists(log_path_)) {
    std::istringstream in(read_file(log_path_));
    std::string line;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      auto entry = log_entry_from_json(line);
      if (!index_.count(entry.review.task_id)) {
        throw Error(ErrorCode::UnknownTask, "review log names unknown task " + entry.review.task_id);
      }
      apply(entry);
    }
  }
  log_out_.open(log_path_, std::ios::app);
  if (!log_out_) throw Error(ErrorCode::Unreadable, "cannot append to review log " + log_path_.string());
}

void ReviewStore::apply(const LogEntry& entry) {
  log_.push_back(entry);
  effective_[entry.review.task_id][entry.review.reviewer_id] = log_.size() - 1;
}

const AnnotationTask* ReviewStore::find_task(const std::string& task_id) const {
  auto it = index_.find(task_id);
  return it == index_.end() ? nullptr : &tasks_[it->second];
}

std::size_t ReviewStore::review_count(const std::string& task_id) const {
  std::lock_guard lock(mu_);
  auto it = effective_.find(task_id);
  return it == effective_.end() ? 0 : it->second.size();
}

std::optional<AnnotationTask> ReviewStore::next_task(const std::string& reviewer_id) {
  std::lock_guard lock(mu_);
  std::vector<const AnnotationTask*> best;
  std::size_t best_count = 0;
  for (const auto& task : tasks_) {
    const auto& reviewers = effective_.at(task.task_id);
    if (reviewers.count(reviewer_id)) continue;
    const auto n = reviewers.size();
    if (best.empty() || n < best_count) {
      best.assign(1, &task);
      best_count = n;
    } else if (n == best_count) {
      best.push_back(&task);
    }
  }
  if (best.empty()) return std::nullopt;
  return *best[rng_.below(best.size())];
}

SubmitOutcome ReviewStore::submit(Review review) {
  if (review.reviewer_id.empty()) throw Error(ErrorCode::InvalidArgument, "reviewer_id is empty");
  if (!index_.count(review.task_id)) throw Error(ErrorCode::UnknownTask, "unknown task " + review.task_id);
  if (review.submitted_at.empty()) review.submitted_at = utc_timestamp();
  std::lock_guard lock(mu_);
  LogEntry entry{std::move(review), false};
  entry.replaces = effective_.at(entry.review.task_id).count(entry.review.reviewer_id) > 0;
  if (log_out_.is_open()) {
    log_out_ << log_entry_to_json(entry) << '\n';
    log_out_.flush();
    if (!log_out_) throw Error(ErrorCode::Unreadable, "failed to append to review log");
  }
  const bool replaced = entry.replaces;
  apply(entry);
  return replaced ? SubmitOutcome::Replaced : SubmitOutcome::Appended;
}

Progress ReviewStore::progress() const {
  std::lock_guard lock(mu_);
  Progress p;
  p.tasks = tasks_.size();
  p.log_entries = log_.size();
  std::vector<double> counts;
  for (const auto& task : tasks_) {
    const auto n = effective_.at(task.task_id).size();
    p.total_reviews += n;
    ++p.tasks_by_review_count[n];
    counts.push_back(static_cast<double>(n));
  }
  double sum = 0.0;
  for (double c : counts) sum += c;
  p.mean_reviews_per_task = sum / static_cast<double>(counts.size());
  double ss = 0.0;
  for (double c : counts) ss += (c - p.mean_reviews_per_task) * (c - p.mean_reviews_per_task);
  p.sd_reviews_per_task = std::sqrt(ss / static_cast<double>(counts.size()));
  return p;
}

std::vector<ReviewRow> export_from_log(const std::vector<AnnotationTask>& tasks, const std::vector<LogEntry>& log) {
  std::map<std::string, const AnnotationTask*> by_id;
  for (const auto& t : tasks) by_id[t.task_id] = &t;
  std::map<std::pair<std::string, std::string>, const Review*> latest;
  for (const auto& e : log) latest[{e.review.task_id, e.review.reviewer_id}] = &e.review;
  std::vector<ReviewRow> rows;
  for (const auto& [key, r] : latest) {
    auto it = by_id.find(r->task_id);
    if (it == by_id.end()) continue;
    const auto& t = *it->second;
    rows.push_back({t.task_id, t.movie_id, t.frame_ts_ms, t.detected_gender, r->reviewer_id, r->in_box,
                    r->outside_box, r->submitted_at});
  }
  return rows;
}

std::vector<ReviewRow> ReviewStore::export_rows() const {
  std::lock_guard lock(mu_);
  return export_from_log(tasks_, log_);
}

std::string ReviewStore::export_csv() const { return calibration::review_export_csv(export_rows()); }

}  // namespace screentime::annotation
