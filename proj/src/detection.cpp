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

#include "screentime/detection.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "screentime/io.hpp"

namespace screentime::detection {

namespace fs = std::filesystem;

namespace {

// Tolerance for x + w <= 1 style checks; detectors emit rounded floats.
constexpr double kEdgeSlack = 1e-9;

bool key_less(const FaceDetection& a, const FaceDetection& b) {
  if (a.movie_id != b.movie_id) return a.movie_id < b.movie_id;
  return a.frame_ts_ms < b.frame_ts_ms;
}

// Pulls the movie id out of a record line without a full parse. Returns
// nullopt on anything unusual; callers fall back to the JSON parser.
std::optional<std::string> quick_movie_id(std::string_view line) {
  auto k = line.find("\"movie_id\"");
  if (k == std::string_view::npos) return std::nullopt;
  std::size_t pos = k + 10;
  auto skip_ws = [&] {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
  };
  skip_ws();
  if (pos >= line.size() || line[pos] != ':') return std::nullopt;
  ++pos;
  skip_ws();
  if (pos >= line.size() || line[pos] != '"') return std::nullopt;
  auto end = line.find('"', pos + 1);
  if (end == std::string_view::npos) return std::nullopt;
  auto id = line.substr(pos + 1, end - pos - 1);
  if (id.find('\\') != std::string_view::npos) return std::nullopt;
  return std::string(id);
}

void check_invalid_fraction(const ErrorTally& file_tally, double max_fraction,
                            const std::string& source) {
  if (file_tally.lines == 0) return;
  const double fraction = static_cast<double>(file_tally.invalid) / static_cast<double>(file_tally.lines);
  if (fraction > max_fraction) {
    throw Error(ErrorCode::CorruptInput,
                fmt::format("{}: {} of {} lines invalid ({:.2f}%)", source, file_tally.invalid,
                            file_tally.lines, fraction * 100.0));
  }
}

// Reads a whole detection file, validating each line.
std::vector<FaceDetection> load_file(const fs::path& path, double max_fraction, ErrorTally& tally) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Unreadable, "cannot read detections " + path.string());
  ErrorTally local;
  std::vector<FaceDetection> records;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++local.lines;
    auto parsed = parse_detection(line);
    if (auto* rec = std::get_if<FaceDetection>(&parsed)) {
      records.push_back(std::move(*rec));
    } else {
      local.record_invalid(std::get<ErrorCode>(parsed));
    }
  }
  check_invalid_fraction(local, max_fraction, path.string());
  tally.merge(local);
  return records;
}

void group_into_frames(std::vector<FaceDetection>& records, std::deque<FrameDetections>& out) {
  std::stable_sort(records.begin(), records.end(), key_less);
  for (auto& rec : records) {
    if (out.empty() || out.back().movie_id != rec.movie_id || out.back().frame_ts_ms != rec.frame_ts_ms) {
      out.push_back({rec.movie_id, rec.frame_ts_ms, {}});
    }
    out.back().faces.push_back(std::move(rec));
  }
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::string_view to_string(Gender g) { return g == Gender::Female ? "female" : "male"; }

std::optional<Gender> parse_gender(std::string_view s) {
  if (s == "female") return Gender::Female;
  if (s == "male") return Gender::Male;
  return std::nullopt;
}

std::optional<ErrorCode> validate_detection(const FaceDetection& rec) {
  const auto& b = rec.bbox;
  if (rec.frame_ts_ms < 0) return ErrorCode::NegativeTimestamp;
  if (!std::isfinite(b.x) || !std::isfinite(b.y) || !std::isfinite(b.w) || !std::isfinite(b.h)) {
    return ErrorCode::OutOfBounds;
  }
  if (!(b.w > 0.0) || !(b.h > 0.0)) return ErrorCode::NonPositiveBox;
  if (b.x < 0.0 || b.y < 0.0 || b.x + b.w > 1.0 + kEdgeSlack || b.y + b.h > 1.0 + kEdgeSlack) {
    return ErrorCode::OutOfBounds;
  }
  if (rec.confidence && !(*rec.confidence >= 0.0 && *rec.confidence <= 1.0)) {
    return ErrorCode::OutOfBounds;
  }
  return std::nullopt;
}

std::variant<FaceDetection, ErrorCode> parse_detection(std::string_view line) {
  auto j = nlohmann::json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) return ErrorCode::MalformedRecord;
  FaceDetection rec;
  auto movie = j.find("movie_id");
  auto ts = j.find("frame_ts_ms");
  auto gender = j.find("gender");
  if (movie == j.end() || !movie->is_string()) return ErrorCode::MalformedRecord;
  if (ts == j.end() || !ts->is_number_integer()) return ErrorCode::MalformedRecord;
  if (gender == j.end() || !gender->is_string()) return ErrorCode::MalformedRecord;
  rec.movie_id = movie->get<std::string>();
  rec.frame_ts_ms = ts->get<std::int64_t>();
  std::array<double*, 4> fields = {&rec.bbox.x, &rec.bbox.y, &rec.bbox.w, &rec.bbox.h};
  std::array<const char*, 4> names = {"x", "y", "w", "h"};
  for (std::size_t i = 0; i < 4; ++i) {
    auto it = j.find(names[i]);
    if (it == j.end() || !it->is_number()) return ErrorCode::MalformedRecord;
    *fields[i] = it->get<double>();
  }
  auto g = parse_gender(gender->get_ref<const std::string&>());
  if (!g) return ErrorCode::InvalidGender;
  rec.gender = *g;
  if (auto c = j.find("confidence"); c != j.end() && !c->is_null()) {
    if (!c->is_number()) return ErrorCode::MalformedRecord;
    rec.confidence = c->get<double>();
  }
  if (auto err = validate_detection(rec)) return *err;
  return rec;
}

std::string to_json_line(const FaceDetection& rec) {
  std::string out = fmt::format(R"({{"movie_id":{},"frame_ts_ms":{},"x":{},"y":{},"w":{},"h":{},"gender":"{}")",
                                nlohmann::json(rec.movie_id).dump(), rec.frame_ts_ms, rec.bbox.x,
                                rec.bbox.y, rec.bbox.w, rec.bbox.h, to_string(rec.gender));
  if (rec.confidence) out += fmt::format(R"(,"confidence":{})", *rec.confidence);
  out.push_back('}');
  return out;
}

void ErrorTally::record_invalid(ErrorCode code) {
  ++invalid;
  ++by_reason[std::string(screentime::to_string(code))];
}

void ErrorTally::merge(const ErrorTally& other) {
  lines += other.lines;
  invalid += other.invalid;
  for (const auto& [k, v] : other.by_reason) by_reason[k] += v;
}

std::vector<fs::path> list_detection_files(const fs::path& path) {
  std::error_code ec;
  if (fs::is_regular_file(path, ec)) return {path};
  if (!fs::is_directory(path, ec)) {
    throw Error(ErrorCode::Unreadable, "no detections at " + path.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

DetectionReader::DetectionReader(const fs::path& path, double max_invalid_fraction)
    : max_invalid_fraction_(max_invalid_fraction) {
  std::vector<FileSpan> spans;
  for (const auto& file : list_detection_files(path)) {
    std::ifstream in(file);
    if (!in) throw Error(ErrorCode::Unreadable, "cannot read detections " + file.string());
    FileSpan span{file, {}, {}};
    bool any = false;
    std::string line;
    while (std::getline(in, line)) {
      auto id = quick_movie_id(line);
      if (!id) {
        if (trim(line).empty()) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("movie_id") || !j["movie_id"].is_string()) {
          continue;
        }
        id = j["movie_id"].get<std::string>();
      }
      if (!any || *id < span.min_id) span.min_id = *id;
      if (!any || *id > span.max_id) span.max_id = *id;
      any = true;
    }
    spans.push_back(std::move(span));
  }
  std::stable_sort(spans.begin(), spans.end(), [](const FileSpan& a, const FileSpan& b) {
    return a.min_id < b.min_id;
  });
  std::string group_max;
  for (auto& span : spans) {
    if (groups_.empty() || span.min_id > group_max) {
      groups_.emplace_back();
      group_max = span.max_id;
    } else {
      group_max = std::max(group_max, span.max_id);
    }
    groups_.back().push_back(std::move(span.path));
  }
}

std::vector<FrameDetections> DetectionReader::read_group(std::size_t index, ErrorTally& tally) const {
  std::vector<FaceDetection> records;
  for (const auto& file : groups_.at(index)) {
    auto part = load_file(file, max_invalid_fraction_, tally);
    if (records.empty()) {
      records = std::move(part);
    } else {
      records.insert(records.end(), std::make_move_iterator(part.begin()),
                     std::make_move_iterator(part.end()));
    }
  }
  std::deque<FrameDetections> frames;
  group_into_frames(records, frames);
  return {std::make_move_iterator(frames.begin()), std::make_move_iterator(frames.end())};
}

void DetectionReader::load_next_group() {
  for (auto& frame : read_group(next_group_, tally_)) pending_.push_back(std::move(frame));
  ++next_group_;
}

std::optional<FrameDetections> DetectionReader::next() {
  while (pending_.empty()) {
    if (next_group_ >= groups_.size()) return std::nullopt;
    load_next_group();
  }
  FrameDetections frame = std::move(pending_.front());
  pending_.pop_front();
  return frame;
}

std::vector<FrameDetections> read_detections(const fs::path& path, ErrorTally* tally) {
  DetectionReader reader(path);
  std::vector<FrameDetections> frames;
  while (auto f = reader.next()) frames.push_back(std::move(*f));
  if (tally) *tally = reader.tally();
  return frames;
}

void DetectionSummary::add(const FrameDetections& frame) {
  if (frame.faces.empty()) return;
  ++frames_with_faces;
  faces += frame.faces.size();
  faces_per_movie[frame.movie_id] += frame.faces.size();
  for (const auto& f : frame.faces) (f.gender == Gender::Female ? female : male) += 1;
}

void DetectionSummary::merge(const DetectionSummary& other) {
  faces += other.faces;
  frames_with_faces += other.frames_with_faces;
  female += other.female;
  male += other.male;
  for (const auto& [id, n] : other.faces_per_movie) faces_per_movie[id] += n;
}

double DetectionSummary::mean_faces_per_movie() const {
  if (faces_per_movie.empty()) return 0.0;
  return static_cast<double>(faces) / static_cast<double>(faces_per_movie.size());
}

double DetectionSummary::sd_faces_per_movie() const {
  if (faces_per_movie.empty()) return 0.0;
  const double mean = mean_faces_per_movie();
  double ss = 0.0;
  for (const auto& [id, n] : faces_per_movie) {
    const double d = static_cast<double>(n) - mean;
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(faces_per_movie.size()));
}

DetectionSummary summarize(const std::vector<FrameDetections>& frames) {
  DetectionSummary s;
  for (const auto& f : frames) s.add(f);
  return s;
}

std::string store_file_name(const std::string& movie_id) {
  bool plain = !movie_id.empty() && movie_id[0] != '.';
  for (char c : movie_id) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-')) plain = false;
  }
  if (plain) return movie_id + ".jsonl";
  std::string hex = "x";
  for (unsigned char c : movie_id) hex += fmt::format("{:02x}", c);
  return hex + ".jsonl";
}

IngestReport ingest_detections(const fs::path& input, const fs::path& store_dir,
                               double max_invalid_fraction) {
  constexpr std::size_t kBuckets = 64;
  const auto inputs = list_detection_files(input);
  fs::create_directories(store_dir);
  for (const auto& entry : fs::directory_iterator(store_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") fs::remove(entry.path());
  }
  const fs::path bucket_dir = store_dir / ".buckets";
  fs::remove_all(bucket_dir);
  fs::create_directories(bucket_dir);
  auto bucket_path = [&](std::size_t b) { return bucket_dir / fmt::format("bucket-{:02d}.jsonl", b); };

  IngestReport report;
  try {
    std::vector<std::ofstream> buckets(kBuckets);
    for (std::size_t b = 0; b < kBuckets; ++b) buckets[b].open(bucket_path(b));
    for (const auto& file : inputs) {
      std::ifstream in(file);
      if (!in) throw Error(ErrorCode::Unreadable, "cannot read detections " + file.string());
      ErrorTally local;
      std::string line;
      while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++local.lines;
        auto parsed = parse_detection(line);
        if (auto* rec = std::get_if<FaceDetection>(&parsed)) {
          buckets[fnv1a(rec->movie_id) % kBuckets] << to_json_line(*rec) << '\n';
        } else {
          local.record_invalid(std::get<ErrorCode>(parsed));
        }
      }
      check_invalid_fraction(local, max_invalid_fraction, file.string());
      report.tally.merge(local);
    }
    for (auto& b : buckets) b.close();

    for (std::size_t b = 0; b < kBuckets; ++b) {
      ErrorTally ignored;
      auto records = load_file(bucket_path(b), 0.0, ignored);
      std::map<std::string, std::vector<FaceDetection>> by_movie;
      for (auto& rec : records) by_movie[rec.movie_id].push_back(std::move(rec));
      for (auto& [movie, recs] : by_movie) {
        std::deque<FrameDetections> frames;
        group_into_frames(recs, frames);
        std::string content;
        for (const auto& frame : frames) {
          report.summary.add(frame);
          for (const auto& f : frame.faces) {
            content += to_json_line(f);
            content.push_back('\n');
          }
        }
        write_file_atomic(store_dir / store_file_name(movie), content);
        ++report.movies;
      }
      fs::remove(bucket_path(b));
    }
  } catch (...) {
    fs::remove_all(bucket_dir);
    throw;
  }
  fs::remove_all(bucket_dir);
  return report;
}

std::vector<fs::path> plan_frame_paths(const sampling::SamplingPlan& plan, const fs::path& frames_root) {
  std::vector<fs::path> out;
  for (auto ms : plan.timestamps_ms()) out.push_back(frames_root / sampling::frame_relative_path(plan.movie_id, ms));
  return out;
}

}  // namespace screentime::detection
