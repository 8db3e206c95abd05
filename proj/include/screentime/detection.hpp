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

// Face-detection records: the JSON-lines wire format, validation, ordered
// streaming reads and the external detector protocol.
//
// One record per line:
//   {"movie_id":str,"frame_ts_ms":int,"x":float,"y":float,"w":float,
//    "h":float,"gender":"female"|"male","confidence":float?}
// Coordinates are fractions of the frame, origin top-left.

#ifndef SCREENTIME_DETECTION_HPP_
#define SCREENTIME_DETECTION_HPP_

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "screentime/error.hpp"
#include "screentime/sampling.hpp"

namespace screentime::detection {

enum class Gender { Female, Male };

std::string_view to_string(Gender g);
std::optional<Gender> parse_gender(std::string_view s);

struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const { return w * h; }
  double center_x() const { return x + w / 2.0; }
  double center_y() const { return y + h / 2.0; }
  bool operator==(const BBox&) const = default;
};

struct FaceDetection {
  std::string movie_id;
  std::int64_t frame_ts_ms = 0;
  BBox bbox;
  Gender gender = Gender::Female;
  std::optional<double> confidence;

  bool operator==(const FaceDetection&) const = default;
};

struct FrameDetections {
  std::string movie_id;
  std::int64_t frame_ts_ms = 0;
  std::vector<FaceDetection> faces;
};

/// Accepts a record iff its timestamp is non-negative, its box has positive
/// size and lies inside the unit frame, and its confidence (if any) is in
/// [0, 1]. Returns the first violated rule.
std::optional<ErrorCode> validate_detection(const FaceDetection& rec);

/// Decodes and validates one line. Lines that are not JSON objects with the
/// required keys yield MalformedRecord.
std::variant<FaceDetection, ErrorCode> parse_detection(std::string_view line);

std::string to_json_line(const FaceDetection& rec);

struct ErrorTally {
  std::uint64_t lines = 0;
  std::uint64_t invalid = 0;
  std::map<std::string, std::uint64_t> by_reason;

  void record_invalid(ErrorCode code);
  void merge(const ErrorTally& other);
};

inline constexpr double kMaxInvalidFraction = 0.01;

/// Streams FrameDetections in (movie_id, frame_ts_ms) order from a file or a
/// directory of *.jsonl files. Invalid lines are counted and skipped; a file
/// with more than 1% invalid lines raises CorruptInput.
///
/// Files are grouped by overlapping movie-id ranges and each group is sorted
/// in memory, so a store that keeps one movie per file (see ingest) is read
/// one movie at a time.
class DetectionReader {
 public:
  explicit DetectionReader(const std::filesystem::path& path,
                           double max_invalid_fraction = kMaxInvalidFraction);

  std::optional<FrameDetections> next();
  const ErrorTally& tally() const { return tally_; }

  /// Files are grouped so that no movie spans two groups; groups come in
  /// ascending movie order. `read_group` loads one group without touching
  /// the cursor and may run concurrently with other `read_group` calls.
  std::size_t group_count() const { return groups_.size(); }
  std::vector<FrameDetections> read_group(std::size_t index, ErrorTally& tally) const;

 private:
  struct FileSpan {
    std::filesystem::path path;
    std::string min_id;
    std::string max_id;
  };
  void load_next_group();

  double max_invalid_fraction_;
  std::vector<std::vector<std::filesystem::path>> groups_;
  std::size_t next_group_ = 0;
  std::deque<FrameDetections> pending_;
  ErrorTally tally_;
};

/// Reads every frame; convenient for tests and small inputs.
std::vector<FrameDetections> read_detections(const std::filesystem::path& path,
                                             ErrorTally* tally = nullptr);

/// Lists *.jsonl files under a directory (or the file itself), sorted.
std::vector<std::filesystem::path> list_detection_files(const std::filesystem::path& path);

struct DetectionSummary {
  std::uint64_t faces = 0;
  std::uint64_t frames_with_faces = 0;
  std::uint64_t female = 0;
  std::uint64_t male = 0;
  std::map<std::string, std::uint64_t> faces_per_movie;

  void add(const FrameDetections& frame);
  void merge(const DetectionSummary& other);
  double mean_faces_per_movie() const;
  /// Population standard deviation over movies present in the stream.
  double sd_faces_per_movie() const;
  bool operator==(const DetectionSummary&) const = default;
};

DetectionSummary summarize(const std::vector<FrameDetections>& frames);

/// Partitions raw detection files into `store_dir`, one file per movie with
/// records in timestamp order. Memory is bounded by the largest hash bucket,
/// not by the input size.
struct IngestReport {
  ErrorTally tally;
  DetectionSummary summary;
  std::size_t movies = 0;
};
IngestReport ingest_detections(const std::filesystem::path& input,
                               const std::filesystem::path& store_dir,
                               double max_invalid_fraction = kMaxInvalidFraction);

/// Store file name for a movie id; ids outside [A-Za-z0-9._-] are hex-encoded.
std::string store_file_name(const std::string& movie_id);

struct DetectorRun {
  std::size_t frames = 0;
  std::uint64_t records = 0;
  ErrorTally tally;
  std::string diagnostics;  // captured stderr, truncated
};

/// Runs `command` through /bin/sh, writes one frame path per line on its
/// stdin and reads records from its stdout. Each frame's records end with a
/// blank line. Valid records go to `sink`.
///
/// Throws ProtocolViolation on a non-record output line or a frame count
/// mismatch, DetectorFailed on a non-zero exit status.
DetectorRun run_external_detector(const std::string& command,
                                  const std::vector<std::filesystem::path>& frames,
                                  const std::function<void(const FaceDetection&)>& sink,
                                  double max_invalid_fraction = kMaxInvalidFraction);

/// Frame paths of a sampling plan under `frames_root`.
std::vector<std::filesystem::path> plan_frame_paths(const sampling::SamplingPlan& plan,
                                                    const std::filesystem::path& frames_root);

}  // namespace screentime::detection

#endif  // SCREENTIME_DETECTION_HPP_
