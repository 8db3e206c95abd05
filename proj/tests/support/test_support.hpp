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

// Helpers shared by unit and acceptance tests: scratch directories,
// synthetic manifests and detection streams, and a subprocess runner for
// the CLI.

#ifndef SCREENTIME_TESTS_SUPPORT_TEST_SUPPORT_HPP_
#define SCREENTIME_TESTS_SUPPORT_TEST_SUPPORT_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "screentime/calibration.hpp"
#include "screentime/detection.hpp"
#include "screentime/random.hpp"

namespace screentime::testing {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

void write_text(const fs::path& path, const std::string& text);

struct SyntheticMovie {
  std::string id;
  int year = 2000;
  std::vector<std::string> genres{"Drama"};
  std::uint64_t budget = 1000000;
  std::uint64_t gross = 2000000;
  double rating_value = 6.5;
  std::uint64_t rating_count = 1000;
  std::optional<double> female_rating_share;
  std::optional<int> bechdel_score;
  int runtime_min = 100;
};

/// CSV manifest with the canonical columns plus bechdel_score.
std::string manifest_csv(const std::vector<SyntheticMovie>& movies);

/// One detection record per face; boxes are uniform within the frame.
struct DetectionSpec {
  std::string movie_id;
  std::uint64_t faces = 0;
  double female_share = 0.5;   // probability a face is labelled female
  int max_faces_per_frame = 3;
};

std::vector<detection::FaceDetection> synthetic_detections(const std::vector<DetectionSpec>& specs,
                                                           std::uint64_t seed);

void write_detections(const fs::path& path, const std::vector<detection::FaceDetection>& records);

/// Streams `records_per_movie` records per movie straight to a file without
/// building them in memory.
void write_bulk_detections(const fs::path& path, const std::vector<std::string>& movie_ids,
                           std::uint64_t records_per_movie, std::uint64_t seed);

/// Detection labels for a movie whose true female share is `true_ffr`,
/// passed through a classifier whose detected-female precision is
/// `lambda_female` and detected-male precision `lambda_male`.
/// Returns (detected female, detected male).
std::pair<std::uint64_t, std::uint64_t> corrupt_labels(double true_ffr, std::uint64_t faces,
                                                       const calibration::CorrectionPair& precision, Rng& rng);

/// Review export rows for 1000 single-face tasks (500 per detected gender)
/// whose majorities reproduce the published evaluation counts: face
/// tp/fp/fn/tn 977/23/137/863, detected-female answers 304/162/18/16 and
/// detected-male answers 75/410/8/7 (female/male/doubt/no face). Each task
/// gets three reviews; the third reviewer dissents on every other task so
/// the majority rule is exercised.
std::vector<calibration::ReviewRow> published_review_rows();

struct CommandResult {
  int status = 0;
  std::string out;
  std::string err;
};

/// Runs a shell command, capturing both streams.
CommandResult run_command(const std::string& command);

/// Peak resident set of finished children, in kilobytes.
long children_peak_rss_kb();

/// Lexicographically sorted relative paths and bytes of every file below dir.
std::vector<std::pair<std::string, std::string>> tree_snapshot(const fs::path& dir);

}  // namespace screentime::testing

#endif  // SCREENTIME_TESTS_SUPPORT_TEST_SUPPORT_HPP_
