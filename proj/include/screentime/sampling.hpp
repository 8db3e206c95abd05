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

#ifndef SCREENTIME_SAMPLING_HPP_
#define SCREENTIME_SAMPLING_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "screentime/corpus.hpp"

namespace screentime::sampling {

inline constexpr double kDefaultIntervalS = 2.0;

inline constexpr const char* kDefaultExtractTemplate =
    "ffmpeg -nostdin -loglevel error -y -ss {timestamp} -i {input} -frames:v 1 -q:v 2 {output}";

struct SamplingPlan {
  std::string movie_id;
  double interval_s = kDefaultIntervalS;
  std::vector<double> timestamps;  // seconds, strictly increasing, < duration

  std::vector<std::int64_t> timestamps_ms() const;
};

/// Samples [0, duration) every `interval_s` seconds, starting at t = 0.
SamplingPlan build_plan(const std::string& movie_id, double duration_s, double interval_s);

/// Plan over the movie's full runtime.
SamplingPlan build_plan(const corpus::MovieRecord& movie, double interval_s);

std::int64_t to_millis(double seconds);

/// Relative frame path: <movie_id>/<timestamp_ms zero-padded to 9>.jpg.
std::filesystem::path frame_relative_path(const std::string& movie_id, std::int64_t timestamp_ms);

/// POSIX shell single-quoting.
std::string shell_quote(const std::string& value);

/// Expands `command_template` once per timestamp. The template must use
/// each of {input}, {timestamp} and {output} and no other placeholder;
/// {timestamp} renders as seconds with millisecond precision, paths are
/// shell-quoted.
std::vector<std::string> render_extraction_commands(const SamplingPlan& plan,
                                                    const std::string& command_template,
                                                    const std::filesystem::path& input,
                                                    const std::filesystem::path& out_dir);

struct VerificationReport {
  std::vector<std::int64_t> missing_ms;
  std::vector<std::int64_t> empty_ms;

  bool complete() const { return missing_ms.empty() && empty_ms.empty(); }
  /// Missing and zero-length timestamps together, ascending.
  std::vector<std::int64_t> incomplete_ms() const;
};

/// Checks `frames_root`/<movie_id>/<ts>.jpg for every planned timestamp.
VerificationReport verify_frames(const SamplingPlan& plan, const std::filesystem::path& frames_root);

}  // namespace screentime::sampling

#endif  // SCREENTIME_SAMPLING_HPP_
