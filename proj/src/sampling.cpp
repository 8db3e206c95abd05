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

#include "screentime/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <system_error>

#include <fmt/format.h>

#include "screentime/error.hpp"

namespace screentime::sampling {

std::int64_t to_millis(double seconds) { return std::llround(seconds * 1000.0); }

std::vector<std::int64_t> SamplingPlan::timestamps_ms() const {
  std::vector<std::int64_t> out;
  out.reserve(timestamps.size());
  for (double t : timestamps) out.push_back(to_millis(t));
  return out;
}

SamplingPlan build_plan(const std::string& movie_id, double duration_s, double interval_s) {
  if (!(interval_s > 0.0) || !std::isfinite(interval_s)) {
    throw Error(ErrorCode::InvalidArgument, "sampling interval must be positive");
  }
  if (!(duration_s > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "movie duration must be positive");
  }
  SamplingPlan plan;
  plan.movie_id = movie_id;
  plan.interval_s = interval_s;
  // Multiplying the index (rather than accumulating) keeps t_i exact for
  // decimal intervals; the relative slack absorbs i*interval rounding just
  // below the duration.
  const double slack = 1e-9 * duration_s;
  for (std::uint64_t i = 0;; ++i) {
    const double t = static_cast<double>(i) * interval_s;
    if (t >= duration_s - slack) break;
    plan.timestamps.push_back(t);
  }
  return plan;
}

SamplingPlan build_plan(const corpus::MovieRecord& movie, double interval_s) {
  if (movie.runtime_min <= 0) throw Error(ErrorCode::InvalidArgument, "runtime must be positive");
  return build_plan(movie.id, movie.runtime_min * 60.0, interval_s);
}

std::filesystem::path frame_relative_path(const std::string& movie_id, std::int64_t timestamp_ms) {
  return std::filesystem::path(movie_id) / fmt::format("{:09d}.jpg", timestamp_ms);
}

std::string shell_quote(const std::string& value) {
  std::string out = "'";
  for (char c : value) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out.push_back(c);
    }
  }
  out.push_back('\'');
  return out;
}

std::vector<std::string> render_extraction_commands(const SamplingPlan& plan,
                                                    const std::string& command_template,
                                                    const std::filesystem::path& input,
                                                    const std::filesystem::path& out_dir) {
  // Tokenize once: literal runs and placeholder names alternate.
  struct Piece {
    bool placeholder;
    std::string text;
  };
  std::vector<Piece> pieces;
  bool has_input = false, has_timestamp = false, has_output = false;
  std::size_t pos = 0;
  while (pos < command_template.size()) {
    auto open = command_template.find('{', pos);
    if (open == std::string::npos) {
      pieces.push_back({false, command_template.substr(pos)});
      break;
    }
    auto close = command_template.find('}', open);
    if (close == std::string::npos) {
      throw Error(ErrorCode::MalformedTemplate, "unterminated placeholder in template");
    }
    if (open > pos) pieces.push_back({false, command_template.substr(pos, open - pos)});
    std::string name = command_template.substr(open + 1, close - open - 1);
    if (name == "input") {
      has_input = true;
    } else if (name == "timestamp") {
      has_timestamp = true;
    } else if (name == "output") {
      has_output = true;
    } else {
      throw Error(ErrorCode::MalformedTemplate, "unknown placeholder {" + name + "}");
    }
    pieces.push_back({true, std::move(name)});
    pos = close + 1;
  }
  for (auto [present, name] : {std::pair{has_input, "input"}, std::pair{has_timestamp, "timestamp"},
                               std::pair{has_output, "output"}}) {
    if (!present) {
      throw Error(ErrorCode::MalformedTemplate, fmt::format("template lacks {{{}}}", name));
    }
  }

  const std::string quoted_input = shell_quote(input.string());
  std::vector<std::string> commands;
  commands.reserve(plan.timestamps.size());
  for (double t : plan.timestamps) {
    const auto ms = to_millis(t);
    const std::string output = shell_quote((out_dir / frame_relative_path(plan.movie_id, ms)).string());
    const std::string stamp = fmt::format("{}.{:03d}", ms / 1000, ms % 1000);
    std::string cmd;
    for (const auto& p : pieces) {
      if (!p.placeholder) {
        cmd += p.text;
      } else if (p.text == "input") {
        cmd += quoted_input;
      } else if (p.text == "timestamp") {
        cmd += stamp;
      } else {
        cmd += output;
      }
    }
    commands.push_back(std::move(cmd));
  }
  return commands;
}

std::vector<std::int64_t> VerificationReport::incomplete_ms() const {
  std::vector<std::int64_t> out = missing_ms;
  out.insert(out.end(), empty_ms.begin(), empty_ms.end());
  std::sort(out.begin(), out.end());
  return out;
}

VerificationReport verify_frames(const SamplingPlan& plan, const std::filesystem::path& frames_root) {
  VerificationReport report;
  for (auto ms : plan.timestamps_ms()) {
    const auto path = frames_root / frame_relative_path(plan.movie_id, ms);
    std::error_code ec;
    auto status = std::filesystem::status(path, ec);
    if (ec || !std::filesystem::is_regular_file(status)) {
      report.missing_ms.push_back(ms);
      continue;
    }
    if (std::filesystem::file_size(path, ec) == 0 || ec) report.empty_ms.push_back(ms);
  }
  return report;
}

}  // namespace screentime::sampling
