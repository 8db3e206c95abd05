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

#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <thread>

#include <fmt/format.h>

#include "screentime/detection.hpp"
#include "screentime/io.hpp"
#include "screentime/subprocess.hpp"

namespace screentime::detection {

namespace {

constexpr std::size_t kMaxDiagnostics = 64 * 1024;

bool write_all(int fd, std::string_view data) {
  while (!data.empty()) {
    auto n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

// Line reader over a raw descriptor; avoids stdio buffering surprises when
// the descriptor is shared with a child.
class FdLines {
 public:
  explicit FdLines(int fd) : fd_(fd) {}

  bool next(std::string& line) {
    while (true) {
      auto nl = buf_.find('\n', scan_);
      if (nl != std::string::npos) {
        line.assign(buf_, 0, nl);
        buf_.erase(0, nl + 1);
        scan_ = 0;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
      }
      scan_ = buf_.size();
      char chunk[8192];
      auto n = ::read(fd_, chunk, sizeof chunk);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) {
        if (buf_.empty()) return false;
        line = std::move(buf_);
        buf_.clear();
        scan_ = 0;
        return true;
      }
      buf_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  int fd_;
  std::string buf_;
  std::size_t scan_ = 0;
};

}  // namespace

DetectorRun run_external_detector(const std::string& command, const std::vector<std::filesystem::path>& frames,
                                  const std::function<void(const FaceDetection&)>& sink,
                                  double max_invalid_fraction) {
  Subprocess child(command);
  DetectorRun run;

  std::thread writer([&child, &frames] {
    for (const auto& f : frames) {
      if (!write_all(child.stdin_fd(), f.string() + "\n")) break;
    }
    child.close_stdin();
  });
  std::string diagnostics;
  std::thread err_reader([&child, &diagnostics] {
    char chunk[4096];
    while (true) {
      auto n = ::read(child.stderr_fd(), chunk, sizeof chunk);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) break;
      if (diagnostics.size() < kMaxDiagnostics) diagnostics.append(chunk, static_cast<std::size_t>(n));
    }
  });
  auto finish_threads = [&] {
    writer.join();
    err_reader.join();
  };

  std::optional<std::string> violation;
  FdLines lines(child.stdout_fd());
  std::string line;
  while (lines.next(line)) {
    if (trim(line).empty()) {
      ++run.frames;
      continue;
    }
    ++run.tally.lines;
    auto parsed = parse_detection(line);
    if (auto* rec = std::get_if<FaceDetection>(&parsed)) {
      ++run.records;
      sink(*rec);
      continue;
    }
    const auto code = std::get<ErrorCode>(parsed);
    if (code == ErrorCode::MalformedRecord) {
      violation = fmt::format("detector emitted a non-record line: {:.120}", line);
      break;
    }
    run.tally.record_invalid(code);
  }
  if (violation) child.terminate();
  finish_threads();
  const int status = child.wait();
  run.diagnostics = std::move(diagnostics);

  if (violation) throw Error(ErrorCode::ProtocolViolation, *violation);
  if (status != 0) {
    throw Error(ErrorCode::DetectorFailed,
                fmt::format("detector exited with status {}; stderr: {}", status, trim(run.diagnostics)));
  }
  if (run.frames != frames.size()) {
    throw Error(ErrorCode::ProtocolViolation,
                fmt::format("detector terminated {} frames, {} were sent", run.frames, frames.size()));
  }
  if (run.tally.lines > 0 &&
      static_cast<double>(run.tally.invalid) / static_cast<double>(run.tally.lines) > max_invalid_fraction) {
    throw Error(ErrorCode::CorruptInput,
                fmt::format("detector produced {} invalid records of {}", run.tally.invalid, run.tally.lines));
  }
  return run;
}

}  // namespace screentime::detection
