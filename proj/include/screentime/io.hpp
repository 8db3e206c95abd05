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

// Small file and text helpers shared by every stage of the pipeline.

#ifndef SCREENTIME_IO_HPP_
#define SCREENTIME_IO_HPP_

#include <filesystem>
#include <istream>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace screentime {

namespace fs = std::filesystem;

/// Splits one CSV record (RFC 4180 quoting) read from `in`. Quoted fields may
/// span lines. Returns nullopt at end of input.
std::optional<std::vector<std::string>> read_csv_record(std::istream& in);

/// Quotes a field only when it contains a separator, quote or newline.
std::string csv_escape(std::string_view field);

std::string csv_join(const std::vector<std::string>& fields);

/// Fixed six-decimal rendering used for every floating-point report value.
std::string fixed6(double value);

/// Rounds to six decimals so JSON documents carry the same precision as CSV.
double round6(double value);

std::string_view trim(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);

/// Writes `content` to `path` through a sibling temp file and a rename, so a
/// reader never observes a partially written artifact.
void write_file_atomic(const fs::path& path, std::string_view content);

std::string read_file(const fs::path& path);

/// Structured warning sink. Warnings are kept in emission order and written
/// as JSON lines by the CLI.
struct Warning {
  std::string code;
  std::string message;
  std::string context;
};

class WarningLog {
 public:
  void warn(std::string code, std::string message, std::string context = {});
  std::vector<Warning> entries() const;
  std::size_t size() const;
  bool contains(std::string_view code) const;
  std::string to_jsonl() const;

 private:
  mutable std::mutex mu_;
  std::vector<Warning> entries_;
};

}  // namespace screentime

#endif  // SCREENTIME_IO_HPP_
