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

#include "screentime/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "screentime/error.hpp"

namespace screentime {

std::optional<std::vector<std::string>> read_csv_record(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) return std::nullopt;
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  std::size_t i = 0;
  while (true) {
    if (i == line.size()) {
      if (quoted) {
        // Quoted field continues on the next physical line.
        std::string next;
        if (!std::getline(in, next)) break;
        cur.push_back('\n');
        line = std::move(next);
        i = 0;
        continue;
      }
      break;
    }
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
    ++i;
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string csv_join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += csv_escape(fields[i]);
  }
  return out;
}

std::string fixed6(double value) {
  // Avoid "-0.000000" so goldens do not depend on the sign of tiny residues.
  if (std::fabs(value) < 5e-7) value = 0.0;
  return fmt::format("{:.6f}", value);
}

double round6(double value) {
  double r = std::round(value * 1e6) / 1e6;
  return r == 0.0 ? 0.0 : r;
}

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(ErrorCode::Unreadable, "cannot write " + tmp.string());
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::Unreadable, "short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Unreadable, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WarningLog::warn(std::string code, std::string message,
                      std::string context) {
  std::lock_guard lock(mu_);
  entries_.push_back({std::move(code), std::move(message), std::move(context)});
}

std::vector<Warning> WarningLog::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

std::size_t WarningLog::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

bool WarningLog::contains(std::string_view code) const {
  std::lock_guard lock(mu_);
  for (const auto& w : entries_) {
    if (w.code == code) return true;
  }
  return false;
}

std::string WarningLog::to_jsonl() const {
  std::lock_guard lock(mu_);
  std::string out;
  for (const auto& w : entries_) {
    nlohmann::ordered_json j;
    j["code"] = w.code;
    j["message"] = w.message;
    j["context"] = w.context;
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

}  // namespace screentime
