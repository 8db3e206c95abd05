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

// Subcommand orchestration. Every stage reads file artifacts and writes new
// ones atomically; `analyze` produces analysis.json and `report` renders it
// into CSV, JSON and plot-data files without touching detections again.

#ifndef SCREENTIME_PIPELINE_HPP_
#define SCREENTIME_PIPELINE_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "screentime/calibration.hpp"
#include "screentime/corpus.hpp"
#include "screentime/io.hpp"
#include "screentime/sampling.hpp"

namespace screentime::pipeline {

namespace fs = std::filesystem;

struct RunConfig {
  std::optional<fs::path> manifest;
  std::optional<fs::path> detections;
  std::optional<fs::path> factors;
  std::optional<fs::path> out;
  std::optional<fs::path> plan;
  std::optional<fs::path> frames;
  std::optional<fs::path> videos;
  std::optional<fs::path> store;
  std::optional<fs::path> tasks;
  std::optional<fs::path> reviews;
  std::optional<fs::path> analysis;
  std::optional<fs::path> ui;
  std::optional<fs::path> bechdel_cache;

  int periods = 4;
  double interval_s = sampling::kDefaultIntervalS;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  bool uncorrected = false;

  std::string extract_template = sampling::kDefaultExtractTemplate;
  std::string detector;
  bool dry_run = false;
  std::size_t n_tasks = 1000;
  std::size_t min_tasks = calibration::kDefaultMinTasksPerPeriod;
  std::size_t top_genres = 10;
  double bin_width_pct = 5.0;
  std::string host = "127.0.0.1";
  int port = 8080;
  bool bechdel_fetch = false;
  std::string bechdel_url = "http://bechdeltest.com";

  bool filter = true;
  corpus::FilterCriteria criteria;
};

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {"plan",
                                                 "extract",
                                                 "detect",
                                                 "ingest",
                                                 "calibrate-sample",
                                                 "calibrate-serve",
                                                 "calibrate-compute",
                                                 "analyze",
                                                 "report"};
  return names;
}

/// Runs one subcommand. Errors propagate as screentime::Error.
void run(const std::string& subcommand, const RunConfig& config, std::ostream& log);

/// Exit status for an error class: 1 usage, 2 data, 3 external process.
int exit_code_for(const Error& e);

// Pieces exposed for tests ---------------------------------------------------------

/// Manifest load, optional filtering and Bechdel enrichment as the
/// subcommands do it.
corpus::CorpusManifest load_corpus(const RunConfig& config, WarningLog& warnings);

struct AnalysisOptions {
  unsigned jobs = 1;
  std::size_t top_genres = 10;
  double bin_width_pct = 5.0;
  bool corrected = true;
};

/// Single streaming pass over `detections` (file or directory) producing the
/// analysis document.
nlohmann::ordered_json analyze_detections(const corpus::CorpusManifest& manifest,
                                          const corpus::PeriodPartition& partition,
                                          const calibration::CorrectionFactors& factors,
                                          const fs::path& detections, const AnalysisOptions& options,
                                          WarningLog& warnings);

/// File name -> content for the report directory.
std::map<std::string, std::string> render_report(const nlohmann::ordered_json& analysis);

/// Writes a stage's warnings into <dir>/warnings.jsonl, replacing earlier
/// entries of the same stage and keeping the others.
void write_warnings(const fs::path& dir, const std::string& stage, const WarningLog& warnings);

/// Runs fn(0..count-1) on up to `jobs` threads; rethrows the first failure by
/// index.
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn);

}  // namespace screentime::pipeline

#endif  // SCREENTIME_PIPELINE_HPP_
