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

// screentime: command-line front end of the pipeline.

#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "screentime/error.hpp"
#include "screentime/pipeline.hpp"

namespace {

using screentime::pipeline::RunConfig;

template <typename T>
void path_option(CLI::App& app, const std::string& name, std::optional<T>& target, const std::string& help) {
  app.add_option_function<std::string>(
         name, [&target](const std::string& v) { target = T(v); }, help)
      ->type_name("PATH");
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  cfg.jobs = std::max(1u, std::thread::hardware_concurrency());

  CLI::App app{"Gendered on-screen presence from face-detection records"};
  app.name("screentime");
  app.config_formatter(std::make_shared<CLI::ConfigINI>());
  app.set_config("--config", "", "flat key=value file mirroring the long flags; flags win");
  app.require_subcommand(1, 1);

  path_option(app, "--manifest", cfg.manifest, "movie manifest (CSV or JSON lines)");
  path_option(app, "--detections", cfg.detections, "detection records: raw file, directory or ingested store");
  path_option(app, "--factors", cfg.factors, "correction factors JSON");
  path_option(app, "--out", cfg.out, "output directory");
  path_option(app, "--plan", cfg.plan, "sampling plan (default OUT/plan.jsonl)");
  path_option(app, "--frames", cfg.frames, "frames root (default OUT/frames)");
  path_option(app, "--videos", cfg.videos, "directory of <movie_id>.<ext> video files");
  path_option(app, "--store", cfg.store, "ingest target (default OUT/store)");
  path_option(app, "--tasks", cfg.tasks, "annotation tasks (default OUT/tasks.jsonl)");
  path_option(app, "--reviews", cfg.reviews, "review log (serve) or review export CSV (compute)");
  path_option(app, "--analysis", cfg.analysis, "analysis document (default OUT/analysis.json)");
  path_option(app, "--ui", cfg.ui, "static frontend directory served at /");
  path_option(app, "--bechdel-cache", cfg.bechdel_cache, "Bechdel ratings cache (JSON lines)");

  app.add_option("--periods", cfg.periods, "number of periods")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--interval-s", cfg.interval_s, "sampling interval in seconds")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", cfg.seed, "random seed")->capture_default_str();
  app.add_option("--jobs", cfg.jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--uncorrected", cfg.uncorrected, "analyze without correction factors");
  app.add_option("--extract-template", cfg.extract_template, "frame extraction command template")
      ->capture_default_str();
  app.add_option("--detector", cfg.detector, "detector command (frame paths on stdin, records on stdout)");
  app.add_flag("--dry-run", cfg.dry_run, "print extraction commands without running them");
  app.add_option("--n-tasks", cfg.n_tasks, "annotation tasks to draw (even)")->capture_default_str();
  app.add_option("--min-tasks", cfg.min_tasks, "minimum adjudicated tasks per period")->capture_default_str();
  app.add_option("--top-genres", cfg.top_genres, "genres in genre aggregates")->capture_default_str();
  app.add_option("--bin-width", cfg.bin_width_pct, "histogram bin width in percent")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 100.0));
  app.add_option("--host", cfg.host, "bind address")->capture_default_str();
  app.add_option("--port", cfg.port, "bind port, 0 picks one")->capture_default_str();
  app.add_flag("--bechdel-fetch", cfg.bechdel_fetch, "query the Bechdel service for uncached movies");
  app.add_option("--bechdel-url", cfg.bechdel_url, "Bechdel service base URL")->capture_default_str();
  bool no_filter = false;
  app.add_flag("--no-filter", no_filter, "skip the corpus filter");
  app.add_option("--year-lo", cfg.criteria.year_lo, "first corpus year")->capture_default_str();
  app.add_option("--year-hi", cfg.criteria.year_hi, "last corpus year")->capture_default_str();
  app.add_option("--min-seeders", cfg.criteria.min_seeders, "minimum seeders")->capture_default_str();
  std::vector<std::string> excluded;
  app.add_option("--exclude-genres", excluded, "excluded genres (default Animation,Documentary)")->delimiter(',');

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"plan", "write the fixed-interval frame sampling plan"},
      {"extract", "run the frame extraction command for every planned frame"},
      {"detect", "run the external detector over extracted frames"},
      {"ingest", "validate raw detections and build the per-movie store"},
      {"calibrate-sample", "draw single-face annotation tasks"},
      {"calibrate-serve", "serve the annotation API and frontend"},
      {"calibrate-compute", "confusion matrices and correction factors from a review export"},
      {"analyze", "presence and framing metrics"},
      {"report", "render CSV, JSON and plot data from the analysis"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  cfg.filter = !no_filter;
  if (!excluded.empty()) cfg.criteria.excluded_genres = {excluded.begin(), excluded.end()};

  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    screentime::pipeline::run(sub, cfg, std::cout);
    return 0;
  } catch (const screentime::Error& e) {
    std::cerr << fmt::format("screentime {}: {}\n", sub, e.what());
    return screentime::pipeline::exit_code_for(e);
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << fmt::format("screentime {}: {}\n", sub, e.what());
    return 2;
  }
}
