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

#include "screentime/pipeline.hpp"

#include <signal.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "screentime/annotation.hpp"
#include "screentime/detection.hpp"
#include "screentime/error.hpp"
#include "screentime/metrics.hpp"
#include "screentime/subprocess.hpp"

namespace screentime::pipeline {

using nlohmann::ordered_json;
using detection::FrameDetections;
using detection::Gender;

namespace {

constexpr const char* kSchema = "screentime.analysis/1";

Error missing(const std::string& what, const std::string& producer) {
  return Error(ErrorCode::MissingPrerequisite,
               producer.empty() ? what : fmt::format("{} (produced by `screentime {}`)", what, producer));
}

fs::path out_dir(const RunConfig& c) {
  if (!c.out) throw missing("--out is required", "");
  fs::create_directories(*c.out);
  return *c.out;
}

fs::path require_input(const std::optional<fs::path>& given, const fs::path& fallback, const std::string& flag,
                       const std::string& producer) {
  const fs::path p = given ? *given : fallback;
  if (p.empty()) throw missing(flag + " is required", producer);
  if (!fs::exists(p)) throw missing(fmt::format("{} not found: {}", flag, p.string()), producer);
  return p;
}

fs::path default_in_out(const RunConfig& c, const char* name) { return c.out ? *c.out / name : fs::path(); }

ordered_json num(double v) { return round6(v); }

template <typename T>
ordered_json opt_num(const std::optional<T>& v) {
  if (!v) return nullptr;
  return num(static_cast<double>(*v));
}

ordered_json mean_sd_json(const metrics::MeanSd& m) {
  ordered_json j;
  j["n"] = m.n;
  j["mean"] = m.n ? ordered_json(num(m.mean)) : ordered_json(nullptr);
  j["sd"] = m.n ? ordered_json(num(m.sd)) : ordered_json(nullptr);
  return j;
}

ordered_json test_json(const stats::TestResult& t) {
  ordered_json j;
  j["statistic"] = num(t.statistic);
  j["df"] = t.df ? ordered_json(*t.df) : ordered_json(nullptr);
  j["p_value"] = num(t.p_value);
  j["method"] = stats::to_string(t.method);
  return j;
}

// Plan file -------------------------------------------------------------------------

std::vector<sampling::SamplingPlan> load_plans(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::vector<sampling::SamplingPlan> plans;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    try {
      if (j.is_discarded()) throw std::runtime_error("not JSON");
      sampling::SamplingPlan p;
      p.movie_id = j.at("movie_id").get<std::string>();
      p.interval_s = j.at("interval_s").get<double>();
      for (auto ms : j.at("timestamps_ms")) p.timestamps.push_back(ms.get<std::int64_t>() / 1000.0);
      plans.push_back(std::move(p));
    } catch (const std::exception& e) {
      throw Error(ErrorCode::MalformedRecord, fmt::format("plan {}: {}", path.string(), e.what()));
    }
  }
  return plans;
}

std::optional<fs::path> find_video(const fs::path& dir, const std::string& movie_id) {
  std::vector<fs::path> hits;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().stem() == movie_id) hits.push_back(entry.path());
  }
  if (hits.empty()) return std::nullopt;
  std::sort(hits.begin(), hits.end());
  return hits.front();
}

// Subcommands -------------------------------------------------------------------------

void cmd_plan(const RunConfig& c, std::ostream& log) {
  WarningLog warnings;
  const auto manifest = load_corpus(c, warnings);
  const auto dir = out_dir(c);
  std::string out;
  std::size_t frames = 0;
  for (const auto& movie : manifest.movies) {
    auto plan = sampling::build_plan(movie, c.interval_s);
    ordered_json j;
    j["movie_id"] = plan.movie_id;
    j["interval_s"] = plan.interval_s;
    j["runtime_s"] = movie.runtime_min * 60;
    j["timestamps_ms"] = plan.timestamps_ms();
    out += j.dump() + "\n";
    frames += plan.timestamps.size();
  }
  const auto target = c.plan ? *c.plan : dir / "plan.jsonl";
  write_file_atomic(target, out);
  write_warnings(dir, "plan", warnings);
  log << fmt::format("plan: {} movies, {} frames -> {}\n", manifest.size(), frames, target.string());
}

void cmd_extract(const RunConfig& c, std::ostream& log) {
  const auto dir = out_dir(c);
  const auto plan_path = require_input(c.plan, dir / "plan.jsonl", "plan file", "plan");
  if (!c.videos) throw missing("--videos is required", "");
  const auto frames_root = c.frames ? *c.frames : dir / "frames";
  WarningLog warnings;
  ordered_json report = ordered_json::array();
  std::vector<std::string> commands;
  const auto plans = load_plans(plan_path);
  for (const auto& plan : plans) {
    auto video = find_video(*c.videos, plan.movie_id);
    if (!video) {
      warnings.warn("missing-video", "no video file for movie", plan.movie_id);
      continue;
    }
    auto movie_cmds = sampling::render_extraction_commands(plan, c.extract_template, *video, frames_root);
    const auto ms = plan.timestamps_ms();
    for (std::size_t i = 0; i < movie_cmds.size(); ++i) {
      const auto frame = frames_root / sampling::frame_relative_path(plan.movie_id, ms[i]);
      std::error_code ec;
      if (!c.dry_run && fs::exists(frame, ec) && fs::file_size(frame, ec) > 0) continue;  // resumable
      commands.push_back(std::move(movie_cmds[i]));
    }
  }
  if (c.dry_run) {
    for (const auto& cmd : commands) log << cmd << "\n";
    return;
  }
  for (const auto& plan : plans) fs::create_directories(frames_root / plan.movie_id);
  std::mutex mu;
  std::optional<std::string> failure;
  parallel_for(commands.size(), c.jobs, [&](std::size_t i) {
    const int status = run_shell(commands[i]);
    if (status != 0) {
      std::lock_guard lock(mu);
      if (!failure) failure = fmt::format("exit status {}: {}", status, commands[i]);
    }
  });
  if (failure) throw Error(ErrorCode::ExternalCommandFailed, "frame extraction failed, " + *failure);
  std::size_t incomplete = 0;
  for (const auto& plan : plans) {
    auto v = sampling::verify_frames(plan, frames_root);
    ordered_json j;
    j["movie_id"] = plan.movie_id;
    j["frames"] = plan.timestamps.size();
    j["missing_ms"] = v.missing_ms;
    j["empty_ms"] = v.empty_ms;
    report.push_back(j);
    if (!v.complete()) {
      ++incomplete;
      warnings.warn("incomplete-frames", fmt::format("{} frame(s) missing or empty", v.incomplete_ms().size()),
                    plan.movie_id);
    }
  }
  write_file_atomic(dir / "extract_report.json", report.dump(2) + "\n");
  write_warnings(dir, "extract", warnings);
  log << fmt::format("extract: {} commands run, {} movie(s) incomplete\n", commands.size(), incomplete);
}

void cmd_detect(const RunConfig& c, std::ostream& log) {
  const auto dir = out_dir(c);
  const auto plan_path = require_input(c.plan, dir / "plan.jsonl", "plan file", "plan");
  if (c.detector.empty()) throw missing("--detector is required", "");
  const auto frames_root = c.frames ? *c.frames : dir / "frames";
  std::vector<fs::path> frames;
  for (const auto& plan : load_plans(plan_path)) {
    auto v = sampling::verify_frames(plan, frames_root);
    if (!v.complete()) {
      throw missing(fmt::format("{} frame(s) of movie {} missing under {}", v.incomplete_ms().size(),
                                plan.movie_id, frames_root.string()),
                    "extract");
    }
    for (auto& p : detection::plan_frame_paths(plan, frames_root)) frames.push_back(std::move(p));
  }
  const auto target = c.detections ? *c.detections : dir / "detections.jsonl";
  const auto tmp = fs::path(target.string() + ".tmp");
  std::ofstream out(tmp, std::ios::trunc);
  if (!out) throw Error(ErrorCode::Unreadable, "cannot write " + tmp.string());
  auto run = detection::run_external_detector(c.detector, frames, [&out](const detection::FaceDetection& rec) {
    out << detection::to_json_line(rec) << '\n';
  });
  out.close();
  if (!out) throw Error(ErrorCode::Unreadable, "failed writing " + tmp.string());
  fs::rename(tmp, target);
  ordered_json report;
  report["frames"] = run.frames;
  report["records"] = run.records;
  report["invalid"] = run.tally.invalid;
  report["invalid_by_reason"] = run.tally.by_reason;
  write_file_atomic(dir / "detect_report.json", report.dump(2) + "\n");
  log << fmt::format("detect: {} frames, {} records -> {}\n", run.frames, run.records, target.string());
}

void cmd_ingest(const RunConfig& c, std::ostream& log) {
  const auto dir = out_dir(c);
  const auto input = require_input(c.detections, dir / "detections.jsonl", "--detections", "detect");
  const auto store = c.store ? *c.store : dir / "store";
  auto report = detection::ingest_detections(input, store);
  ordered_json j;
  j["movies"] = report.movies;
  j["lines"] = report.tally.lines;
  j["invalid"] = report.tally.invalid;
  j["invalid_by_reason"] = report.tally.by_reason;
  j["faces"] = report.summary.faces;
  j["frames_with_faces"] = report.summary.frames_with_faces;
  j["female"] = report.summary.female;
  j["male"] = report.summary.male;
  j["mean_faces_per_movie"] = num(report.summary.mean_faces_per_movie());
  j["sd_faces_per_movie"] = num(report.summary.sd_faces_per_movie());
  write_file_atomic(dir / "ingest_report.json", j.dump(2) + "\n");
  log << fmt::format("ingest: {} records, {} invalid, {} movies -> {}\n", report.tally.lines, report.tally.invalid,
                     report.movies, store.string());
}

void cmd_calibrate_sample(const RunConfig& c, std::ostream& log) {
  WarningLog warnings;
  const auto manifest = load_corpus(c, warnings);
  const auto dir = out_dir(c);
  const auto input = require_input(c.detections, dir / "store", "--detections", "ingest");
  detection::DetectionReader reader(input);
  auto tasks = calibration::sample_tasks(reader, manifest, c.n_tasks, c.seed);
  const auto target = c.tasks ? *c.tasks : dir / "tasks.jsonl";
  write_file_atomic(target, calibration::tasks_to_jsonl(tasks));
  write_warnings(dir, "calibrate-sample", warnings);
  log << fmt::format("calibrate-sample: {} tasks -> {}\n", tasks.size(), target.string());
}

void cmd_calibrate_serve(const RunConfig& c, std::ostream& log) {
  const auto tasks_path = require_input(c.tasks, default_in_out(c, "tasks.jsonl"), "--tasks", "calibrate-sample");
  const auto frames_root = c.frames ? *c.frames : default_in_out(c, "frames");
  const auto log_path = c.reviews ? *c.reviews : default_in_out(c, "reviews.jsonl");
  if (log_path.empty()) throw missing("--reviews or --out is required", "");
  annotation::ReviewStore store(calibration::load_tasks(tasks_path), log_path, c.seed);
  annotation::AnnotationServer server(store, frames_root, c.ui);

  // Block termination signals here so the waiter thread receives them.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  const int port = server.bind(c.host, c.port);
  if (port < 0) throw Error(ErrorCode::InvalidArgument, fmt::format("cannot bind {}:{}", c.host, c.port));
  log << fmt::format("calibrate-serve: http://{}:{}/ ({} log)\n", c.host, port, log_path.string()) << std::flush;
  std::thread waiter([&server, set] {
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
  });
  server.serve();
  // serve() may also end without a signal; wake the waiter.
  ::kill(::getpid(), SIGTERM);
  waiter.join();
}

void cmd_calibrate_compute(const RunConfig& c, std::ostream& log) {
  WarningLog warnings;
  const auto manifest = load_corpus(c, warnings);
  const auto dir = out_dir(c);
  if (!c.reviews) throw missing("--reviews (review export CSV) is required", "calibrate-serve");
  const auto reviews = require_input(c.reviews, {}, "--reviews", "calibrate-serve");
  const auto rows = calibration::load_review_export(reviews);
  const auto tasks = calibration::adjudicate(rows);
  const auto confusions = calibration::build_confusions(tasks);
  const auto partition = corpus::split_periods(manifest, c.periods);
  const auto factors = calibration::factors_by_period(tasks, partition, manifest, c.min_tasks, &warnings);
  const auto target = c.factors ? *c.factors : dir / "factors.json";
  write_file_atomic(target, factors.to_json());
  write_file_atomic(dir / "confusions.json", calibration::confusions_to_json(confusions));
  write_warnings(dir, "calibrate-compute", warnings);
  log << fmt::format("calibrate-compute: {} review rows, {} adjudicated tasks, face accuracy {}, gender accuracy {}\n",
                     rows.size(), tasks.size(), fixed6(confusions.face.accuracy()),
                     fixed6(confusions.gender.accuracy()));
}

void cmd_analyze(const RunConfig& c, std::ostream& log) {
  WarningLog warnings;
  const auto manifest = load_corpus(c, warnings);
  const auto dir = out_dir(c);
  const auto partition = corpus::split_periods(manifest, c.periods);
  calibration::CorrectionFactors factors;
  if (c.uncorrected) {
    factors = calibration::CorrectionFactors::identity(partition.labels());
  } else {
    if (!c.factors) {
      throw missing("--factors is required unless --uncorrected is given", "calibrate-compute");
    }
    const auto path = require_input(c.factors, {}, "--factors", "calibrate-compute");
    factors = calibration::CorrectionFactors::load(path);
    for (const auto& label : partition.labels()) {
      if (!factors.by_period.count(label)) {
        throw Error(ErrorCode::UnknownPeriod,
                    fmt::format("factors file has no entry for period {}; rerun calibrate-compute with --periods {}",
                                label, c.periods));
      }
      calibration::require_identifiable(factors.at(label).pair());
    }
  }
  const auto input = require_input(c.detections, dir / "store", "--detections", "ingest");
  AnalysisOptions opts;
  opts.jobs = c.jobs;
  opts.top_genres = c.top_genres;
  opts.bin_width_pct = c.bin_width_pct;
  opts.corrected = !c.uncorrected;
  auto doc = analyze_detections(manifest, partition, factors, input, opts, warnings);
  doc["config"]["periods"] = c.periods;
  doc["config"]["seed"] = c.seed;
  const auto target = c.analysis ? *c.analysis : dir / "analysis.json";
  write_file_atomic(target, doc.dump(2) + "\n");
  write_warnings(dir, "analyze", warnings);
  log << fmt::format("analyze: {} movies, {} warnings -> {}\n", manifest.size(), warnings.size(), target.string());
}

void cmd_report(const RunConfig& c, std::ostream& log) {
  const auto dir = out_dir(c);
  const auto path = require_input(c.analysis, dir / "analysis.json", "analysis file", "analyze");
  auto doc = ordered_json::parse(read_file(path), nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || doc.value("schema", "") != kSchema) {
    throw Error(ErrorCode::MalformedRecord, "not an analysis document: " + path.string());
  }
  const auto report_dir = dir / "report";
  fs::create_directories(report_dir);
  const auto files = render_report(doc);
  for (const auto& [name, content] : files) write_file_atomic(report_dir / name, content);
  log << fmt::format("report: {} files -> {}\n", files.size(), report_dir.string());
}

}  // namespace

// Shared helpers ---------------------------------------------------------------------

int exit_code_for(const Error& e) {
  switch (classify(e.code())) {
    case ErrorClass::Usage: return 1;
    case ErrorClass::External: return 3;
    case ErrorClass::Data: return 2;
  }
  return 2;
}

void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, jobs), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void write_warnings(const fs::path& dir, const std::string& stage, const WarningLog& warnings) {
  const auto path = dir / "warnings.jsonl";
  std::string out;
  if (fs::exists(path)) {
    std::istringstream in(read_file(path));
    std::string line;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      auto j = nlohmann::json::parse(line, nullptr, false);
      if (!j.is_discarded() && j.is_object() && j.value("stage", "") == stage) continue;
      out += line + "\n";
    }
  }
  for (const auto& w : warnings.entries()) {
    ordered_json j;
    j["stage"] = stage;
    j["code"] = w.code;
    j["message"] = w.message;
    j["context"] = w.context;
    out += j.dump() + "\n";
  }
  write_file_atomic(path, out);
}

corpus::CorpusManifest load_corpus(const RunConfig& c, WarningLog& warnings) {
  if (!c.manifest) throw missing("--manifest is required", "");
  if (!fs::exists(*c.manifest)) throw missing("manifest not found: " + c.manifest->string(), "");
  auto manifest = corpus::load_manifest(*c.manifest);
  for (const auto& r : manifest.provenance.rejected) {
    warnings.warn("manifest-row-rejected", r.reason, fmt::format("line {} {}", r.line, r.id));
  }
  if (c.filter) {
    corpus::FilterReport fr;
    auto provenance = manifest.provenance;
    manifest = corpus::filter_corpus(manifest, c.criteria, &fr);
    manifest.provenance = provenance;
    if (manifest.empty()) throw Error(ErrorCode::EmptyManifest, "no movie passes the corpus filter");
  }
  if (c.bechdel_cache) {
    corpus::BechdelCache cache(*c.bechdel_cache);
    std::unique_ptr<corpus::BechdelClient> client;
    if (c.bechdel_fetch) client = std::make_unique<corpus::HttpBechdelClient>(c.bechdel_url);
    manifest = corpus::enrich_bechdel(manifest, cache, client.get(), &warnings);
  }
  return manifest;
}

// Analysis ---------------------------------------------------------------------------

namespace {

struct MoviePartial {
  std::string movie_id;
  std::uint64_t female = 0;
  std::uint64_t male = 0;
  detection::DetectionSummary summary;
  std::optional<metrics::FramingPartial> framing;
};

struct GroupResult {
  detection::ErrorTally tally;
  std::vector<MoviePartial> movies;
};

GroupResult process_group(const detection::DetectionReader& reader, std::size_t index,
                          const std::set<std::string>& framing_scope) {
  GroupResult out;
  auto frames = reader.read_group(index, out.tally);
  for (const auto& frame : frames) {
    if (out.movies.empty() || out.movies.back().movie_id != frame.movie_id) {
      out.movies.push_back({frame.movie_id, 0, 0, {}, std::nullopt});
      if (framing_scope.count(frame.movie_id)) out.movies.back().framing.emplace();
    }
    auto& m = out.movies.back();
    for (const auto& f : frame.faces) (f.gender == Gender::Female ? m.female : m.male) += 1;
    m.summary.add(frame);
    if (m.framing) m.framing->add(frame);
  }
  return out;
}

ordered_json thirds_grid(const std::array<std::uint64_t, 9>& counts) {
  ordered_json rows = ordered_json::array();
  for (int r = 0; r < 3; ++r) rows.push_back({counts[r * 3], counts[r * 3 + 1], counts[r * 3 + 2]});
  return rows;
}

ordered_json percent_grid(const std::optional<std::array<double, 9>>& p) {
  if (!p) return nullptr;
  ordered_json rows = ordered_json::array();
  for (int r = 0; r < 3; ++r) rows.push_back({num((*p)[r * 3]), num((*p)[r * 3 + 1]), num((*p)[r * 3 + 2])});
  return rows;
}

ordered_json key_json(const metrics::CombinationKey& k) {
  ordered_json j;
  j["key"] = metrics::key_label(k);
  j["n_female"] = k.first;
  j["n_male"] = k.second;
  return j;
}

}  // namespace

ordered_json analyze_detections(const corpus::CorpusManifest& manifest, const corpus::PeriodPartition& partition,
                                const calibration::CorrectionFactors& factors, const fs::path& detections,
                                const AnalysisOptions& options, WarningLog& warnings) {
  if (partition.periods.empty()) throw Error(ErrorCode::InvalidArgument, "empty period partition");
  const auto& latest = partition.periods.back();
  const std::set<std::string>& framing_scope = latest.movie_ids;

  detection::DetectionReader reader(detections);
  detection::ErrorTally tally;
  detection::DetectionSummary summary;
  metrics::FramingAccumulator framing;
  std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> counts;
  std::set<std::string> unknown;

  // Map over groups in windows, reduce each window in group (movie) order.
  const std::size_t groups = reader.group_count();
  const std::size_t window = std::max<std::size_t>(1, options.jobs) * 4;
  for (std::size_t start = 0; start < groups; start += window) {
    const std::size_t n = std::min(window, groups - start);
    std::vector<GroupResult> results(n);
    parallel_for(n, options.jobs,
                 [&](std::size_t i) { results[i] = process_group(reader, start + i, framing_scope); });
    for (auto& r : results) {
      tally.merge(r.tally);
      for (auto& m : r.movies) {
        if (!manifest.find(m.movie_id)) {
          unknown.insert(m.movie_id);
          continue;
        }
        summary.merge(m.summary);
        auto& c = counts[m.movie_id];
        c.first += m.female;
        c.second += m.male;
        if (m.framing) framing.absorb(*m.framing);
      }
    }
  }
  for (const auto& id : unknown) {
    warnings.warn("unknown-movie", "detections for a movie outside the corpus were ignored", id);
  }

  std::vector<metrics::MovieMetrics> movies;
  for (const auto& rec : manifest.movies) {
    auto idx = partition.period_of_movie(rec.id);
    if (!idx) continue;
    const auto label = partition.periods[*idx].label();
    auto it = counts.find(rec.id);
    const auto nf = it == counts.end() ? 0 : it->second.first;
    const auto nm = it == counts.end() ? 0 : it->second.second;
    auto m = metrics::movie_ffr(rec.id, nf, nm, factors.at(label).pair(), &warnings);
    m.period = label;
    movies.push_back(std::move(m));
  }

  ordered_json doc;
  doc["schema"] = kSchema;
  doc["config"] = {{"corrected", options.corrected},
                   {"bin_width_pct", options.bin_width_pct},
                   {"top_genres", options.top_genres},
                   {"tone_normalization", "per-histogram min-max of mean covariate rank"},
                   {"framing_labels", "raw"}};
  doc["corpus"] = {{"movies", manifest.size()},
                   {"rows_read", manifest.provenance.rows_read},
                   {"rows_rejected", manifest.provenance.rejected.size()}};
  ordered_json by_reason = ordered_json::object();
  for (const auto& [k, v] : tally.by_reason) by_reason[k] = v;
  doc["detections"] = {{"lines", tally.lines},
                       {"invalid", tally.invalid},
                       {"invalid_by_reason", by_reason},
                       {"faces", summary.faces},
                       {"frames_with_faces", summary.frames_with_faces},
                       {"female", summary.female},
                       {"male", summary.male},
                       {"movies_with_faces", summary.faces_per_movie.size()},
                       {"mean_faces_per_movie", num(summary.mean_faces_per_movie())},
                       {"sd_faces_per_movie", num(summary.sd_faces_per_movie())}};

  // Periods, factors and Bechdel rates.
  const auto bechdel_rates = metrics::bechdel_period_rates(manifest, partition);
  ordered_json periods = ordered_json::array();
  for (std::size_t i = 0; i < partition.periods.size(); ++i) {
    const auto& p = partition.periods[i];
    std::vector<double> ffr;
    for (const auto& m : movies) {
      if (m.period == p.label() && m.corrected_ffr) ffr.push_back(*m.corrected_ffr);
    }
    const auto& f = factors.at(p.label());
    ordered_json j;
    j["label"] = p.label();
    j["year_lo"] = p.year_lo;
    j["year_hi"] = p.year_hi;
    j["movies"] = p.movie_ids.size();
    j["ffr"] = mean_sd_json(metrics::mean_sd(ffr));
    j["lambda_male"] = num(f.lambda_male);
    j["lambda_female"] = num(f.lambda_female);
    j["factors_fallback"] = f.fallback;
    j["bechdel_covered"] = bechdel_rates[i].covered;
    j["bechdel_passed"] = bechdel_rates[i].passed;
    j["bechdel_pass_rate"] = opt_num(bechdel_rates[i].pass_rate);
    periods.push_back(j);
  }
  doc["periods"] = periods;

  ordered_json movie_rows = ordered_json::array();
  std::vector<double> all_ffr;
  for (const auto& m : movies) {
    ordered_json j;
    j["movie_id"] = m.movie_id;
    j["period"] = m.period;
    j["n_female_det"] = m.n_female_det;
    j["n_male_det"] = m.n_male_det;
    j["raw_ffr"] = opt_num(m.raw_ffr);
    j["corrected_ffr"] = opt_num(m.corrected_ffr);
    j["corrected_female"] = num(m.corrected_counts.female);
    j["corrected_male"] = num(m.corrected_counts.male);
    j["no_faces"] = m.no_faces();
    movie_rows.push_back(j);
    if (m.corrected_ffr) all_ffr.push_back(*m.corrected_ffr);
  }
  doc["movies"] = movie_rows;
  doc["ffr"] = mean_sd_json(metrics::mean_sd(all_ffr));

  // Genres.
  const auto genres = corpus::top_genres(manifest, options.top_genres);
  ordered_json genre_rows = ordered_json::array();
  for (const auto& g : metrics::aggregate_genre(movies, manifest, genres)) {
    genre_rows.push_back({{"genre", g.genre}, {"ffr", mean_sd_json(g.ffr)}});
  }
  doc["genres"] = genre_rows;

  // Histograms with covariate tones.
  ordered_json hists = ordered_json::array();
  auto hist_json = [&](const metrics::FfrHistogram& h, std::span<const metrics::MovieMetrics> scope) {
    ordered_json j;
    j["label"] = h.label;
    j["bin_width_pct"] = h.bin_width_pct;
    j["bins"] = h.bins;
    j["ffr"] = mean_sd_json(h.ffr);
    ordered_json tones = ordered_json::object();
    for (auto cov : metrics::all_covariates()) {
      const std::string name(metrics::to_string(cov));
      try {
        ordered_json t = ordered_json::array();
        for (const auto& v : metrics::covariate_projection(h, scope, manifest, cov)) t.push_back(opt_num(v));
        tones[name] = t;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoCovariate) throw;
        tones[name] = nullptr;
        warnings.warn("covariate-unavailable", e.what(), h.label);
      }
    }
    j["tones"] = tones;
    return j;
  };
  hists.push_back(hist_json(metrics::build_histogram("all", movies, options.bin_width_pct), movies));
  const auto per_period = metrics::period_histograms(movies, partition, options.bin_width_pct, &warnings);
  for (const auto& h : per_period) hists.push_back(hist_json(h, movies));
  doc["histograms"] = hists;

  // Bechdel versus FFR by genre.
  ordered_json bechdel;
  try {
    const auto cmp = metrics::bechdel_comparison(movies, manifest, genres);
    ordered_json rows = ordered_json::array();
    for (const auto& r : cmp.rows) {
      rows.push_back({{"genre", r.genre},
                      {"ffr", mean_sd_json(r.ffr)},
                      {"covered", r.covered},
                      {"passed", r.passed},
                      {"pass_rate", opt_num(r.pass_rate)}});
    }
    bechdel["genres"] = rows;
    bechdel["compared"] = cmp.compared;
    bechdel["spearman"] = num(cmp.spearman);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::TooFewGenres && e.code() != ErrorCode::ZeroVariance) throw;
    bechdel["unavailable"] = e.what();
    warnings.warn("bechdel-unavailable", e.what());
  }
  doc["bechdel"] = bechdel;

  // Framing, latest period, raw labels.
  ordered_json fr;
  fr["period"] = latest.label();
  fr["movies"] = latest.movie_ids.size();
  fr["faces"] = framing.faces;
  try {
    const auto s = framing.faceism.summarize();
    fr["faceism"] = {{"faces_female", s.faces[0]},
                     {"faces_male", s.faces[1]},
                     {"median_female", num(s.median[0])},
                     {"median_male", num(s.median[1])},
                     {"median_overall", num(s.overall_median)},
                     {"median_difference_male_minus_female", num(s.median_difference)},
                     {"tail_threshold_20pct", num(s.tail_threshold)},
                     {"mann_whitney", test_json(s.mann_whitney)}};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::EmptyGender) throw;
    fr["faceism"] = {{"unavailable", e.what()}};
    warnings.warn("faceism-unavailable", e.what(), latest.label());
  }

  const auto& comb = framing.combinations;
  const auto covering = comb.covering(metrics::kCombinationCoverage);
  ordered_json comb_rows = ordered_json::array();
  std::uint64_t cumulative = 0;
  const auto ranked = comb.ranked();
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const auto& k = ranked[i];
    cumulative += comb.frames.at(k);
    auto j = key_json(k);
    j["frames"] = comb.frames.at(k);
    j["share"] = num(comb.share(k));
    j["cumulative_share"] = num(static_cast<double>(cumulative) / static_cast<double>(comb.total));
    j["in_coverage_set"] = i < covering.size();
    comb_rows.push_back(j);
  }
  fr["combinations"] = {{"frames_with_faces", comb.total},
                        {"coverage_target", metrics::kCombinationCoverage},
                        {"coverage_keys", covering.size()},
                        {"ranked", comb_rows}};

  ordered_json thirds = ordered_json::array();
  for (const auto& [key, m] : framing.thirds) {
    auto j = key_json(key);
    for (Gender g : {Gender::Female, Gender::Male}) {
      const std::string name(detection::to_string(g));
      j[name] = {{"faces", m.total(g)},
                 {"counts", thirds_grid(m.counts[g == Gender::Female ? 0 : 1])},
                 {"percentages", percent_grid(m.percentages(g))}};
    }
    thirds.push_back(j);
  }
  fr["thirds"] = thirds;

  ordered_json tests = ordered_json::array();
  try {
    for (const auto& t : metrics::thirds_independence(framing.thirds, covering)) {
      ordered_json j;
      j["a"] = t.a.label();
      j["b"] = t.b.label();
      j["grid"] = t.grid ? test_json(*t.grid) : ordered_json(nullptr);
      j["horizontal"] = t.horizontal ? test_json(*t.horizontal) : ordered_json(nullptr);
      j["vertical"] = t.vertical ? test_json(*t.vertical) : ordered_json(nullptr);
      j["notes"] = t.notes;
      tests.push_back(j);
    }
    fr["thirds_tests"] = tests;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::InsufficientData) throw;
    fr["thirds_tests"] = {{"unavailable", e.what()}};
    warnings.warn("thirds-tests-unavailable", e.what(), latest.label());
  }
  doc["framing"] = fr;
  return doc;
}

// Report ----------------------------------------------------------------------------

namespace {

std::string cell(const ordered_json& v) {
  if (v.is_null()) return "";
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_float()) return fixed6(v.get<double>());
  if (v.is_number()) return v.dump();
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

std::string csv(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::string out = csv_join(header) + "\n";
  for (const auto& r : rows) out += csv_join(r) + "\n";
  return out;
}

ordered_json field(const ordered_json& j, const char* key) {
  return j.is_object() && j.contains(key) ? j[key] : ordered_json(nullptr);
}

std::string doc_text(const ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::map<std::string, std::string> render_report(const ordered_json& a) {
  std::map<std::string, std::string> files;

  {
    std::vector<std::vector<std::string>> rows;
    for (const auto& m : a.at("movies")) {
      rows.push_back({cell(m["movie_id"]), cell(m["period"]), cell(m["n_female_det"]), cell(m["n_male_det"]),
                      cell(m["raw_ffr"]), cell(m["corrected_ffr"]), cell(m["corrected_female"]),
                      cell(m["corrected_male"]), cell(m["no_faces"])});
    }
    files["ffr_by_movie.csv"] = csv({"movie_id", "period", "n_female_det", "n_male_det", "raw_ffr", "corrected_ffr",
                                     "corrected_female", "corrected_male", "no_faces"},
                                    rows);
    files["ffr_by_movie.json"] = doc_text(a.at("movies"));
  }
  {
    std::vector<std::vector<std::string>> rows;
    for (const auto& p : a.at("periods")) {
      rows.push_back({cell(p["label"]), cell(p["year_lo"]), cell(p["year_hi"]), cell(p["movies"]),
                      cell(p["ffr"]["n"]), cell(p["ffr"]["mean"]), cell(p["ffr"]["sd"]), cell(p["lambda_male"]),
                      cell(p["lambda_female"]), cell(p["factors_fallback"]), cell(p["bechdel_covered"]),
                      cell(p["bechdel_pass_rate"])});
    }
    rows.push_back({"all", "", "", cell(a["corpus"]["movies"]), cell(a["ffr"]["n"]), cell(a["ffr"]["mean"]),
                    cell(a["ffr"]["sd"]), "", "", "", "", ""});
    files["ffr_by_period.csv"] =
        csv({"period", "year_lo", "year_hi", "movies", "movies_with_ffr", "mean_ffr", "sd_ffr", "lambda_male",
             "lambda_female", "factors_fallback", "bechdel_covered", "bechdel_pass_rate"},
            rows);
    ordered_json j;
    j["periods"] = a.at("periods");
    j["overall"] = a.at("ffr");
    files["ffr_by_period.json"] = doc_text(j);
  }
  {
    std::vector<std::vector<std::string>> rows;
    for (const auto& g : a.at("genres")) {
      rows.push_back({cell(g["genre"]), cell(g["ffr"]["n"]), cell(g["ffr"]["mean"]), cell(g["ffr"]["sd"])});
    }
    files["ffr_by_genre.csv"] = csv({"genre", "movies", "mean_ffr", "sd_ffr"}, rows);
    files["ffr_by_genre.json"] = doc_text(a.at("genres"));
  }
  {
    std::vector<std::string> header = {"histogram", "bin_lo_pct", "bin_hi_pct", "movies"};
    std::vector<std::string> covs;
    for (auto c : metrics::all_covariates()) {
      covs.emplace_back(metrics::to_string(c));
      header.push_back("tone_" + covs.back());
    }
    std::vector<std::vector<std::string>> rows;
    for (const auto& h : a.at("histograms")) {
      const double w = h["bin_width_pct"].get<double>();
      const auto& bins = h["bins"];
      for (std::size_t b = 0; b < bins.size(); ++b) {
        std::vector<std::string> r = {cell(h["label"]), fixed6(static_cast<double>(b) * w),
                                      fixed6(std::min(100.0, static_cast<double>(b + 1) * w)), cell(bins[b])};
        for (const auto& c : covs) {
          const auto& t = h["tones"][c];
          r.push_back(t.is_null() ? "" : cell(t[b]));
        }
        rows.push_back(std::move(r));
      }
    }
    files["ffr_histograms.csv"] = csv(header, rows);
    files["ffr_histograms.json"] = doc_text(a.at("histograms"));
  }
  {
    const auto& b = a.at("bechdel");
    std::vector<std::vector<std::string>> rows;
    if (b.contains("genres")) {
      for (const auto& g : b["genres"]) {
        rows.push_back({cell(g["genre"]), cell(g["ffr"]["mean"]), cell(g["covered"]), cell(g["passed"]),
                        cell(g["pass_rate"])});
      }
    }
    files["bechdel_by_genre.csv"] = csv({"genre", "mean_ffr", "bechdel_covered", "bechdel_passed", "pass_rate"}, rows);
    ordered_json j = b;
    ordered_json per = ordered_json::array();
    for (const auto& p : a.at("periods")) {
      per.push_back({{"label", p["label"]},
                     {"covered", p["bechdel_covered"]},
                     {"passed", p["bechdel_passed"]},
                     {"pass_rate", p["bechdel_pass_rate"]}});
    }
    j["periods"] = per;
    files["bechdel.json"] = doc_text(j);
  }

  const auto& fr = a.at("framing");
  files["faceism.json"] = doc_text({{"period", fr["period"]}, {"faceism", fr["faceism"]}});
  {
    std::vector<std::vector<std::string>> rows;
    for (const auto& k : fr["combinations"]["ranked"]) {
      if (!k["in_coverage_set"].get<bool>()) break;
      rows.push_back({cell(k["key"]), cell(k["n_female"]), cell(k["n_male"]), cell(k["frames"]), cell(k["share"]),
                      cell(k["cumulative_share"])});
    }
    files["combinations.csv"] =
        csv({"key", "n_female", "n_male", "frames", "share", "cumulative_share"}, rows);
    files["combinations.json"] = doc_text({{"period", fr["period"]}, {"combinations", fr["combinations"]}});
  }
  {
    std::vector<std::vector<std::string>> rows;
    static const char* kRows[] = {"top", "middle", "bottom"};
    static const char* kCols[] = {"left", "center", "right"};
    for (const auto& m : fr["thirds"]) {
      for (const char* g : {"female", "male"}) {
        const auto& side = m[g];
        if (side["faces"].get<std::uint64_t>() == 0) continue;
        for (int r = 0; r < 3; ++r) {
          for (int c = 0; c < 3; ++c) {
            rows.push_back({cell(m["key"]), g, kRows[r], kCols[c], cell(side["counts"][r][c]),
                            cell(side["percentages"][r][c])});
          }
        }
      }
    }
    files["thirds_matrices.csv"] = csv({"key", "gender", "row", "column", "faces", "percent"}, rows);
    files["thirds_matrices.json"] = doc_text({{"period", fr["period"]}, {"matrices", fr["thirds"]}});
  }
  {
    std::vector<std::vector<std::string>> rows;
    if (fr["thirds_tests"].is_array()) {
      for (const auto& t : fr["thirds_tests"]) {
        for (const char* table : {"grid", "horizontal", "vertical"}) {
          const auto& r = t[table];
          rows.push_back({cell(t["a"]), cell(t["b"]), table, cell(field(r, "statistic")), cell(field(r, "df")),
                          cell(field(r, "p_value"))});
        }
      }
    }
    files["thirds_tests.csv"] = csv({"config_a", "config_b", "table", "chi_square", "df", "p_value"}, rows);
    files["thirds_tests.json"] = doc_text({{"period", fr["period"]}, {"tests", fr["thirds_tests"]}});
  }
  files["summary.json"] = doc_text({{"schema", a.at("schema")},
                                    {"config", a.at("config")},
                                    {"corpus", a.at("corpus")},
                                    {"detections", a.at("detections")},
                                    {"ffr", a.at("ffr")}});
  return files;
}

// Dispatch ----------------------------------------------------------------------------

void run(const std::string& subcommand, const RunConfig& config, std::ostream& log) {
  if (subcommand == "plan") return cmd_plan(config, log);
  if (subcommand == "extract") return cmd_extract(config, log);
  if (subcommand == "detect") return cmd_detect(config, log);
  if (subcommand == "ingest") return cmd_ingest(config, log);
  if (subcommand == "calibrate-sample") return cmd_calibrate_sample(config, log);
  if (subcommand == "calibrate-serve") return cmd_calibrate_serve(config, log);
  if (subcommand == "calibrate-compute") return cmd_calibrate_compute(config, log);
  if (subcommand == "analyze") return cmd_analyze(config, log);
  if (subcommand == "report") return cmd_report(config, log);
  throw Error(ErrorCode::InvalidArgument, "unknown subcommand " + subcommand);
}

}  // namespace screentime::pipeline
