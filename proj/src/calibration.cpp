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

#include "screentime/calibration.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "screentime/error.hpp"
#include "screentime/sampling.hpp"

namespace screentime::calibration {

using nlohmann::ordered_json;

std::string_view to_string(InBox v) {
  switch (v) {
    case InBox::Female: return "female";
    case InBox::Male: return "male";
    case InBox::Doubt: return "doubt";
    case InBox::NoFace: return "no_face";
  }
  return "doubt";
}

std::string_view to_string(OutsideBox v) {
  switch (v) {
    case OutsideBox::Yes: return "yes";
    case OutsideBox::No: return "no";
    case OutsideBox::Doubt: return "doubt";
  }
  return "doubt";
}

std::optional<InBox> parse_in_box(std::string_view s) {
  if (s == "female") return InBox::Female;
  if (s == "male") return InBox::Male;
  if (s == "doubt") return InBox::Doubt;
  if (s == "no_face") return InBox::NoFace;
  return std::nullopt;
}

std::optional<OutsideBox> parse_outside_box(std::string_view s) {
  if (s == "yes") return OutsideBox::Yes;
  if (s == "no") return OutsideBox::No;
  if (s == "doubt") return OutsideBox::Doubt;
  return std::nullopt;
}

// Tasks -----------------------------------------------------------------------

std::string task_to_json(const AnnotationTask& task) {
  ordered_json j;
  j["task_id"] = task.task_id;
  j["movie_id"] = task.movie_id;
  j["frame_ts_ms"] = task.frame_ts_ms;
  j["bbox"] = {{"x", task.bbox.x}, {"y", task.bbox.y}, {"w", task.bbox.w}, {"h", task.bbox.h}};
  j["detected_gender"] = detection::to_string(task.detected_gender);
  j["frame"] = task.frame_ref;
  return j.dump();
}

AnnotationTask task_from_json(std::string_view line) {
  auto j = nlohmann::json::parse(line.begin(), line.end(), nullptr, false);
  try {
    if (j.is_discarded()) throw std::runtime_error("not JSON");
    AnnotationTask t;
    t.task_id = j.at("task_id").get<std::string>();
    t.movie_id = j.at("movie_id").get<std::string>();
    t.frame_ts_ms = j.at("frame_ts_ms").get<std::int64_t>();
    const auto& b = j.at("bbox");
    t.bbox = {b.at("x").get<double>(), b.at("y").get<double>(), b.at("w").get<double>(), b.at("h").get<double>()};
    auto g = detection::parse_gender(j.at("detected_gender").get<std::string>());
    if (!g) throw std::runtime_error("bad detected_gender");
    t.detected_gender = *g;
    t.frame_ref = j.at("frame").get<std::string>();
    return t;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::MalformedRecord, std::string("task record: ") + e.what());
  }
}

std::vector<AnnotationTask> load_tasks(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<AnnotationTask> tasks;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    tasks.push_back(task_from_json(line));
  }
  return tasks;
}

std::string tasks_to_jsonl(const std::vector<AnnotationTask>& tasks) {
  std::string out;
  for (const auto& t : tasks) {
    out += task_to_json(t);
    out.push_back('\n');
  }
  return out;
}

TaskSampler::TaskSampler(std::uint64_t seed) : rng_(seed) {}

void TaskSampler::observe(const detection::FrameDetections& frame) {
  if (frame.faces.size() != 1) return;
  const auto& face = frame.faces.front();
  auto& slot = pool_[face.movie_id][face.gender == Gender::Female ? 0 : 1];
  if (!slot) {
    slot = Candidate{1, face};
    return;
  }
  ++slot->seen;
  if (rng_.below(slot->seen) == 0) slot->face = face;
}

std::vector<AnnotationTask> TaskSampler::draw(std::size_t n, const corpus::CorpusManifest* manifest) {
  if (n < 2 || n % 2 != 0) throw Error(ErrorCode::InvalidArgument, "task count must be even and positive");
  const std::size_t half = n / 2;

  std::vector<std::string> female_movies, male_movies;
  std::size_t female_only = 0, male_only = 0, both = 0;
  for (const auto& [movie, slots] : pool_) {
    if (manifest && !manifest->find(movie)) continue;
    const bool f = slots[0].has_value();
    const bool m = slots[1].has_value();
    if (f) female_movies.push_back(movie);
    if (m) male_movies.push_back(movie);
    if (f && m) {
      ++both;
    } else if (f) {
      ++female_only;
    } else if (m) {
      ++male_only;
    }
  }
  const bool feasible = female_only + both >= half && male_only + both >= half &&
                        std::min(female_only, half) + std::min(male_only, half) + both >= n;
  if (!feasible) {
    throw Error(ErrorCode::InsufficientPool,
                fmt::format("need {} female-detected and {} male-detected single-face frames from {} distinct "
                            "movies; pool has {} movies with female candidates (shortfall {}), {} with male "
                            "candidates (shortfall {}), {} distinct movies",
                            half, half, n, female_movies.size(),
                            female_movies.size() >= half ? 0 : half - female_movies.size(), male_movies.size(),
                            male_movies.size() >= half ? 0 : half - male_movies.size(),
                            female_only + male_only + both));
  }

  rng_.shuffle(std::span<std::string>(female_movies));
  rng_.shuffle(std::span<std::string>(male_movies));

  std::set<std::string> used;
  std::vector<AnnotationTask> tasks;
  std::size_t both_taken = 0;
  for (const auto& movie : female_movies) {
    if (tasks.size() == half) break;
    const bool shared = pool_[movie][1].has_value();
    if (shared && male_only + (both - both_taken - 1) < half) continue;
    if (shared) ++both_taken;
    used.insert(movie);
    const auto& face = pool_[movie][0]->face;
    tasks.push_back({"", movie, face.frame_ts_ms, face.bbox, Gender::Female, ""});
  }
  std::size_t male_taken = 0;
  for (const auto& movie : male_movies) {
    if (male_taken == half) break;
    if (used.count(movie)) continue;
    const auto& face = pool_[movie][1]->face;
    tasks.push_back({"", movie, face.frame_ts_ms, face.bbox, Gender::Male, ""});
    ++male_taken;
  }
  if (tasks.size() != n) {
    throw Error(ErrorCode::InsufficientPool, "could not assign distinct movies to every task");
  }

  std::sort(tasks.begin(), tasks.end(),
            [](const AnnotationTask& a, const AnnotationTask& b) { return a.movie_id < b.movie_id; });
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    tasks[i].task_id = fmt::format("task-{:04d}", i + 1);
    tasks[i].frame_ref = sampling::frame_relative_path(tasks[i].movie_id, tasks[i].frame_ts_ms).generic_string();
  }
  return tasks;
}

std::vector<AnnotationTask> sample_tasks(detection::DetectionReader& frames, const corpus::CorpusManifest& manifest,
                                         std::size_t n, std::uint64_t seed) {
  TaskSampler sampler(seed);
  while (auto frame = frames.next()) {
    if (manifest.find(frame->movie_id)) sampler.observe(*frame);
  }
  return sampler.draw(n, &manifest);
}

// Reviews ---------------------------------------------------------------------

const std::vector<std::string>& review_export_columns() {
  static const std::vector<std::string> columns = {"task_id",     "movie_id", "frame_ts_ms", "detected_gender",
                                                   "reviewer_id", "in_box",   "outside_box", "submitted_at"};
  return columns;
}

std::string review_export_csv(const std::vector<ReviewRow>& rows) {
  std::string out = csv_join(review_export_columns()) + "\n";
  for (const auto& r : rows) {
    out += csv_join({r.task_id, r.movie_id, std::to_string(r.frame_ts_ms), std::string(detection::to_string(r.detected_gender)),
                     r.reviewer_id, std::string(to_string(r.in_box)), std::string(to_string(r.outside_box)),
                     r.submitted_at});
    out.push_back('\n');
  }
  return out;
}

std::vector<ReviewRow> parse_review_export(const std::string& text) {
  std::istringstream in(text);
  auto header = read_csv_record(in);
  if (!header) throw Error(ErrorCode::MalformedRecord, "review export is empty");
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < header->size(); ++i) index[std::string(trim((*header)[i]))] = i;
  for (const auto& c : review_export_columns()) {
    if (!index.count(c)) throw Error(ErrorCode::MalformedRecord, "review export lacks column " + c);
  }
  std::vector<ReviewRow> rows;
  std::size_t lineno = 1;
  while (auto fields = read_csv_record(in)) {
    ++lineno;
    if (fields->size() == 1 && trim((*fields)[0]).empty()) continue;
    if (fields->size() != header->size()) {
      throw Error(ErrorCode::MalformedRecord, fmt::format("review export row {} has {} fields", lineno, fields->size()));
    }
    auto get = [&](const char* name) { return std::string(trim((*fields)[index[name]])); };
    ReviewRow r;
    r.task_id = get("task_id");
    r.movie_id = get("movie_id");
    const auto ts = get("frame_ts_ms");
    auto [ptr, ec] = std::from_chars(ts.data(), ts.data() + ts.size(), r.frame_ts_ms);
    if (ec != std::errc() || ptr != ts.data() + ts.size()) {
      throw Error(ErrorCode::MalformedRecord, fmt::format("review export row {}: bad frame_ts_ms", lineno));
    }
    auto g = detection::parse_gender(get("detected_gender"));
    auto in_box = parse_in_box(get("in_box"));
    auto outside = parse_outside_box(get("outside_box"));
    if (!g || !in_box || !outside) {
      throw Error(ErrorCode::InvalidEnum, fmt::format("review export row {}: unknown answer value", lineno));
    }
    r.detected_gender = *g;
    r.in_box = *in_box;
    r.outside_box = *outside;
    r.reviewer_id = get("reviewer_id");
    r.submitted_at = get("submitted_at");
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ReviewRow> load_review_export(const std::filesystem::path& path) {
  return parse_review_export(read_file(path));
}

namespace {

template <typename T>
std::optional<T> plurality(const std::vector<T>& answers) {
  std::map<T, std::size_t> counts;
  for (const auto& a : answers) ++counts[a];
  std::optional<T> best;
  std::size_t best_count = 0;
  bool tied = false;
  for (const auto& [value, count] : counts) {
    if (count > best_count) {
      best = value;
      best_count = count;
      tied = false;
    } else if (count == best_count) {
      tied = true;
    }
  }
  if (tied) return std::nullopt;
  return best;
}

}  // namespace

Majority aggregate_reviews(std::span<const Review> reviews) {
  if (reviews.empty()) throw Error(ErrorCode::InvalidArgument, "no reviews to aggregate");
  std::vector<InBox> inside;
  std::vector<OutsideBox> outside;
  for (const auto& r : reviews) {
    inside.push_back(r.in_box);
    outside.push_back(r.outside_box);
  }
  return {plurality(inside), plurality(outside)};
}

std::vector<AdjudicatedTask> adjudicate(std::span<const ReviewRow> rows) {
  struct Group {
    std::string movie_id;
    Gender detected = Gender::Female;
    std::vector<Review> reviews;
  };
  std::map<std::string, Group> groups;
  for (const auto& r : rows) {
    auto& g = groups[r.task_id];
    if (g.reviews.empty()) {
      g.movie_id = r.movie_id;
      g.detected = r.detected_gender;
    }
    g.reviews.push_back({r.task_id, r.reviewer_id, r.in_box, r.outside_box, r.submitted_at});
  }
  std::vector<AdjudicatedTask> out;
  for (const auto& [task_id, g] : groups) {
    auto majority = aggregate_reviews(g.reviews);
    if (!majority.in_box) continue;
    out.push_back({task_id, g.movie_id, g.detected, *majority.in_box, majority.outside_box});
  }
  return out;
}

// Confusions ------------------------------------------------------------------

double FaceConfusion::accuracy() const {
  if (total() == 0) return 0.0;
  return static_cast<double>(tp + tn) / static_cast<double>(total());
}

namespace {
std::size_t row_of(Gender g) { return g == Gender::Female ? 0 : 1; }
std::size_t col_of(InBox a) { return static_cast<std::size_t>(a); }
}  // namespace

std::uint64_t& GenderConfusion::at(Gender detected, InBox answer) {
  return counts[row_of(detected)][col_of(answer)];
}

std::uint64_t GenderConfusion::at(Gender detected, InBox answer) const {
  return counts[row_of(detected)][col_of(answer)];
}

std::uint64_t GenderConfusion::row_total(Gender detected) const {
  const auto& row = counts[row_of(detected)];
  return row[0] + row[1] + row[2] + row[3];
}

std::uint64_t GenderConfusion::total() const { return row_total(Gender::Female) + row_total(Gender::Male); }

std::uint64_t GenderConfusion::correct() const {
  return at(Gender::Female, InBox::Female) + at(Gender::Male, InBox::Male);
}

double GenderConfusion::accuracy() const {
  const std::uint64_t decided = total() - at(Gender::Female, InBox::Doubt) - at(Gender::Male, InBox::Doubt);
  if (decided == 0) return 0.0;
  return static_cast<double>(correct()) / static_cast<double>(decided);
}

Confusions build_confusions(std::span<const AdjudicatedTask> tasks) {
  Confusions c;
  for (const auto& t : tasks) {
    if (t.in_box == InBox::NoFace) {
      ++c.face.fp;
    } else {
      ++c.face.tp;
    }
    if (t.outside_box == OutsideBox::Yes) {
      ++c.face.fn;
    } else if (t.outside_box == OutsideBox::No) {
      ++c.face.tn;
    }
    ++c.gender.at(t.detected_gender, t.in_box);
  }
  return c;
}

// Correction ------------------------------------------------------------------

void require_identifiable(const CorrectionPair& f) {
  if (!(f.lambda_male > 0.0 && f.lambda_male <= 1.0 && f.lambda_female > 0.0 && f.lambda_female <= 1.0)) {
    throw Error(ErrorCode::NonIdentifiable,
                fmt::format("factors ({}, {}) outside (0, 1]", f.lambda_male, f.lambda_female));
  }
  if (f.lambda_male + f.lambda_female <= 1.0) {
    throw Error(ErrorCode::NonIdentifiable,
                fmt::format("lambda + lambda' = {} <= 1; corrected ratio would not increase with the raw one",
                            f.lambda_male + f.lambda_female));
  }
}

CorrectionPair precision_factors(const GenderConfusion& gc) {
  const auto ff = gc.at(Gender::Female, InBox::Female);
  const auto fm = gc.at(Gender::Female, InBox::Male);
  const auto mf = gc.at(Gender::Male, InBox::Female);
  const auto mm = gc.at(Gender::Male, InBox::Male);
  if (ff + fm == 0 || mf + mm == 0) {
    throw Error(ErrorCode::InsufficientData, "a detected-gender row has no female/male answers");
  }
  CorrectionPair f;
  f.lambda_female = static_cast<double>(ff) / static_cast<double>(ff + fm);
  f.lambda_male = static_cast<double>(mm) / static_cast<double>(mf + mm);
  require_identifiable(f);
  return f;
}

const PeriodFactors& CorrectionFactors::at(const std::string& period) const {
  auto it = by_period.find(period);
  if (it == by_period.end()) throw Error(ErrorCode::UnknownPeriod, "no correction factors for period " + period);
  return it->second;
}

std::string CorrectionFactors::to_json() const {
  ordered_json j = ordered_json::object();
  for (const auto& [period, f] : by_period) {
    j[period] = {{"lambda_male", f.lambda_male},
                 {"lambda_female", f.lambda_female},
                 {"n_tasks", f.n_tasks},
                 {"fallback", f.fallback}};
  }
  return j.dump(2) + "\n";
}

CorrectionFactors CorrectionFactors::from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::MalformedRecord, "factors file is not a JSON object");
  CorrectionFactors out;
  try {
    for (const auto& [period, v] : j.items()) {
      PeriodFactors f;
      f.lambda_male = v.at("lambda_male").get<double>();
      f.lambda_female = v.at("lambda_female").get<double>();
      f.n_tasks = v.value("n_tasks", std::size_t{0});
      f.fallback = v.value("fallback", false);
      out.by_period[period] = f;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, std::string("factors file: ") + e.what());
  }
  return out;
}

CorrectionFactors CorrectionFactors::load(const std::filesystem::path& path) { return from_json(read_file(path)); }

CorrectionFactors CorrectionFactors::identity(const std::vector<std::string>& periods) {
  CorrectionFactors out;
  for (const auto& p : periods) out.by_period[p] = PeriodFactors{};
  return out;
}

double correct_ffr(double raw_ffr, const CorrectionPair& f, WarningLog* warnings, std::string_view context) {
  if (!(raw_ffr >= 0.0 && raw_ffr <= 1.0)) throw Error(ErrorCode::InvalidArgument, "raw FFR outside [0, 1]");
  require_identifiable(f);
  const double corrected = (1.0 - f.lambda_male) + (f.lambda_male + f.lambda_female - 1.0) * raw_ffr;
  if (corrected < 0.0 || corrected > 1.0) {
    if (warnings) {
      warnings->warn("ffr-clamped", fmt::format("corrected FFR {} clamped to [0, 1]", corrected), std::string(context));
    }
    return std::clamp(corrected, 0.0, 1.0);
  }
  return corrected;
}

double correct_ffr(double raw_ffr, const CorrectionFactors& f, const std::string& period, WarningLog* warnings,
                   std::string_view context) {
  return correct_ffr(raw_ffr, f.at(period).pair(), warnings, context);
}

CorrectedCounts correct_counts(double n_female_detected, double n_male_detected, const CorrectionPair& f) {
  require_identifiable(f);
  CorrectedCounts c;
  c.female = f.lambda_female * n_female_detected + (1.0 - f.lambda_male) * n_male_detected;
  c.male = (1.0 - f.lambda_female) * n_female_detected + f.lambda_male * n_male_detected;
  return c;
}

CorrectedCounts correct_counts(double n_female_detected, double n_male_detected, const CorrectionFactors& f,
                               const std::string& period) {
  return correct_counts(n_female_detected, n_male_detected, f.at(period).pair());
}

CorrectionFactors factors_by_period(std::span<const AdjudicatedTask> tasks, const corpus::PeriodPartition& partition,
                                    const corpus::CorpusManifest& manifest, std::size_t min_tasks,
                                    WarningLog* warnings) {
  const auto global_table = build_confusions(tasks).gender;
  const auto global = precision_factors(global_table);

  std::vector<std::vector<AdjudicatedTask>> per_period(partition.periods.size());
  for (const auto& t : tasks) {
    auto idx = partition.period_of_movie(t.movie_id);
    if (!idx) {
      if (const auto* m = manifest.find(t.movie_id)) idx = partition.period_of_year(m->year);
    }
    if (!idx) {
      if (warnings) warnings->warn("task-outside-periods", "adjudicated task maps to no period", t.task_id);
      continue;
    }
    per_period[*idx].push_back(t);
  }

  CorrectionFactors out;
  for (std::size_t i = 0; i < partition.periods.size(); ++i) {
    const auto label = partition.periods[i].label();
    PeriodFactors f;
    f.n_tasks = per_period[i].size();
    auto use_global = [&](const std::string& code, const std::string& why) {
      f.lambda_male = global.lambda_male;
      f.lambda_female = global.lambda_female;
      f.fallback = true;
      if (warnings) warnings->warn(code, why + "; using global factors", label);
    };
    if (f.n_tasks < min_tasks) {
      use_global("sparse-period", fmt::format("{} adjudicated tasks, minimum is {}", f.n_tasks, min_tasks));
    } else {
      try {
        auto p = precision_factors(build_confusions(per_period[i]).gender);
        f.lambda_male = p.lambda_male;
        f.lambda_female = p.lambda_female;
      } catch (const Error& e) {
        use_global("period-factors-unusable", e.what());
      }
    }
    out.by_period[label] = f;
  }
  return out;
}

std::string confusions_to_json(const Confusions& c) {
  ordered_json j;
  j["face"] = {{"tp", c.face.tp},
               {"fp", c.face.fp},
               {"fn", c.face.fn},
               {"tn", c.face.tn},
               {"total", c.face.total()},
               {"accuracy", round6(c.face.accuracy())}};
  ordered_json rows = ordered_json::object();
  for (Gender g : {Gender::Female, Gender::Male}) {
    ordered_json row;
    for (InBox a : {InBox::Female, InBox::Male, InBox::Doubt, InBox::NoFace}) {
      row[std::string(to_string(a))] = c.gender.at(g, a);
    }
    rows[std::string(detection::to_string(g))] = row;
  }
  j["gender"] = {{"detected", rows}, {"accuracy", round6(c.gender.accuracy())}};
  return j.dump(2) + "\n";
}

}  // namespace screentime::calibration
