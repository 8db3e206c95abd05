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

// Human review of single-face frames and the classifier-bias correction
// derived from it.
//
// Reviewers answer two questions per frame: what is inside the box
// (female / male / doubt / no face) and whether other faces appear outside
// it (yes / no / doubt). Per-task majorities give a face-detection confusion
// matrix and a detected-gender x reviewed-gender table. The precision of
// each detected gender (lambda for male, lambda' for female) then corrects
// the female face ratio:
//
//   ffr_corrected = (1 - lambda) + (lambda + lambda' - 1) * ffr_raw

#ifndef SCREENTIME_CALIBRATION_HPP_
#define SCREENTIME_CALIBRATION_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "screentime/corpus.hpp"
#include "screentime/detection.hpp"
#include "screentime/io.hpp"
#include "screentime/random.hpp"

namespace screentime::calibration {

using detection::BBox;
using detection::Gender;

enum class InBox { Female, Male, Doubt, NoFace };
enum class OutsideBox { Yes, No, Doubt };

std::string_view to_string(InBox v);
std::string_view to_string(OutsideBox v);
std::optional<InBox> parse_in_box(std::string_view s);
std::optional<OutsideBox> parse_outside_box(std::string_view s);

struct AnnotationTask {
  std::string task_id;
  std::string movie_id;
  std::int64_t frame_ts_ms = 0;
  BBox bbox;
  Gender detected_gender = Gender::Female;
  std::string frame_ref;  // path relative to the frames root

  bool operator==(const AnnotationTask&) const = default;
};

std::string task_to_json(const AnnotationTask& task);
AnnotationTask task_from_json(std::string_view line);
std::vector<AnnotationTask> load_tasks(const std::filesystem::path& path);
std::string tasks_to_jsonl(const std::vector<AnnotationTask>& tasks);

// Task sampling -------------------------------------------------------------

/// Streams frames and keeps, per (movie, detected gender), one uniformly
/// chosen single-face frame by reservoir sampling. Memory grows with the
/// number of movies only.
class TaskSampler {
 public:
  explicit TaskSampler(std::uint64_t seed);

  void observe(const detection::FrameDetections& frame);

  /// Draws n/2 female-detected and n/2 male-detected tasks, every task from
  /// a different movie. Restricts to `manifest` when given. Throws
  /// InsufficientPool with the per-gender shortfall when impossible.
  std::vector<AnnotationTask> draw(std::size_t n, const corpus::CorpusManifest* manifest = nullptr);

 private:
  struct Candidate {
    std::uint64_t seen = 0;
    detection::FaceDetection face;
  };
  Rng rng_;
  std::map<std::string, std::array<std::optional<Candidate>, 2>> pool_;
};

std::vector<AnnotationTask> sample_tasks(detection::DetectionReader& frames,
                                         const corpus::CorpusManifest& manifest, std::size_t n,
                                         std::uint64_t seed);

// Reviews ---------------------------------------------------------------------

struct Review {
  std::string task_id;
  std::string reviewer_id;
  InBox in_box = InBox::Doubt;
  OutsideBox outside_box = OutsideBox::Doubt;
  std::string submitted_at;

  bool operator==(const Review&) const = default;
};

/// One row of the review export CSV:
/// task_id,movie_id,frame_ts_ms,detected_gender,reviewer_id,in_box,outside_box,submitted_at
struct ReviewRow {
  std::string task_id;
  std::string movie_id;
  std::int64_t frame_ts_ms = 0;
  Gender detected_gender = Gender::Female;
  std::string reviewer_id;
  InBox in_box = InBox::Doubt;
  OutsideBox outside_box = OutsideBox::Doubt;
  std::string submitted_at;

  bool operator==(const ReviewRow&) const = default;
};

const std::vector<std::string>& review_export_columns();
std::string review_export_csv(const std::vector<ReviewRow>& rows);
std::vector<ReviewRow> parse_review_export(const std::string& text);
std::vector<ReviewRow> load_review_export(const std::filesystem::path& path);

/// Strict-plurality answers for one task; an exact tie leaves the answer
/// empty (indeterminate).
struct Majority {
  std::optional<InBox> in_box;
  std::optional<OutsideBox> outside_box;
};

Majority aggregate_reviews(std::span<const Review> reviews);

/// A task with a decided in-box answer. `outside_box` stays empty when the
/// outside question tied.
struct AdjudicatedTask {
  std::string task_id;
  std::string movie_id;
  Gender detected_gender = Gender::Female;
  InBox in_box = InBox::Doubt;
  std::optional<OutsideBox> outside_box;
};

/// Groups export rows by task and keeps tasks whose in-box majority is
/// decided. Output is ordered by task id.
std::vector<AdjudicatedTask> adjudicate(std::span<const ReviewRow> rows);

// Confusion matrices ----------------------------------------------------------

struct FaceConfusion {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
  double accuracy() const;
  bool operator==(const FaceConfusion&) const = default;
};

/// Rows: detected female, detected male. Columns: reviewer answer.
struct GenderConfusion {
  std::array<std::array<std::uint64_t, 4>, 2> counts{};

  std::uint64_t& at(Gender detected, InBox answer);
  std::uint64_t at(Gender detected, InBox answer) const;
  std::uint64_t row_total(Gender detected) const;
  std::uint64_t total() const;
  std::uint64_t correct() const;
  /// Share of correct inferences among answers that are not "doubt".
  double accuracy() const;
  bool operator==(const GenderConfusion&) const = default;
};

struct Confusions {
  FaceConfusion face;
  GenderConfusion gender;
};

/// In-box answer "no face" is a false positive, anything else a true
/// positive. Outside-box "yes" is a false negative, "no" a true negative,
/// doubt or a tie contributes nothing.
Confusions build_confusions(std::span<const AdjudicatedTask> tasks);

// Correction ------------------------------------------------------------------

struct CorrectionPair {
  double lambda_male = 1.0;    // P(male | detected male)
  double lambda_female = 1.0;  // P(female | detected female)
};

/// Precision of each detected gender over the female/male answers only;
/// doubt and no-face answers leave the denominators. Throws
/// InsufficientData for a row without any female/male answer and
/// NonIdentifiable when lambda + lambda' <= 1.
CorrectionPair precision_factors(const GenderConfusion& gc);

void require_identifiable(const CorrectionPair& f);

struct PeriodFactors {
  double lambda_male = 1.0;
  double lambda_female = 1.0;
  std::size_t n_tasks = 0;
  bool fallback = false;  // global factors stood in for this period

  CorrectionPair pair() const { return {lambda_male, lambda_female}; }
};

struct CorrectionFactors {
  std::map<std::string, PeriodFactors> by_period;

  /// Throws UnknownPeriod.
  const PeriodFactors& at(const std::string& period) const;

  std::string to_json() const;
  static CorrectionFactors from_json(const std::string& text);
  static CorrectionFactors load(const std::filesystem::path& path);
  /// Identity factors (lambda = lambda' = 1) for every label.
  static CorrectionFactors identity(const std::vector<std::string>& periods);
};

/// Affine correction of a raw female face ratio. Results outside [0, 1] are
/// clamped and reported to `warnings`.
double correct_ffr(double raw_ffr, const CorrectionPair& f, WarningLog* warnings = nullptr,
                   std::string_view context = {});
double correct_ffr(double raw_ffr, const CorrectionFactors& f, const std::string& period,
                   WarningLog* warnings = nullptr, std::string_view context = {});

struct CorrectedCounts {
  double female = 0.0;
  double male = 0.0;
};

/// Expected true counts: every detected-female face counts lambda' female and
/// 1 - lambda' male, every detected-male face lambda male and 1 - lambda
/// female.
CorrectedCounts correct_counts(double n_female_detected, double n_male_detected, const CorrectionPair& f);
CorrectedCounts correct_counts(double n_female_detected, double n_male_detected,
                               const CorrectionFactors& f, const std::string& period);

inline constexpr std::size_t kDefaultMinTasksPerPeriod = 50;

/// One factor pair per period from that period's sub-table. Periods with
/// fewer than `min_tasks` adjudicated tasks, or whose sub-table is not
/// identifiable, fall back to the global factors with a warning.
CorrectionFactors factors_by_period(std::span<const AdjudicatedTask> tasks,
                                    const corpus::PeriodPartition& partition,
                                    const corpus::CorpusManifest& manifest,
                                    std::size_t min_tasks = kDefaultMinTasksPerPeriod,
                                    WarningLog* warnings = nullptr);

std::string confusions_to_json(const Confusions& c);

}  // namespace screentime::calibration

#endif  // SCREENTIME_CALIBRATION_HPP_
