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

// Presence metrics (female face ratio and its aggregates) and framing
// metrics (face area, gender combinations per frame, rule-of-thirds cells).
//
// Every accumulator here is fed one movie at a time and merges by addition,
// so a corpus is processed in a single streaming pass.

#ifndef SCREENTIME_METRICS_HPP_
#define SCREENTIME_METRICS_HPP_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "screentime/calibration.hpp"
#include "screentime/corpus.hpp"
#include "screentime/detection.hpp"
#include "screentime/io.hpp"
#include "screentime/stats.hpp"

namespace screentime::metrics {

using detection::FrameDetections;
using detection::Gender;

// Female face ratio -----------------------------------------------------------

struct MovieMetrics {
  std::string movie_id;
  std::string period;  // label; empty when the movie is outside the partition
  std::uint64_t n_female_det = 0;
  std::uint64_t n_male_det = 0;
  std::optional<double> raw_ffr;        // absent when no faces were detected
  std::optional<double> corrected_ffr;
  calibration::CorrectedCounts corrected_counts;

  bool no_faces() const { return n_female_det + n_male_det == 0; }
};

MovieMetrics movie_ffr(const std::string& movie_id, std::uint64_t n_female, std::uint64_t n_male,
                       const calibration::CorrectionPair& factors, WarningLog* warnings = nullptr);

/// Counts the detections of one movie and corrects with the period's factors.
MovieMetrics movie_ffr(const std::string& movie_id, std::span<const FrameDetections> frames,
                       const calibration::CorrectionFactors& factors, const std::string& period,
                       WarningLog* warnings = nullptr);

struct MeanSd {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;  // population
};

MeanSd mean_sd(std::span<const double> values);

struct GenreStat {
  std::string genre;
  MeanSd ffr;
};

/// Mean corrected FFR per genre; a movie counts towards every genre it
/// carries. Movies without faces are skipped.
std::vector<GenreStat> aggregate_genre(std::span<const MovieMetrics> movies,
                                       const corpus::CorpusManifest& manifest,
                                       const std::vector<std::string>& genres);

// Histograms ------------------------------------------------------------------

inline constexpr double kDefaultBinWidthPct = 5.0;

std::size_t bin_count(double bin_width_pct);
/// Bin of an FFR in [0, 1]; bins are [k*w, (k+1)*w) percent and the last one
/// is closed at 100.
std::size_t bin_index(double ffr, double bin_width_pct);

struct FfrHistogram {
  std::string label;
  double bin_width_pct = kDefaultBinWidthPct;
  std::vector<std::uint64_t> bins;
  std::vector<std::string> movie_ids;  // movies with a defined FFR, by id
  MeanSd ffr;
};

FfrHistogram build_histogram(std::string label, std::span<const MovieMetrics> movies,
                             double bin_width_pct = kDefaultBinWidthPct);

/// One histogram of corrected FFR per period, in period order. An empty
/// period yields an empty histogram and a warning.
std::vector<FfrHistogram> period_histograms(std::span<const MovieMetrics> movies,
                                            const corpus::PeriodPartition& partition,
                                            double bin_width_pct = kDefaultBinWidthPct,
                                            WarningLog* warnings = nullptr);

enum class Covariate { Budget, Gross, RatingValue, RatingCount, FemaleRatingShare };

std::string_view to_string(Covariate c);
std::optional<Covariate> parse_covariate(std::string_view s);
const std::vector<Covariate>& all_covariates();
std::optional<double> covariate_value(const corpus::MovieRecord& movie, Covariate c);

/// Per-bin tone of a histogram: mean covariate rank of the bin's movies,
/// min-max normalized across bins (a constant maps to 0.5). Bins without a
/// ranked movie have no tone. Throws NoCovariate when fewer than two of the
/// histogram's movies carry the covariate.
std::vector<std::optional<double>> covariate_projection(const FfrHistogram& histogram,
                                                        std::span<const MovieMetrics> movies,
                                                        const corpus::CorpusManifest& manifest,
                                                        Covariate covariate);

// Bechdel -----------------------------------------------------------------------

struct BechdelGenreRow {
  std::string genre;
  MeanSd ffr;
  std::size_t covered = 0;
  std::size_t passed = 0;
  std::optional<double> pass_rate;
};

struct BechdelComparison {
  std::vector<BechdelGenreRow> rows;     // every requested genre
  std::vector<std::string> compared;    // genres entering the correlation
  double spearman = 0.0;
};

/// Throws TooFewGenres when fewer than two genres have both a covered movie
/// and a defined mean FFR.
BechdelComparison bechdel_comparison(std::span<const MovieMetrics> movies,
                                     const corpus::CorpusManifest& manifest,
                                     const std::vector<std::string>& genres);

struct BechdelPeriodRate {
  std::string label;
  std::size_t movies = 0;
  std::size_t covered = 0;
  std::size_t passed = 0;
  std::optional<double> pass_rate;
};

std::vector<BechdelPeriodRate> bechdel_period_rates(const corpus::CorpusManifest& manifest,
                                                    const corpus::PeriodPartition& partition);

// Framing -----------------------------------------------------------------------

/// (female-labelled faces, male-labelled faces) in one frame.
using CombinationKey = std::pair<std::uint32_t, std::uint32_t>;

std::string key_label(const CombinationKey& key);  // "1F2M"

struct CombinationDistribution {
  std::map<CombinationKey, std::uint64_t> frames;
  std::uint64_t total = 0;

  void add(const FrameDetections& frame);
  void merge(const CombinationDistribution& other);
  double share(const CombinationKey& key) const;
  /// Keys by descending frame count, ties by key.
  std::vector<CombinationKey> ranked() const;
  /// Cumulative share of the k most frequent keys.
  double coverage(std::size_t k) const;
  /// Shortest ranked prefix whose cumulative share reaches `target`.
  std::vector<CombinationKey> covering(double target) const;
};

inline constexpr double kCombinationCoverage = 0.95;

/// Cell 0..8 in row-major order (top-left first) of the bbox center, using
/// thirds [0, 1/3), [1/3, 2/3), [2/3, 1].
int thirds_cell(const detection::BBox& box);

struct ThirdsMatrix {
  CombinationKey key;
  std::array<std::array<std::uint64_t, 9>, 2> counts{};  // [female, male][cell]

  std::uint64_t total(Gender g) const;
  /// Share of the gender's faces in each cell, in percent; empty when the
  /// gender has no face in this combination.
  std::optional<std::array<double, 9>> percentages(Gender g) const;
};

using ThirdsSet = std::map<CombinationKey, ThirdsMatrix>;

void add_thirds(ThirdsSet& set, const FrameDetections& frame);
void merge_thirds(ThirdsSet& into, const ThirdsSet& from);

/// A face configuration: a gender inside a combination, e.g. the women of
/// 1F1M frames.
struct Configuration {
  CombinationKey key;
  Gender gender = Gender::Female;

  std::string label() const;  // "1F1M:female"
  bool operator==(const Configuration&) const = default;
};

struct ThirdsTest {
  Configuration a;
  Configuration b;
  std::optional<stats::TestResult> grid;        // 2 x 9
  std::optional<stats::TestResult> horizontal;  // 2 x 3, left/center/right
  std::optional<stats::TestResult> vertical;    // 2 x 3, top/middle/bottom
  std::vector<std::string> notes;               // why a test is absent
};

/// Chi-square for every pair of configurations present in `keys` (all keys
/// when empty). Throws InsufficientData with fewer than two configurations.
std::vector<ThirdsTest> thirds_independence(const ThirdsSet& set,
                                            const std::vector<CombinationKey>& keys = {});

inline constexpr double kAreaQuantum = 1e-6;

struct FaceismSummary {
  std::array<std::uint64_t, 2> faces{};          // [female, male]
  std::array<double, 2> median{};                // area fraction
  double overall_median = 0.0;
  double tail_threshold = 0.0;                   // 20% of faces are smaller
  double median_difference = 0.0;                // male minus female
  stats::TestResult mann_whitney;                // sample a = female
};

/// Face areas per gender. Medians and the tail threshold come from quantile
/// sketches; the rank test runs on areas quantized to 1e-6 of the frame.
class FaceismAccumulator {
 public:
  FaceismAccumulator();

  void add(Gender g, double area);
  void merge(const FaceismAccumulator& other);
  std::uint64_t count(Gender g) const { return sketch_[index(g)].count(); }

  /// Throws EmptyGender when either gender has no face.
  FaceismSummary summarize() const;

 private:
  static std::size_t index(Gender g) { return g == Gender::Female ? 0 : 1; }
  std::array<stats::KllSketch, 2> sketch_;
  stats::KllSketch all_;
  std::array<std::map<std::uint32_t, std::uint64_t>, 2> quantized_;
};

FaceismSummary faceism(std::span<const FrameDetections> frames, const std::set<std::string>& scope);

/// Framing state of one movie before it is folded into the corpus totals.
struct FramingPartial {
  CombinationDistribution combinations;
  ThirdsSet thirds;
  std::array<std::vector<double>, 2> areas;  // in stream order

  void add(const FrameDetections& frame);
};

struct FramingAccumulator {
  CombinationDistribution combinations;
  ThirdsSet thirds;
  FaceismAccumulator faceism;
  std::uint64_t faces = 0;

  void absorb(const FramingPartial& movie);
  void merge(const FramingAccumulator& other);
};

CombinationDistribution combinations(std::span<const FrameDetections> frames,
                                     const std::set<std::string>& scope);
ThirdsSet thirds_matrices(std::span<const FrameDetections> frames, const std::set<std::string>& scope);

}  // namespace screentime::metrics

#endif  // SCREENTIME_METRICS_HPP_
