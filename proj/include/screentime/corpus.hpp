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

#ifndef SCREENTIME_CORPUS_HPP_
#define SCREENTIME_CORPUS_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "screentime/io.hpp"

namespace screentime::corpus {

struct MovieRecord {
  std::string id;
  std::string title;
  int year = 0;
  std::set<std::string> genres;
  int runtime_min = 0;
  std::uint64_t budget_usd = 0;
  std::uint64_t gross_usd = 0;
  double rating_value = 0.0;
  std::uint64_t rating_count = 0;
  std::optional<double> female_rating_share;
  std::string parental_rating;
  std::optional<std::uint64_t> seeders;
  std::optional<int> bechdel_score;
  int frame_width = 0;
  int frame_height = 0;

  bool operator==(const MovieRecord&) const = default;
};

/// A Bechdel pass requires all three criteria, i.e. score 3.
inline bool passes_bechdel(int score) { return score == 3; }

struct Rejection {
  std::size_t line = 0;  // 1-based physical record number, header excluded
  std::string id;        // may be empty when the id itself is missing
  std::string reason;    // e.g. "missing-field:budget_usd"
};

struct LoadReport {
  std::string source;
  std::size_t rows_read = 0;
  std::vector<Rejection> rejected;
};

struct CorpusManifest {
  std::vector<MovieRecord> movies;  // sorted by id, ids unique
  LoadReport provenance;

  const MovieRecord* find(const std::string& id) const;
  std::size_t size() const { return movies.size(); }
  bool empty() const { return movies.empty(); }
};

/// Manifest columns, in canonical order.
const std::vector<std::string>& manifest_columns();

/// Loads a CSV (header row with the manifest columns) or JSON-lines
/// manifest. JSON-lines is chosen for .jsonl/.ndjson/.json files or when the
/// first non-blank character is '{'. Rows with missing or invalid required
/// fields are rejected into the load report. An optional bechdel_score
/// column is honoured when present.
CorpusManifest load_manifest(const std::filesystem::path& path);

/// Parses manifest text directly; `source` only labels the load report.
CorpusManifest parse_manifest(const std::string& text, const std::string& source);

std::string manifest_to_csv(const CorpusManifest& manifest);

struct FilterCriteria {
  int year_lo = 1985;
  int year_hi = 2019;
  std::set<std::string> excluded_genres{"Animation", "Documentary"};
  std::uint64_t min_seeders = 3;
};

struct FilterReport {
  std::size_t kept = 0;
  std::size_t dropped_year = 0;
  std::size_t dropped_genre = 0;
  std::size_t dropped_seeders = 0;
};

/// Keeps movies inside the year range, carrying none of the excluded
/// genres, and shared by at least `min_seeders` peers. Movies whose seeder
/// count is absent are kept.
CorpusManifest filter_corpus(const CorpusManifest& manifest,
                             const FilterCriteria& criteria,
                             FilterReport* report = nullptr);

struct Period {
  int year_lo = 0;
  int year_hi = 0;
  std::set<std::string> movie_ids;

  std::string label() const;
  bool contains_year(int year) const { return year >= year_lo && year <= year_hi; }
};

struct PeriodPartition {
  std::vector<Period> periods;

  /// Index of the period whose year range holds `year`, if any.
  std::optional<std::size_t> period_of_year(int year) const;
  /// Index of the period listing `movie_id`, if any.
  std::optional<std::size_t> period_of_movie(const std::string& movie_id) const;
  std::vector<std::string> labels() const;
};

/// Splits the corpus into `k` contiguous year ranges with cut points at
/// whole years. Cuts minimize, in order: the largest deviation of a period
/// size from n/k, then the spread between the largest and smallest period,
/// then the position of the cuts (earliest first).
PeriodPartition split_periods(const CorpusManifest& manifest, int k);

/// Genres by descending movie count, ties broken lexicographically.
std::vector<std::string> top_genres(const CorpusManifest& manifest, std::size_t n);

// Bechdel enrichment ------------------------------------------------------

struct BechdelEntry {
  std::string imdbid;  // digits, without the "tt" prefix
  int rating = 0;
};

/// Source of Bechdel ratings. `lookup` returns nullopt for unknown movies and
/// throws Error(ExternalCommandFailed) on transport failure.
class BechdelClient {
 public:
  virtual ~BechdelClient() = default;
  virtual std::optional<BechdelEntry> lookup(const std::string& imdbid) = 0;
};

/// Client for the bechdeltest.com JSON API (getMovieByImdbId).
class HttpBechdelClient : public BechdelClient {
 public:
  explicit HttpBechdelClient(std::string base_url = "http://bechdeltest.com",
                             std::string path = "/api/v1/getMovieByImdbId");
  std::optional<BechdelEntry> lookup(const std::string& imdbid) override;

 private:
  std::string base_url_;
  std::string path_;
};

/// JSON-lines cache keyed by imdb id; one {"imdbid","rating"} object per line.
class BechdelCache {
 public:
  explicit BechdelCache(std::filesystem::path file);

  std::optional<int> get(const std::string& imdbid) const;
  /// Appends to the file and the in-memory map; later lines win on reload.
  void put(const BechdelEntry& entry);
  std::size_t size() const { return entries_.size(); }

 private:
  std::filesystem::path file_;
  std::map<std::string, int> entries_;
  std::unique_ptr<std::mutex> mu_ = std::make_unique<std::mutex>();
};

struct EnrichReport {
  std::size_t from_cache = 0;
  std::size_t fetched = 0;
  std::vector<std::string> uncovered;
  bool network_failed = false;
};

/// Strips a leading "tt" so ids match the upstream imdbid key.
std::string normalize_imdb_id(const std::string& id);

/// Fills bechdel_score from the cache, then from `client` (when given) for
/// movies the cache lacks. After a transport failure the client is not
/// consulted again and a warning is logged.
CorpusManifest enrich_bechdel(const CorpusManifest& manifest, BechdelCache& cache,
                              BechdelClient* client, WarningLog* warnings = nullptr,
                              EnrichReport* report = nullptr);

}  // namespace screentime::corpus

#endif  // SCREENTIME_CORPUS_HPP_
