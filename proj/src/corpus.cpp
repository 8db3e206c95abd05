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

#include "screentime/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "screentime/error.hpp"

namespace screentime::corpus {

namespace {

using Row = std::map<std::string, std::string>;

const std::vector<std::string> kRequired = {
    "id",         "title",         "year",         "genres",
    "runtime_min", "budget_usd",   "gross_usd",    "rating_value",
    "rating_count", "parental_rating", "frame_width", "frame_height"};

template <typename T>
std::optional<T> parse_integer(const std::string& text) {
  T value{};
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return value;
}

std::optional<double> parse_decimal(const std::string& text) {
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) return std::nullopt;
  return value;
}

// Returns a rejection reason, or an empty string when the row is valid.
std::string row_to_record(const Row& row, MovieRecord& rec) {
  auto field = [&](const std::string& name) -> std::optional<std::string> {
    auto it = row.find(name);
    if (it == row.end()) return std::nullopt;
    auto v = std::string(trim(it->second));
    if (v.empty()) return std::nullopt;
    return v;
  };
  for (const auto& name : kRequired) {
    if (!field(name)) return "missing-field:" + name;
  }
  auto invalid = [](const std::string& name) { return "invalid-field:" + name; };

  rec.id = *field("id");
  rec.title = *field("title");
  rec.parental_rating = *field("parental_rating");

  auto year = parse_integer<int>(*field("year"));
  if (!year) return invalid("year");
  rec.year = *year;

  rec.genres.clear();
  for (const auto& g : split(*field("genres"), '|')) {
    auto t = trim(g);
    if (!t.empty()) rec.genres.emplace(t);
  }
  if (rec.genres.empty()) return invalid("genres");

  auto runtime = parse_integer<int>(*field("runtime_min"));
  if (!runtime || *runtime <= 0) return invalid("runtime_min");
  rec.runtime_min = *runtime;

  auto budget = parse_integer<std::uint64_t>(*field("budget_usd"));
  if (!budget) return invalid("budget_usd");
  rec.budget_usd = *budget;

  auto gross = parse_integer<std::uint64_t>(*field("gross_usd"));
  if (!gross) return invalid("gross_usd");
  rec.gross_usd = *gross;

  auto rating = parse_decimal(*field("rating_value"));
  if (!rating || *rating < 0.0 || *rating > 10.0) return invalid("rating_value");
  rec.rating_value = *rating;

  auto votes = parse_integer<std::uint64_t>(*field("rating_count"));
  if (!votes) return invalid("rating_count");
  rec.rating_count = *votes;

  auto width = parse_integer<int>(*field("frame_width"));
  if (!width || *width <= 0) return invalid("frame_width");
  rec.frame_width = *width;
  auto height = parse_integer<int>(*field("frame_height"));
  if (!height || *height <= 0) return invalid("frame_height");
  rec.frame_height = *height;

  rec.female_rating_share.reset();
  if (auto s = field("female_rating_share")) {
    auto share = parse_decimal(*s);
    if (!share || *share < 0.0 || *share > 1.0) return invalid("female_rating_share");
    rec.female_rating_share = *share;
  }
  rec.seeders.reset();
  if (auto s = field("seeders")) {
    auto seeders = parse_integer<std::uint64_t>(*s);
    if (!seeders) return invalid("seeders");
    rec.seeders = *seeders;
  }
  rec.bechdel_score.reset();
  if (auto s = field("bechdel_score")) {
    auto score = parse_integer<int>(*s);
    if (!score || *score < 0 || *score > 3) return invalid("bechdel_score");
    rec.bechdel_score = *score;
  }
  return {};
}

std::string json_scalar_text(const nlohmann::json& v) {
  if (v.is_null()) return {};
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string joined;
    for (const auto& item : v) {
      if (!joined.empty()) joined.push_back('|');
      joined += json_scalar_text(item);
    }
    return joined;
  }
  return v.dump();
}

bool looks_like_jsonl(const std::string& text, const std::string& source) {
  for (const char* ext : {".jsonl", ".ndjson", ".json"}) {
    if (source.size() >= std::strlen(ext) &&
        source.compare(source.size() - std::strlen(ext), std::string::npos, ext) == 0) {
      return true;
    }
  }
  auto t = trim(text);
  return !t.empty() && t.front() == '{';
}

}  // namespace

const std::vector<std::string>& manifest_columns() {
  static const std::vector<std::string> columns = {
      "id",           "title",         "year",
      "genres",       "runtime_min",   "budget_usd",
      "gross_usd",    "rating_value",  "rating_count",
      "female_rating_share", "parental_rating", "seeders",
      "frame_width",  "frame_height"};
  return columns;
}

const MovieRecord* CorpusManifest::find(const std::string& id) const {
  auto it = std::lower_bound(movies.begin(), movies.end(), id,
                             [](const MovieRecord& m, const std::string& key) { return m.id < key; });
  if (it == movies.end() || it->id != id) return nullptr;
  return &*it;
}

CorpusManifest parse_manifest(const std::string& text, const std::string& source) {
  CorpusManifest manifest;
  manifest.provenance.source = source;
  std::vector<std::pair<std::size_t, Row>> rows;

  if (looks_like_jsonl(text, source)) {
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      ++lineno;
      Row row;
      auto parsed = nlohmann::json::parse(line, nullptr, false);
      if (parsed.is_discarded() || !parsed.is_object()) {
        manifest.provenance.rejected.push_back({lineno, "", "malformed-row"});
        continue;
      }
      for (const auto& [key, value] : parsed.items()) row[key] = json_scalar_text(value);
      rows.emplace_back(lineno, std::move(row));
    }
    manifest.provenance.rows_read = lineno;
  } else {
    std::istringstream in(text);
    auto header = read_csv_record(in);
    if (!header || (header->size() == 1 && trim((*header)[0]).empty())) {
      throw Error(ErrorCode::EmptyManifest, source + " has no header row");
    }
    std::vector<std::string> columns;
    for (const auto& h : *header) columns.emplace_back(trim(h));
    for (const auto& name : kRequired) {
      if (std::find(columns.begin(), columns.end(), name) == columns.end()) {
        throw Error(ErrorCode::MalformedRecord, source + " header lacks column " + name);
      }
    }
    std::size_t lineno = 0;
    while (auto fields = read_csv_record(in)) {
      if (fields->size() == 1 && trim((*fields)[0]).empty()) continue;
      ++lineno;
      if (fields->size() != columns.size()) {
        manifest.provenance.rejected.push_back({lineno, "", "malformed-row"});
        continue;
      }
      Row row;
      for (std::size_t i = 0; i < columns.size(); ++i) row[columns[i]] = (*fields)[i];
      rows.emplace_back(lineno, std::move(row));
    }
    manifest.provenance.rows_read = lineno;
  }

  if (manifest.provenance.rows_read == 0) {
    throw Error(ErrorCode::EmptyManifest, source + " contains no movie rows");
  }

  std::set<std::string> seen;
  for (auto& [lineno, row] : rows) {
    MovieRecord rec;
    auto reason = row_to_record(row, rec);
    if (!reason.empty()) {
      auto it = row.find("id");
      manifest.provenance.rejected.push_back(
          {lineno, it == row.end() ? "" : std::string(trim(it->second)), reason});
      continue;
    }
    if (!seen.insert(rec.id).second) {
      throw Error(ErrorCode::DuplicateId, fmt::format("{}: duplicate id {} (row {})", source, rec.id, lineno));
    }
    manifest.movies.push_back(std::move(rec));
  }
  std::sort(manifest.movies.begin(), manifest.movies.end(),
            [](const MovieRecord& a, const MovieRecord& b) { return a.id < b.id; });
  return manifest;
}

CorpusManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream probe(path);
  if (!probe) throw Error(ErrorCode::Unreadable, "cannot read manifest " + path.string());
  probe.close();
  return parse_manifest(read_file(path), path.string());
}

std::string manifest_to_csv(const CorpusManifest& manifest) {
  auto columns = manifest_columns();
  columns.push_back("bechdel_score");
  std::string out = csv_join(columns) + "\n";
  for (const auto& m : manifest.movies) {
    std::string genres;
    for (const auto& g : m.genres) {
      if (!genres.empty()) genres.push_back('|');
      genres += g;
    }
    std::vector<std::string> f = {
        m.id,
        m.title,
        std::to_string(m.year),
        genres,
        std::to_string(m.runtime_min),
        std::to_string(m.budget_usd),
        std::to_string(m.gross_usd),
        fmt::format("{}", m.rating_value),
        std::to_string(m.rating_count),
        m.female_rating_share ? fmt::format("{}", *m.female_rating_share) : "",
        m.parental_rating,
        m.seeders ? std::to_string(*m.seeders) : "",
        std::to_string(m.frame_width),
        std::to_string(m.frame_height),
        m.bechdel_score ? std::to_string(*m.bechdel_score) : ""};
    out += csv_join(f) + "\n";
  }
  return out;
}

CorpusManifest filter_corpus(const CorpusManifest& manifest, const FilterCriteria& criteria,
                             FilterReport* report) {
  if (criteria.year_lo > criteria.year_hi) {
    throw Error(ErrorCode::InvalidArgument, "filter year range is inverted");
  }
  FilterReport local;
  CorpusManifest out;
  out.provenance = manifest.provenance;
  for (const auto& m : manifest.movies) {
    if (m.year < criteria.year_lo || m.year > criteria.year_hi) {
      ++local.dropped_year;
      continue;
    }
    bool excluded = std::any_of(m.genres.begin(), m.genres.end(), [&](const std::string& g) {
      return criteria.excluded_genres.count(g) > 0;
    });
    if (excluded) {
      ++local.dropped_genre;
      continue;
    }
    if (m.seeders && *m.seeders < criteria.min_seeders) {
      ++local.dropped_seeders;
      continue;
    }
    out.movies.push_back(m);
  }
  local.kept = out.movies.size();
  if (report) *report = local;
  return out;
}

std::string Period::label() const { return fmt::format("{}-{}", year_lo, year_hi); }

std::optional<std::size_t> PeriodPartition::period_of_year(int year) const {
  for (std::size_t i = 0; i < periods.size(); ++i) {
    if (periods[i].contains_year(year)) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> PeriodPartition::period_of_movie(const std::string& movie_id) const {
  for (std::size_t i = 0; i < periods.size(); ++i) {
    if (periods[i].movie_ids.count(movie_id)) return i;
  }
  return std::nullopt;
}

std::vector<std::string> PeriodPartition::labels() const {
  std::vector<std::string> out;
  for (const auto& p : periods) out.push_back(p.label());
  return out;
}

namespace {

constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;

// Cut search over the sorted distinct years. Segment [i, j) covers years
// i..j-1; sizes come from prefix sums.
class CutSearch {
 public:
  CutSearch(std::vector<std::int64_t> counts, int k) : k_(k), d_(counts.size()) {
    prefix_.assign(d_ + 1, 0);
    for (std::size_t i = 0; i < d_; ++i) prefix_[i + 1] = prefix_[i] + counts[i];
    n_ = prefix_[d_];
  }

  std::int64_t size(std::size_t i, std::size_t j) const { return prefix_[j] - prefix_[i]; }
  // Deviation from n/k, scaled by k to stay integral.
  std::int64_t deviation(std::int64_t s) const { return std::llabs(k_ * s - n_); }

  std::vector<std::size_t> solve() {
    const std::int64_t best_dev = min_max_deviation();
    std::set<std::int64_t> candidate_lows;
    for (std::size_t i = 0; i < d_; ++i) {
      for (std::size_t j = i + 1; j <= d_; ++j) candidate_lows.insert(size(i, j));
    }
    std::int64_t best_spread = kInf;
    std::vector<std::int64_t> lows_at_best;
    for (std::int64_t low : candidate_lows) {
      const std::int64_t high = min_max_size(best_dev, low);
      if (high >= kInf) continue;
      const std::int64_t spread = high - low;
      if (spread < best_spread) {
        best_spread = spread;
        lows_at_best.clear();
      }
      if (spread == best_spread) lows_at_best.push_back(low);
    }
    std::vector<std::size_t> best_cuts;
    for (std::int64_t low : lows_at_best) {
      auto cuts = earliest_cuts(best_dev, low, low + best_spread);
      if (!cuts.empty() && (best_cuts.empty() || cuts < best_cuts)) best_cuts = std::move(cuts);
    }
    return best_cuts;
  }

 private:
  std::int64_t min_max_deviation() const {
    std::vector<std::vector<std::int64_t>> g(k_ + 1, std::vector<std::int64_t>(d_ + 1, kInf));
    g[0][0] = 0;
    for (int j = 1; j <= k_; ++j) {
      for (std::size_t i = 1; i <= d_; ++i) {
        for (std::size_t t = 0; t < i; ++t) {
          if (g[j - 1][t] >= kInf) continue;
          g[j][i] = std::min(g[j][i], std::max(g[j - 1][t], deviation(size(t, i))));
        }
      }
    }
    return g[k_][d_];
  }

  bool allowed(std::int64_t s, std::int64_t max_dev, std::int64_t low, std::int64_t high) const {
    return s >= low && s <= high && deviation(s) <= max_dev;
  }

  std::int64_t min_max_size(std::int64_t max_dev, std::int64_t low) const {
    std::vector<std::vector<std::int64_t>> h(k_ + 1, std::vector<std::int64_t>(d_ + 1, kInf));
    h[0][0] = 0;
    for (int j = 1; j <= k_; ++j) {
      for (std::size_t i = 1; i <= d_; ++i) {
        for (std::size_t t = 0; t < i; ++t) {
          if (h[j - 1][t] >= kInf) continue;
          const std::int64_t s = size(t, i);
          if (!allowed(s, max_dev, low, kInf)) continue;
          h[j][i] = std::min(h[j][i], std::max(h[j - 1][t], s));
        }
      }
    }
    return h[k_][d_];
  }

  // Lexicographically smallest cut vector whose segments all satisfy the bounds.
  std::vector<std::size_t> earliest_cuts(std::int64_t max_dev, std::int64_t low,
                                         std::int64_t high) const {
    // feasible[j][i]: years i..d-1 split into j allowed segments.
    std::vector<std::vector<char>> feasible(k_ + 1, std::vector<char>(d_ + 1, 0));
    feasible[0][d_] = 1;
    for (int j = 1; j <= k_; ++j) {
      for (std::size_t i = 0; i < d_; ++i) {
        for (std::size_t e = i + 1; e <= d_; ++e) {
          if (feasible[j - 1][e] && allowed(size(i, e), max_dev, low, high)) {
            feasible[j][i] = 1;
            break;
          }
        }
      }
    }
    if (!feasible[k_][0]) return {};
    std::vector<std::size_t> cuts;
    std::size_t pos = 0;
    for (int seg = k_; seg > 1; --seg) {
      for (std::size_t e = pos + 1; e <= d_; ++e) {
        if (allowed(size(pos, e), max_dev, low, high) && feasible[seg - 1][e]) {
          cuts.push_back(e);
          pos = e;
          break;
        }
      }
    }
    cuts.push_back(d_);
    return cuts;
  }

  int k_;
  std::size_t d_;
  std::vector<std::int64_t> prefix_;
  std::int64_t n_ = 0;
};

}  // namespace

PeriodPartition split_periods(const CorpusManifest& manifest, int k) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "period count must be at least 1");
  if (manifest.empty()) throw Error(ErrorCode::EmptyManifest, "cannot split an empty corpus");
  std::map<int, std::vector<std::string>> by_year;
  for (const auto& m : manifest.movies) by_year[m.year].push_back(m.id);
  if (static_cast<std::size_t>(k) > by_year.size()) {
    throw Error(ErrorCode::TooManyPeriods,
                fmt::format("{} periods requested but only {} distinct years", k, by_year.size()));
  }
  std::vector<int> years;
  std::vector<std::int64_t> counts;
  for (const auto& [year, ids] : by_year) {
    years.push_back(year);
    counts.push_back(static_cast<std::int64_t>(ids.size()));
  }
  const auto cuts = CutSearch(counts, k).solve();

  PeriodPartition partition;
  std::size_t start = 0;
  for (std::size_t end : cuts) {
    Period p;
    p.year_lo = years[start];
    p.year_hi = years[end - 1];
    for (std::size_t y = start; y < end; ++y) {
      const auto& ids = by_year[years[y]];
      p.movie_ids.insert(ids.begin(), ids.end());
    }
    partition.periods.push_back(std::move(p));
    start = end;
  }
  // Stretch ranges over empty years so the periods tile the corpus range.
  for (std::size_t i = 0; i + 1 < partition.periods.size(); ++i) {
    partition.periods[i].year_hi = partition.periods[i + 1].year_lo - 1;
  }
  return partition;
}

std::vector<std::string> top_genres(const CorpusManifest& manifest, std::size_t n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "top_genres needs n >= 1");
  std::map<std::string, std::size_t> counts;
  for (const auto& m : manifest.movies) {
    for (const auto& g : m.genres) ++counts[g];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < ranked.size() && i < n; ++i) out.push_back(ranked[i].first);
  return out;
}

}  // namespace screentime::corpus
