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

#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "screentime/corpus.hpp"
#include "screentime/error.hpp"
#include "screentime/io.hpp"
#include "screentime/random.hpp"
#include "screentime/sampling.hpp"
#include "test_support.hpp"

namespace screentime {
namespace {

using corpus::CorpusManifest;
using testing::SyntheticMovie;
using testing::TempDir;

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::InvalidArgument;
}

CorpusManifest manifest_of(const std::vector<SyntheticMovie>& movies) {
  return corpus::parse_manifest(testing::manifest_csv(movies), "test");
}

std::vector<SyntheticMovie> movies_in_years(const std::vector<int>& years) {
  std::vector<SyntheticMovie> out;
  for (std::size_t i = 0; i < years.size(); ++i) {
    SyntheticMovie m;
    m.id = "m" + std::to_string(100 + i);
    m.year = years[i];
    out.push_back(m);
  }
  return out;
}

std::vector<std::size_t> sizes(const corpus::PeriodPartition& p) {
  std::vector<std::size_t> out;
  for (const auto& period : p.periods) out.push_back(period.movie_ids.size());
  return out;
}

// --- manifest loading -----------------------------------------------------

TEST(Manifest, TwoCompleteRows) {
  auto m = manifest_of({{.id = "tt2", .year = 1999}, {.id = "tt1", .year = 2001, .genres = {"Drama", "Crime"}}});
  ASSERT_EQ(m.size(), 2u);
  EXPECT_TRUE(m.provenance.rejected.empty());
  EXPECT_EQ(m.movies[0].id, "tt1");
  EXPECT_EQ(m.movies[0].genres, (std::set<std::string>{"Crime", "Drama"}));
  EXPECT_EQ(m.movies[1].year, 1999);
  EXPECT_EQ(m.movies[1].seeders, std::optional<std::uint64_t>(10));
  EXPECT_FALSE(m.movies[1].female_rating_share.has_value());
  EXPECT_EQ(m.find("tt2")->year, 1999);
  EXPECT_EQ(m.find("tt3"), nullptr);
}

TEST(Manifest, RowMissingBudgetIsRejected) {
  std::string text = testing::manifest_csv({{.id = "a"}, {.id = "b"}});
  // Blank the budget field of the second row.
  const auto pos = text.find("b,Title b,2000,Drama,100,1000000");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 32, "b,Title b,2000,Drama,100,");
  auto m = corpus::parse_manifest(text, "x.csv");
  ASSERT_EQ(m.size(), 1u);
  ASSERT_EQ(m.provenance.rejected.size(), 1u);
  EXPECT_EQ(m.provenance.rejected[0].id, "b");
  EXPECT_EQ(m.provenance.rejected[0].line, 2u);
  EXPECT_EQ(m.provenance.rejected[0].reason, "missing-field:budget_usd");
}

TEST(Manifest, InvalidValuesAreRejected) {
  auto m = manifest_of({{.id = "a", .rating_value = 11.0},
                        {.id = "b", .female_rating_share = 1.5},
                        {.id = "c", .bechdel_score = 4},
                        {.id = "d", .runtime_min = 0},
                        {.id = "e"}});
  ASSERT_EQ(m.size(), 1u);
  std::vector<std::string> reasons;
  for (const auto& r : m.provenance.rejected) reasons.push_back(r.reason);
  EXPECT_EQ(reasons, (std::vector<std::string>{"invalid-field:rating_value", "invalid-field:female_rating_share",
                                               "invalid-field:bechdel_score", "invalid-field:runtime_min"}));
}

TEST(Manifest, Errors) {
  EXPECT_EQ(code_of([] { corpus::parse_manifest(testing::manifest_csv({}), "empty.csv"); }), ErrorCode::EmptyManifest);
  EXPECT_EQ(code_of([] { corpus::parse_manifest("", "blank.csv"); }), ErrorCode::EmptyManifest);
  EXPECT_EQ(code_of([] { manifest_of({{.id = "a"}, {.id = "a"}}); }), ErrorCode::DuplicateId);
  EXPECT_EQ(code_of([] { corpus::load_manifest("/nonexistent/manifest.csv"); }), ErrorCode::Unreadable);
  EXPECT_EQ(code_of([] { corpus::parse_manifest("id,title\nx,y\n", "short.csv"); }), ErrorCode::MalformedRecord);
}

TEST(Manifest, JsonLinesAndCsvAgree) {
  TempDir dir;
  auto csv = manifest_of({{.id = "x1", .year = 1990, .female_rating_share = 0.25, .bechdel_score = 3},
                          {.id = "x2", .year = 2010, .genres = {"Action", "Comedy"}}});
  std::string jsonl;
  for (const auto& m : csv.movies) {
    nlohmann::json j = {{"id", m.id},
                        {"title", m.title},
                        {"year", m.year},
                        {"genres", std::vector<std::string>(m.genres.begin(), m.genres.end())},
                        {"runtime_min", m.runtime_min},
                        {"budget_usd", m.budget_usd},
                        {"gross_usd", m.gross_usd},
                        {"rating_value", m.rating_value},
                        {"rating_count", m.rating_count},
                        {"parental_rating", m.parental_rating},
                        {"seeders", *m.seeders},
                        {"frame_width", m.frame_width},
                        {"frame_height", m.frame_height}};
    if (m.female_rating_share) j["female_rating_share"] = *m.female_rating_share;
    if (m.bechdel_score) j["bechdel_score"] = *m.bechdel_score;
    jsonl += j.dump() + "\n";
  }
  testing::write_text(dir / "m.jsonl", jsonl);
  auto loaded = corpus::load_manifest(dir / "m.jsonl");
  EXPECT_EQ(loaded.movies, csv.movies);

  testing::write_text(dir / "round.csv", corpus::manifest_to_csv(csv));
  EXPECT_EQ(corpus::load_manifest(dir / "round.csv").movies, csv.movies);
}

// --- filtering ------------------------------------------------------------

TEST(Filter, Examples) {
  auto m = manifest_of({{.id = "old", .year = 1980},
                        {.id = "new", .year = 1990},
                        {.id = "doc", .year = 1995, .genres = {"Documentary", "Drama"}},
                        {.id = "cartoon", .year = 1995, .genres = {"Animation"}}});
  corpus::FilterReport report;
  auto kept = corpus::filter_corpus(m, {}, &report);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept.movies[0].id, "new");
  EXPECT_EQ(report.kept, 1u);
  EXPECT_EQ(report.dropped_year, 1u);
  EXPECT_EQ(report.dropped_genre, 2u);

  auto few = m;
  auto& shared = *std::find_if(few.movies.begin(), few.movies.end(), [](const auto& mv) { return mv.id == "new"; });
  shared.seeders = 2;
  EXPECT_TRUE(corpus::filter_corpus(few, {}).empty());
  shared.seeders = std::nullopt;
  EXPECT_EQ(corpus::filter_corpus(few, {}).size(), 1u);

  corpus::FilterCriteria inverted;
  inverted.year_lo = 2000;
  inverted.year_hi = 1999;
  EXPECT_EQ(code_of([&] { corpus::filter_corpus(m, inverted); }), ErrorCode::InvalidArgument);
}

TEST(Filter, Idempotent) {
  Rng rng(31);
  const std::vector<std::string> genre_pool{"Drama", "Comedy", "Animation", "Documentary", "Action"};
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<SyntheticMovie> movies;
    for (int i = 0; i < 40; ++i) {
      SyntheticMovie m{.id = "m" + std::to_string(i), .year = 1975 + static_cast<int>(rng.below(50))};
      m.genres = {genre_pool[rng.below(genre_pool.size())], genre_pool[rng.below(genre_pool.size())]};
      movies.push_back(m);
    }
    auto m = manifest_of(movies);
    for (auto& mv : m.movies) {
      if (rng.bernoulli(0.3)) mv.seeders = rng.below(6);
      if (rng.bernoulli(0.1)) mv.seeders.reset();
    }
    corpus::FilterCriteria c;
    c.year_lo = 1980 + static_cast<int>(rng.below(10));
    auto once = corpus::filter_corpus(m, c);
    EXPECT_EQ(corpus::filter_corpus(once, c).movies, once.movies);
    for (const auto& mv : once.movies) {
      EXPECT_TRUE(c.year_lo <= mv.year && mv.year <= c.year_hi);
      EXPECT_FALSE(mv.genres.count("Animation") || mv.genres.count("Documentary"));
    }
  }
}

// --- periods --------------------------------------------------------------

TEST(SplitPeriods, Examples) {
  auto four = corpus::split_periods(manifest_of(movies_in_years({1985, 1986, 1987, 1988})), 4);
  EXPECT_EQ(sizes(four), (std::vector<std::size_t>{1, 1, 1, 1}));
  EXPECT_EQ(four.labels(), (std::vector<std::string>{"1985-1985", "1986-1986", "1987-1987", "1988-1988"}));

  auto pairs = corpus::split_periods(manifest_of(movies_in_years({1990, 1990, 1991, 1991, 1992, 1992, 1993, 1993})), 4);
  EXPECT_EQ(sizes(pairs), (std::vector<std::size_t>{2, 2, 2, 2}));
  EXPECT_EQ(pairs.periods[2].year_lo, 1992);

  auto lopsided = corpus::split_periods(manifest_of(movies_in_years({1985, 1985, 1985, 1986})), 2);
  EXPECT_EQ(sizes(lopsided), (std::vector<std::size_t>{3, 1}));
  EXPECT_EQ(lopsided.labels(), (std::vector<std::string>{"1985-1985", "1986-1986"}));
}

TEST(SplitPeriods, GapsAreTiledAndLookupsWork) {
  auto p = corpus::split_periods(manifest_of(movies_in_years({1990, 1990, 1995, 1995})), 2);
  ASSERT_EQ(p.periods.size(), 2u);
  EXPECT_EQ(p.periods[0].year_hi, 1994);
  EXPECT_EQ(p.period_of_year(1993), std::optional<std::size_t>(0));
  EXPECT_EQ(p.period_of_year(1995), std::optional<std::size_t>(1));
  EXPECT_FALSE(p.period_of_year(1980).has_value());
  EXPECT_EQ(p.period_of_movie("m102"), std::optional<std::size_t>(1));
  EXPECT_FALSE(p.period_of_movie("zzz").has_value());
}

TEST(SplitPeriods, Errors) {
  auto m = manifest_of(movies_in_years({2000, 2000, 2001}));
  EXPECT_EQ(code_of([&] { corpus::split_periods(m, 3); }), ErrorCode::TooManyPeriods);
  EXPECT_EQ(code_of([&] { corpus::split_periods(m, 0); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { corpus::split_periods(CorpusManifest{}, 1); }), ErrorCode::EmptyManifest);
}

// Exhaustive reference: every placement of k-1 cuts between distinct years,
// ranked by (max |size - n/k|, max - min, cut vector).
std::vector<std::size_t> brute_force_sizes(const std::vector<std::size_t>& cohorts, int k) {
  const std::size_t d = cohorts.size();
  std::size_t n = 0;
  for (auto c : cohorts) n += c;
  const double target = static_cast<double>(n) / k;
  std::vector<std::size_t> best;
  double best_dev = std::numeric_limits<double>::infinity();
  std::size_t best_spread = 0;
  std::vector<std::size_t> cuts(static_cast<std::size_t>(k - 1));
  // Enumerate increasing cut positions in 1..d-1 lexicographically.
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t idx, std::size_t from) {
    if (idx == cuts.size()) {
      std::vector<std::size_t> s;
      std::size_t start = 0;
      auto bounds = cuts;
      bounds.push_back(d);
      for (auto e : bounds) {
        std::size_t total = 0;
        for (std::size_t y = start; y < e; ++y) total += cohorts[y];
        s.push_back(total);
        start = e;
      }
      double dev = 0;
      for (auto v : s) dev = std::max(dev, std::fabs(static_cast<double>(v) - target));
      const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
      const std::size_t spread = *hi - *lo;
      if (dev < best_dev - 1e-9 || (std::fabs(dev - best_dev) <= 1e-9 && spread < best_spread)) {
        best_dev = dev;
        best_spread = spread;
        best = s;
      }
      return;
    }
    for (std::size_t c = from; c + (cuts.size() - idx) <= d; ++c) {
      cuts[idx] = c;
      rec(idx + 1, c + 1);
    }
  };
  rec(0, 1);
  return best;
}

TEST(SplitPeriods, MatchesExhaustiveSearch) {
  Rng rng(41);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t d = 1 + rng.below(9);
    const int k = 1 + static_cast<int>(rng.below(std::min<std::size_t>(d, 5)));
    std::vector<std::size_t> cohorts(d);
    std::vector<int> years;
    int year = 1990;
    for (std::size_t y = 0; y < d; ++y) {
      cohorts[y] = 1 + rng.below(rng.bernoulli(0.3) ? 12 : 4);
      years.insert(years.end(), cohorts[y], year);
      year += 1 + static_cast<int>(rng.below(3));  // gaps between cohort years
    }
    auto p = corpus::split_periods(manifest_of(movies_in_years(years)), k);
    EXPECT_EQ(sizes(p), brute_force_sizes(cohorts, k)) << "trial " << trial;
  }
}

TEST(SplitPeriods, PartitionInvariantsAndQuartileBound) {
  Rng rng(43);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t d = 4 + rng.below(20);
    std::vector<int> years;
    std::size_t largest = 0;
    for (std::size_t y = 0; y < d; ++y) {
      const std::size_t c = 1 + rng.below(rng.bernoulli(0.2) ? 30 : 6);
      largest = std::max(largest, c);
      years.insert(years.end(), c, 1985 + static_cast<int>(y));
    }
    auto m = manifest_of(movies_in_years(years));
    auto p = corpus::split_periods(m, 4);
    ASSERT_EQ(p.periods.size(), 4u);
    std::set<std::string> seen;
    std::size_t total = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      const auto& per = p.periods[i];
      if (i > 0) {
        EXPECT_EQ(per.year_lo, p.periods[i - 1].year_hi + 1);
      }
      for (const auto& id : per.movie_ids) {
        EXPECT_TRUE(seen.insert(id).second);
        EXPECT_TRUE(per.contains_year(m.find(id)->year));
      }
      total += per.movie_ids.size();
    }
    EXPECT_EQ(total, m.size());
    const auto s = sizes(p);
    const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
    EXPECT_LE(*hi - *lo, largest) << "trial " << trial;
  }
}

// --- genres ---------------------------------------------------------------

TEST(TopGenres, Examples) {
  std::vector<SyntheticMovie> movies;
  for (int i = 0; i < 5; ++i) movies.push_back({.id = "d" + std::to_string(i), .genres = {"Drama"}});
  for (int i = 0; i < 3; ++i) movies.push_back({.id = "c" + std::to_string(i), .genres = {"Comedy"}});
  movies.push_back({.id = "x", .genres = {"Crime"}});
  auto m = manifest_of(movies);
  EXPECT_EQ(corpus::top_genres(m, 2), (std::vector<std::string>{"Drama", "Comedy"}));
  EXPECT_EQ(corpus::top_genres(m, 10), (std::vector<std::string>{"Drama", "Comedy", "Crime"}));

  auto tie = manifest_of({{.id = "1", .genres = {"B"}}, {.id = "2", .genres = {"A"}}, {.id = "3", .genres = {"B"}},
                          {.id = "4", .genres = {"A"}}});
  EXPECT_EQ(corpus::top_genres(tie, 1), (std::vector<std::string>{"A"}));

  auto multi = manifest_of({{.id = "1", .genres = {"Drama", "Crime"}}, {.id = "2", .genres = {"Crime"}}});
  EXPECT_EQ(corpus::top_genres(multi, 2), (std::vector<std::string>{"Crime", "Drama"}));
  EXPECT_EQ(code_of([&] { corpus::top_genres(multi, 0); }), ErrorCode::InvalidArgument);
}

TEST(TopGenres, PrefixProperty) {
  Rng rng(47);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<SyntheticMovie> movies;
    for (int i = 0; i < 30; ++i) {
      SyntheticMovie m{.id = "m" + std::to_string(i)};
      m.genres.clear();
      for (int g = 0; g < 1 + static_cast<int>(rng.below(3)); ++g) m.genres.push_back(std::string(1, char('A' + rng.below(8))));
      movies.push_back(m);
    }
    auto m = manifest_of(movies);
    for (std::size_t n = 1; n < 10; ++n) {
      auto a = corpus::top_genres(m, n), b = corpus::top_genres(m, n + 1);
      ASSERT_LE(a.size(), b.size());
      EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
    }
  }
}

// --- Bechdel ----------------------------------------------------------------

class FakeBechdelService {
 public:
  FakeBechdelService() {
    server_.Get("/api/v1/getMovieByImdbId", [this](const httplib::Request& req, httplib::Response& res) {
      ++calls_;
      const auto id = req.get_param_value("imdbid");
      if (id == "0000001") {
        res.set_content(R"({"imdbid":"0000001","rating":"3","title":"One"})", "application/json");
      } else if (id == "0000002") {
        res.set_content(R"({"imdbid":"0000002","rating":1})", "application/json");
      } else {
        res.set_content(R"({"status":"404","description":"Could not find movie"})", "application/json");
      }
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeBechdelService() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int calls() const { return calls_; }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> calls_{0};
};

TEST(Bechdel, PassRequiresAllThreeCriteria) {
  EXPECT_TRUE(corpus::passes_bechdel(3));
  EXPECT_FALSE(corpus::passes_bechdel(2));
  EXPECT_FALSE(corpus::passes_bechdel(0));
  EXPECT_EQ(corpus::normalize_imdb_id("tt0000001"), "0000001");
  EXPECT_EQ(corpus::normalize_imdb_id("0000001"), "0000001");
}

TEST(Bechdel, CacheHitMakesNoNetworkCall) {
  TempDir dir;
  FakeBechdelService service;
  testing::write_text(dir / "cache.jsonl", R"({"imdbid":"0000009","rating":2})" "\n");
  corpus::BechdelCache cache(dir / "cache.jsonl");
  corpus::HttpBechdelClient client(service.url());
  corpus::EnrichReport report;
  auto out = corpus::enrich_bechdel(manifest_of({{.id = "tt0000009"}}), cache, &client, nullptr, &report);
  EXPECT_EQ(out.movies[0].bechdel_score, std::optional<int>(2));
  EXPECT_EQ(report.from_cache, 1u);
  EXPECT_EQ(service.calls(), 0);
}

TEST(Bechdel, FetchesUnknownAndUpdatesCache) {
  TempDir dir;
  FakeBechdelService service;
  corpus::HttpBechdelClient client(service.url());
  corpus::EnrichReport report;
  {
    corpus::BechdelCache cache(dir / "cache.jsonl");
    auto out = corpus::enrich_bechdel(manifest_of({{.id = "tt0000001"}, {.id = "tt0000002"}, {.id = "tt0000404"}}),
                                      cache, &client, nullptr, &report);
    EXPECT_EQ(out.movies[0].bechdel_score, std::optional<int>(3));
    EXPECT_EQ(out.movies[1].bechdel_score, std::optional<int>(1));
    EXPECT_FALSE(out.movies[2].bechdel_score.has_value());
    EXPECT_EQ(report.fetched, 2u);
    EXPECT_EQ(report.uncovered, (std::vector<std::string>{"tt0000404"}));
    EXPECT_EQ(service.calls(), 3);
  }
  corpus::BechdelCache reloaded(dir / "cache.jsonl");
  EXPECT_EQ(reloaded.size(), 2u);
  EXPECT_EQ(reloaded.get("0000001"), std::optional<int>(3));
}

TEST(Bechdel, NetworkFailureFallsBackToCacheAndWarns) {
  TempDir dir;
  corpus::BechdelCache cache(dir / "cache.jsonl");
  cache.put({"0000005", 3});
  // Nothing listens on port 1, so the connection is refused at once.
  corpus::HttpBechdelClient client("http://127.0.0.1:1");
  WarningLog warnings;
  corpus::EnrichReport report;
  auto out = corpus::enrich_bechdel(manifest_of({{.id = "tt0000005"}, {.id = "tt0000006"}, {.id = "tt0000007"}}),
                                    cache, &client, &warnings, &report);
  EXPECT_EQ(out.movies[0].bechdel_score, std::optional<int>(3));
  EXPECT_TRUE(report.network_failed);
  EXPECT_EQ(report.uncovered.size(), 2u);
  EXPECT_EQ(warnings.size(), 1u);
  EXPECT_TRUE(warnings.contains("bechdel-network"));
}

// --- sampling ---------------------------------------------------------------

TEST(Sampling, PlanExamples) {
  auto short_plan = sampling::build_plan("m", 10.0, 2.0);
  EXPECT_EQ(short_plan.timestamps, (std::vector<double>{0, 2, 4, 6, 8}));
  EXPECT_EQ(short_plan.timestamps_ms(), (std::vector<std::int64_t>{0, 2000, 4000, 6000, 8000}));

  corpus::MovieRecord movie;
  movie.id = "avg";
  movie.runtime_min = 109;
  EXPECT_EQ(sampling::build_plan(movie, 2.0).timestamps.size(), 3270u);

  EXPECT_EQ(code_of([] { sampling::build_plan("m", 10.0, 0.0); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { sampling::build_plan("m", 10.0, -1.0); }), ErrorCode::InvalidArgument);
}

TEST(Sampling, PlanInvariants) {
  Rng rng(53);
  for (int trial = 0; trial < 200; ++trial) {
    const double duration = 1.0 + rng.uniform() * 8000.0;
    const double interval = std::vector<double>{0.1, 0.5, 1.0, 2.0, 2.5, 3.3}[rng.below(6)];
    auto plan = sampling::build_plan("m", duration, interval);
    ASSERT_FALSE(plan.timestamps.empty());
    EXPECT_EQ(plan.timestamps.front(), 0.0);
    EXPECT_LT(plan.timestamps.back(), duration);
    EXPECT_GE(plan.timestamps.back() + interval, duration - 1e-6);
    for (std::size_t i = 1; i < plan.timestamps.size(); ++i) {
      EXPECT_NEAR(plan.timestamps[i] - plan.timestamps[i - 1], interval, 1e-9);
    }
  }
}

TEST(Sampling, ExtractionCommands) {
  auto plan = sampling::build_plan("tt01", 6.0, 2.0);
  const std::string tmpl = "decode {input} at {timestamp} into {output}";
  auto cmds = sampling::render_extraction_commands(plan, tmpl, "/v/it's.mkv", "/frames");
  ASSERT_EQ(cmds.size(), 3u);
  EXPECT_EQ(cmds[1], "decode '/v/it'\\''s.mkv' at 2.000 into '/frames/tt01/000002000.jpg'");
  EXPECT_EQ(cmds, sampling::render_extraction_commands(plan, tmpl, "/v/it's.mkv", "/frames"));
  EXPECT_EQ(sampling::render_extraction_commands(plan, sampling::kDefaultExtractTemplate, "in.mp4", "o").size(), 3u);

  EXPECT_EQ(code_of([&] { sampling::render_extraction_commands(plan, "x {input} {output}", "i", "o"); }),
            ErrorCode::MalformedTemplate);
  EXPECT_EQ(code_of([&] { sampling::render_extraction_commands(plan, "{input} {timestamp} {output} {fps}", "i", "o"); }),
            ErrorCode::MalformedTemplate);
  EXPECT_EQ(code_of([&] { sampling::render_extraction_commands(plan, "{input} {timestamp} {output", "i", "o"); }),
            ErrorCode::MalformedTemplate);
}

TEST(Sampling, VerifyFrames) {
  TempDir dir;
  auto plan = sampling::build_plan("m1", 6.0, 2.0);
  auto report = sampling::verify_frames(plan, dir.path());
  EXPECT_EQ(report.missing_ms, (std::vector<std::int64_t>{0, 2000, 4000}));

  for (auto ts : plan.timestamps_ms()) testing::write_text(dir.path() / sampling::frame_relative_path("m1", ts), "jpg");
  EXPECT_TRUE(sampling::verify_frames(plan, dir.path()).complete());

  std::filesystem::remove(dir.path() / sampling::frame_relative_path("m1", 2000));
  testing::write_text(dir.path() / sampling::frame_relative_path("m1", 4000), "");
  report = sampling::verify_frames(plan, dir.path());
  EXPECT_EQ(report.missing_ms, (std::vector<std::int64_t>{2000}));
  EXPECT_EQ(report.empty_ms, (std::vector<std::int64_t>{4000}));
  EXPECT_EQ(report.incomplete_ms(), (std::vector<std::int64_t>{2000, 4000}));
}

}  // namespace
}  // namespace screentime
