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

#include "screentime/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "screentime/error.hpp"

namespace screentime::metrics {

MovieMetrics movie_ffr(const std::string& movie_id, std::uint64_t n_female, std::uint64_t n_male,
                       const calibration::CorrectionPair& factors, WarningLog* warnings) {
  MovieMetrics m;
  m.movie_id = movie_id;
  m.n_female_det = n_female;
  m.n_male_det = n_male;
  const double nf = static_cast<double>(n_female);
  const double nm = static_cast<double>(n_male);
  m.corrected_counts = calibration::correct_counts(nf, nm, factors);
  if (m.no_faces()) {
    if (warnings) warnings->warn("no-faces", "movie has no detected faces; excluded from FFR aggregates", movie_id);
    return m;
  }
  m.raw_ffr = nf / (nf + nm);
  m.corrected_ffr = calibration::correct_ffr(*m.raw_ffr, factors, warnings, movie_id);
  return m;
}

MovieMetrics movie_ffr(const std::string& movie_id, std::span<const FrameDetections> frames,
                       const calibration::CorrectionFactors& factors, const std::string& period,
                       WarningLog* warnings) {
  std::uint64_t nf = 0, nm = 0;
  for (const auto& frame : frames) {
    for (const auto& face : frame.faces) {
      if (face.movie_id != movie_id) continue;
      (face.gender == Gender::Female ? nf : nm) += 1;
    }
  }
  auto m = movie_ffr(movie_id, nf, nm, factors.at(period).pair(), warnings);
  m.period = period;
  return m;
}

MeanSd mean_sd(std::span<const double> values) {
  MeanSd out;
  out.n = values.size();
  if (values.empty()) return out;
  // Two passes keep the result independent of accumulation tricks.
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(out.n);
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.sd = std::sqrt(ss / static_cast<double>(out.n));
  return out;
}

std::vector<GenreStat> aggregate_genre(std::span<const MovieMetrics> movies, const corpus::CorpusManifest& manifest,
                                       const std::vector<std::string>& genres) {
  std::map<std::string, std::vector<double>> values;
  for (const auto& g : genres) values[g];
  for (const auto& m : movies) {
    if (!m.corrected_ffr) continue;
    const auto* rec = manifest.find(m.movie_id);
    if (!rec) continue;
    for (const auto& g : rec->genres) {
      auto it = values.find(g);
      if (it != values.end()) it->second.push_back(*m.corrected_ffr);
    }
  }
  std::vector<GenreStat> out;
  for (const auto& g : genres) out.push_back({g, mean_sd(values[g])});
  return out;
}

// Histograms ------------------------------------------------------------------

std::size_t bin_count(double bin_width_pct) {
  if (!(bin_width_pct > 0.0) || bin_width_pct > 100.0) {
    throw Error(ErrorCode::InvalidArgument, "bin width must be in (0, 100]");
  }
  return static_cast<std::size_t>(std::ceil(100.0 / bin_width_pct - 1e-9));
}

std::size_t bin_index(double ffr, double bin_width_pct) {
  const std::size_t n = bin_count(bin_width_pct);
  // The epsilon absorbs representation error such as 0.35 * 100 = 34.99...
  const double pos = std::floor(ffr * 100.0 / bin_width_pct + 1e-9);
  if (pos <= 0.0) return 0;
  return std::min(static_cast<std::size_t>(pos), n - 1);
}

FfrHistogram build_histogram(std::string label, std::span<const MovieMetrics> movies, double bin_width_pct) {
  FfrHistogram h;
  h.label = std::move(label);
  h.bin_width_pct = bin_width_pct;
  h.bins.assign(bin_count(bin_width_pct), 0);
  std::vector<std::pair<std::string, double>> defined;
  for (const auto& m : movies) {
    if (m.corrected_ffr) defined.emplace_back(m.movie_id, *m.corrected_ffr);
  }
  std::sort(defined.begin(), defined.end());
  std::vector<double> values;
  for (const auto& [id, v] : defined) {
    ++h.bins[bin_index(v, bin_width_pct)];
    h.movie_ids.push_back(id);
    values.push_back(v);
  }
  h.ffr = mean_sd(values);
  return h;
}

std::vector<FfrHistogram> period_histograms(std::span<const MovieMetrics> movies,
                                            const corpus::PeriodPartition& partition, double bin_width_pct,
                                            WarningLog* warnings) {
  std::vector<std::vector<MovieMetrics>> by_period(partition.periods.size());
  for (const auto& m : movies) {
    if (auto idx = partition.period_of_movie(m.movie_id)) by_period[*idx].push_back(m);
  }
  std::vector<FfrHistogram> out;
  for (std::size_t i = 0; i < by_period.size(); ++i) {
    out.push_back(build_histogram(partition.periods[i].label(), by_period[i], bin_width_pct));
    if (out.back().ffr.n == 0 && warnings) {
      warnings->warn("empty-period", "no movie with a defined FFR in this period", out.back().label);
    }
  }
  return out;
}

std::string_view to_string(Covariate c) {
  switch (c) {
    case Covariate::Budget: return "budget";
    case Covariate::Gross: return "gross";
    case Covariate::RatingValue: return "rating_value";
    case Covariate::RatingCount: return "rating_count";
    case Covariate::FemaleRatingShare: return "female_rating_share";
  }
  return "budget";
}

const std::vector<Covariate>& all_covariates() {
  static const std::vector<Covariate> all = {Covariate::Budget, Covariate::Gross, Covariate::RatingValue,
                                             Covariate::RatingCount, Covariate::FemaleRatingShare};
  return all;
}

std::optional<Covariate> parse_covariate(std::string_view s) {
  for (auto c : all_covariates()) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

std::optional<double> covariate_value(const corpus::MovieRecord& movie, Covariate c) {
  switch (c) {
    case Covariate::Budget: return static_cast<double>(movie.budget_usd);
    case Covariate::Gross: return static_cast<double>(movie.gross_usd);
    case Covariate::RatingValue: return movie.rating_value;
    case Covariate::RatingCount: return static_cast<double>(movie.rating_count);
    case Covariate::FemaleRatingShare: return movie.female_rating_share;
  }
  return std::nullopt;
}

std::vector<std::optional<double>> covariate_projection(const FfrHistogram& histogram,
                                                        std::span<const MovieMetrics> movies,
                                                        const corpus::CorpusManifest& manifest,
                                                        Covariate covariate) {
  const std::set<std::string> members(histogram.movie_ids.begin(), histogram.movie_ids.end());
  std::vector<std::size_t> bins;
  std::vector<double> values;
  for (const auto& m : movies) {
    if (!m.corrected_ffr || !members.count(m.movie_id)) continue;
    const auto* rec = manifest.find(m.movie_id);
    if (!rec) continue;
    auto v = covariate_value(*rec, covariate);
    if (!v) continue;
    bins.push_back(bin_index(*m.corrected_ffr, histogram.bin_width_pct));
    values.push_back(*v);
  }
  if (values.size() < 2) {
    throw Error(ErrorCode::NoCovariate, fmt::format("{} is present for {} movie(s) of {}", to_string(covariate),
                                                    values.size(), histogram.label));
  }
  const auto ranks = stats::average_ranks(values);
  std::vector<double> sum(histogram.bins.size(), 0.0);
  std::vector<std::size_t> n(histogram.bins.size(), 0);
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    sum[bins[i]] += ranks[i];
    ++n[bins[i]];
  }
  std::vector<std::optional<double>> mean(histogram.bins.size());
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (std::size_t b = 0; b < mean.size(); ++b) {
    if (n[b] == 0) continue;
    mean[b] = sum[b] / static_cast<double>(n[b]);
    lo = any ? std::min(lo, *mean[b]) : *mean[b];
    hi = any ? std::max(hi, *mean[b]) : *mean[b];
    any = true;
  }
  for (auto& t : mean) {
    if (!t) continue;
    t = hi > lo ? (*t - lo) / (hi - lo) : 0.5;
  }
  return mean;
}

// Bechdel -----------------------------------------------------------------------

BechdelComparison bechdel_comparison(std::span<const MovieMetrics> movies, const corpus::CorpusManifest& manifest,
                                     const std::vector<std::string>& genres) {
  std::map<std::string, std::vector<double>> ffr;
  std::map<std::string, std::pair<std::size_t, std::size_t>> coverage;  // covered, passed
  for (const auto& g : genres) {
    ffr[g];
    coverage[g];
  }
  for (const auto& m : movies) {
    const auto* rec = manifest.find(m.movie_id);
    if (!rec) continue;
    for (const auto& g : rec->genres) {
      if (!ffr.count(g)) continue;
      if (m.corrected_ffr) ffr[g].push_back(*m.corrected_ffr);
      if (rec->bechdel_score) {
        ++coverage[g].first;
        if (corpus::passes_bechdel(*rec->bechdel_score)) ++coverage[g].second;
      }
    }
  }
  BechdelComparison out;
  std::vector<double> x, y;
  for (const auto& g : genres) {
    BechdelGenreRow row;
    row.genre = g;
    row.ffr = mean_sd(ffr[g]);
    row.covered = coverage[g].first;
    row.passed = coverage[g].second;
    if (row.covered > 0) row.pass_rate = static_cast<double>(row.passed) / static_cast<double>(row.covered);
    if (row.pass_rate && row.ffr.n > 0) {
      out.compared.push_back(g);
      x.push_back(row.ffr.mean);
      y.push_back(*row.pass_rate);
    }
    out.rows.push_back(std::move(row));
  }
  if (out.compared.size() < 2) {
    throw Error(ErrorCode::TooFewGenres,
                fmt::format("{} genre(s) have Bechdel coverage and a defined FFR, need 2", out.compared.size()));
  }
  out.spearman = stats::spearman(x, y);
  return out;
}

std::vector<BechdelPeriodRate> bechdel_period_rates(const corpus::CorpusManifest& manifest,
                                                    const corpus::PeriodPartition& partition) {
  std::vector<BechdelPeriodRate> out;
  for (const auto& p : partition.periods) {
    BechdelPeriodRate r;
    r.label = p.label();
    for (const auto& id : p.movie_ids) {
      ++r.movies;
      const auto* rec = manifest.find(id);
      if (!rec || !rec->bechdel_score) continue;
      ++r.covered;
      if (corpus::passes_bechdel(*rec->bechdel_score)) ++r.passed;
    }
    if (r.covered > 0) r.pass_rate = static_cast<double>(r.passed) / static_cast<double>(r.covered);
    out.push_back(std::move(r));
  }
  return out;
}

// Combinations --------------------------------------------------------------------

std::string key_label(const CombinationKey& key) { return fmt::format("{}F{}M", key.first, key.second); }

namespace {

CombinationKey key_of(const FrameDetections& frame) {
  CombinationKey key{0, 0};
  for (const auto& f : frame.faces) (f.gender == Gender::Female ? key.first : key.second) += 1;
  return key;
}

std::size_t gindex(Gender g) { return g == Gender::Female ? 0 : 1; }

}  // namespace

void CombinationDistribution::add(const FrameDetections& frame) {
  if (frame.faces.empty()) return;
  ++frames[key_of(frame)];
  ++total;
}

void CombinationDistribution::merge(const CombinationDistribution& other) {
  for (const auto& [k, v] : other.frames) frames[k] += v;
  total += other.total;
}

double CombinationDistribution::share(const CombinationKey& key) const {
  if (total == 0) return 0.0;
  auto it = frames.find(key);
  return it == frames.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(total);
}

std::vector<CombinationKey> CombinationDistribution::ranked() const {
  std::vector<std::pair<CombinationKey, std::uint64_t>> items(frames.begin(), frames.end());
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<CombinationKey> out;
  for (const auto& [k, v] : items) out.push_back(k);
  return out;
}

double CombinationDistribution::coverage(std::size_t k) const {
  if (total == 0) return 0.0;
  const auto keys = ranked();
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < std::min(k, keys.size()); ++i) sum += frames.at(keys[i]);
  return static_cast<double>(sum) / static_cast<double>(total);
}

std::vector<CombinationKey> CombinationDistribution::covering(double target) const {
  std::vector<CombinationKey> out;
  std::uint64_t sum = 0;
  for (const auto& k : ranked()) {
    if (total > 0 && static_cast<double>(sum) >= target * static_cast<double>(total)) break;
    out.push_back(k);
    sum += frames.at(k);
  }
  return out;
}

// Thirds --------------------------------------------------------------------------

int thirds_cell(const detection::BBox& box) {
  auto third = [](double v) {
    if (v < 1.0 / 3.0) return 0;
    if (v < 2.0 / 3.0) return 1;
    return 2;
  };
  return third(box.center_y()) * 3 + third(box.center_x());
}

std::uint64_t ThirdsMatrix::total(Gender g) const {
  const auto& row = counts[gindex(g)];
  return std::accumulate(row.begin(), row.end(), std::uint64_t{0});
}

std::optional<std::array<double, 9>> ThirdsMatrix::percentages(Gender g) const {
  const auto t = total(g);
  if (t == 0) return std::nullopt;
  std::array<double, 9> out{};
  for (std::size_t c = 0; c < 9; ++c) {
    out[c] = 100.0 * static_cast<double>(counts[gindex(g)][c]) / static_cast<double>(t);
  }
  return out;
}

void add_thirds(ThirdsSet& set, const FrameDetections& frame) {
  if (frame.faces.empty()) return;
  const auto key = key_of(frame);
  auto& m = set[key];
  m.key = key;
  for (const auto& f : frame.faces) ++m.counts[gindex(f.gender)][thirds_cell(f.bbox)];
}

void merge_thirds(ThirdsSet& into, const ThirdsSet& from) {
  for (const auto& [key, m] : from) {
    auto& dst = into[key];
    dst.key = key;
    for (std::size_t g = 0; g < 2; ++g) {
      for (std::size_t c = 0; c < 9; ++c) dst.counts[g][c] += m.counts[g][c];
    }
  }
}

std::string Configuration::label() const {
  return fmt::format("{}:{}", key_label(key), detection::to_string(gender));
}

std::vector<ThirdsTest> thirds_independence(const ThirdsSet& set, const std::vector<CombinationKey>& keys) {
  std::vector<std::pair<Configuration, std::array<std::uint64_t, 9>>> configs;
  for (const auto& [key, m] : set) {
    if (!keys.empty() && std::find(keys.begin(), keys.end(), key) == keys.end()) continue;
    for (Gender g : {Gender::Female, Gender::Male}) {
      if (m.total(g) > 0) configs.push_back({{key, g}, m.counts[gindex(g)]});
    }
  }
  if (configs.size() < 2) {
    throw Error(ErrorCode::InsufficientData,
                fmt::format("{} face configuration(s) in scope, need 2", configs.size()));
  }
  auto run = [](const std::vector<std::vector<double>>& table, const char* what, ThirdsTest& t)
      -> std::optional<stats::TestResult> {
    try {
      return stats::chi_square(table);
    } catch (const Error& e) {
      t.notes.push_back(fmt::format("{}: {}", what, e.what()));
      return std::nullopt;
    }
  };
  std::vector<ThirdsTest> out;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    for (std::size_t j = i + 1; j < configs.size(); ++j) {
      ThirdsTest t;
      t.a = configs[i].first;
      t.b = configs[j].first;
      std::vector<std::vector<double>> grid(2, std::vector<double>(9)), horiz(2, std::vector<double>(3)),
          vert(2, std::vector<double>(3));
      for (std::size_t r = 0; r < 2; ++r) {
        const auto& c = r == 0 ? configs[i].second : configs[j].second;
        for (std::size_t cell = 0; cell < 9; ++cell) {
          const auto v = static_cast<double>(c[cell]);
          grid[r][cell] = v;
          horiz[r][cell % 3] += v;
          vert[r][cell / 3] += v;
        }
      }
      t.grid = run(grid, "grid", t);
      t.horizontal = run(horiz, "horizontal", t);
      t.vertical = run(vert, "vertical", t);
      out.push_back(std::move(t));
    }
  }
  return out;
}

// Face area -----------------------------------------------------------------------

FaceismAccumulator::FaceismAccumulator() = default;

void FaceismAccumulator::add(Gender g, double area) {
  sketch_[index(g)].update(area);
  all_.update(area);
  const auto q = static_cast<std::uint32_t>(std::llround(std::clamp(area, 0.0, 1.0) / kAreaQuantum));
  ++quantized_[index(g)][q];
}

void FaceismAccumulator::merge(const FaceismAccumulator& other) {
  for (std::size_t g = 0; g < 2; ++g) {
    sketch_[g].merge(other.sketch_[g]);
    for (const auto& [q, n] : other.quantized_[g]) quantized_[g][q] += n;
  }
  all_.merge(other.all_);
}

FaceismSummary FaceismAccumulator::summarize() const {
  for (Gender g : {Gender::Female, Gender::Male}) {
    if (sketch_[index(g)].empty()) {
      throw Error(ErrorCode::EmptyGender,
                  fmt::format("no {} faces in scope for the face-area analysis", detection::to_string(g)));
    }
  }
  FaceismSummary s;
  for (std::size_t g = 0; g < 2; ++g) {
    s.faces[g] = sketch_[g].count();
    s.median[g] = sketch_[g].quantile(0.5);
  }
  s.overall_median = all_.quantile(0.5);
  s.tail_threshold = all_.quantile(0.2);
  s.median_difference = s.median[1] - s.median[0];

  std::vector<stats::TiedGroup> groups;
  auto fi = quantized_[0].begin();
  auto mi = quantized_[1].begin();
  while (fi != quantized_[0].end() || mi != quantized_[1].end()) {
    std::uint32_t q;
    if (mi == quantized_[1].end() || (fi != quantized_[0].end() && fi->first < mi->first)) {
      q = fi->first;
    } else {
      q = mi->first;
    }
    stats::TiedGroup t{static_cast<double>(q) * kAreaQuantum, 0, 0};
    if (fi != quantized_[0].end() && fi->first == q) t.count_a = (fi++)->second;
    if (mi != quantized_[1].end() && mi->first == q) t.count_b = (mi++)->second;
    groups.push_back(t);
  }
  s.mann_whitney = stats::mann_whitney_u_grouped(groups);
  return s;
}

void FramingPartial::add(const FrameDetections& frame) {
  combinations.add(frame);
  add_thirds(thirds, frame);
  for (const auto& f : frame.faces) areas[gindex(f.gender)].push_back(f.bbox.area());
}

void FramingAccumulator::absorb(const FramingPartial& movie) {
  combinations.merge(movie.combinations);
  merge_thirds(thirds, movie.thirds);
  for (Gender g : {Gender::Female, Gender::Male}) {
    for (double a : movie.areas[gindex(g)]) faceism.add(g, a);
    faces += movie.areas[gindex(g)].size();
  }
}

void FramingAccumulator::merge(const FramingAccumulator& other) {
  combinations.merge(other.combinations);
  merge_thirds(thirds, other.thirds);
  faceism.merge(other.faceism);
  faces += other.faces;
}

FaceismSummary faceism(std::span<const FrameDetections> frames, const std::set<std::string>& scope) {
  FaceismAccumulator acc;
  for (const auto& frame : frames) {
    if (!scope.count(frame.movie_id)) continue;
    for (const auto& f : frame.faces) acc.add(f.gender, f.bbox.area());
  }
  return acc.summarize();
}

CombinationDistribution combinations(std::span<const FrameDetections> frames, const std::set<std::string>& scope) {
  CombinationDistribution d;
  for (const auto& frame : frames) {
    if (scope.count(frame.movie_id)) d.add(frame);
  }
  return d;
}

ThirdsSet thirds_matrices(std::span<const FrameDetections> frames, const std::set<std::string>& scope) {
  ThirdsSet set;
  for (const auto& frame : frames) {
    if (scope.count(frame.movie_id)) add_thirds(set, frame);
  }
  return set;
}

}  // namespace screentime::metrics
