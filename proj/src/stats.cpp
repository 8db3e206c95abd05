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

#include "screentime/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <utility>

#include "screentime/error.hpp"

namespace screentime::stats {

std::string_view to_string(TestMethod method) {
  switch (method) {
    case TestMethod::Exact: return "exact";
    case TestMethod::NormalApprox: return "normal_approx";
    case TestMethod::ChiSquare: return "chi_square";
  }
  return "unknown";
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b];
  });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // Positions i..j-1 hold ranks i+1..j.
    const double mean_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t) ranks[order[t]] = mean_rank;
    i = j;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::LengthMismatch, "spearman inputs differ in length");
  }
  if (x.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "spearman needs at least two pairs");
  }
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(rx.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mx;
    const double dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw Error(ErrorCode::ZeroVariance, "spearman input has constant ranks");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace {

long double binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0.0L;
  k = std::min(k, n - k);
  long double r = 1.0L;
  for (std::uint64_t i = 1; i <= k; ++i) {
    r = r * static_cast<long double>(n - k + i) / static_cast<long double>(i);
  }
  return r;
}

// Two-sided exact p-value from the permutation distribution of the rank sum
// of the smaller sample. Rank sums are kept doubled so midranks stay integral.
double exact_mann_whitney_p(std::span<const TiedGroup> groups, bool select_a,
                            std::uint64_t total) {
  std::uint64_t k = 0;
  std::int64_t observed2 = 0;
  std::uint64_t start = 0;
  std::vector<std::pair<std::uint64_t, std::int64_t>> sizes;  // (t, doubled midrank)
  sizes.reserve(groups.size());
  for (const auto& g : groups) {
    const std::uint64_t t = g.count_a + g.count_b;
    if (t == 0) continue;
    const std::int64_t midrank2 = static_cast<std::int64_t>(2 * start + t + 1);
    const std::uint64_t chosen = select_a ? g.count_a : g.count_b;
    k += chosen;
    observed2 += static_cast<std::int64_t>(chosen) * midrank2;
    sizes.emplace_back(t, midrank2);
    start += t;
  }
  const std::int64_t expected2 = static_cast<std::int64_t>(k * (total + 1));
  const std::int64_t observed_dev = std::llabs(observed2 - expected2);
  const std::size_t max_sum = static_cast<std::size_t>(2 * total * k + 1);

  // ways[j][s]: weighted number of ways to pick j items with doubled rank sum s.
  std::vector<std::vector<long double>> ways(k + 1, std::vector<long double>(max_sum + 1, 0.0L));
  ways[0][0] = 1.0L;
  std::uint64_t seen = 0;
  for (const auto& [t, midrank2] : sizes) {
    const std::uint64_t upto = std::min<std::uint64_t>(k, seen + t);
    std::vector<long double> choose(std::min<std::uint64_t>(t, k) + 1);
    for (std::uint64_t c = 0; c < choose.size(); ++c) choose[c] = binomial(t, c);
    for (std::uint64_t j = upto + 1; j-- > 0;) {
      for (std::size_t s = max_sum + 1; s-- > 0;) {
        long double acc = 0.0L;
        const std::uint64_t cmax = std::min<std::uint64_t>(t, j);
        for (std::uint64_t c = 1; c <= cmax; ++c) {
          const std::int64_t prev = static_cast<std::int64_t>(s) - static_cast<std::int64_t>(c) * midrank2;
          if (prev < 0) break;
          const long double w = ways[j - c][static_cast<std::size_t>(prev)];
          if (w != 0.0L) acc += w * choose[c];
        }
        ways[j][s] += acc;
      }
    }
    seen += t;
  }
  long double extreme = 0.0L;
  for (std::size_t s = 0; s <= max_sum; ++s) {
    if (ways[k][s] == 0.0L) continue;
    if (std::llabs(static_cast<std::int64_t>(s) - expected2) >= observed_dev) extreme += ways[k][s];
  }
  const long double p = extreme / binomial(total, k);
  return static_cast<double>(std::clamp(p, 0.0L, 1.0L));
}

}  // namespace

TestResult mann_whitney_u_grouped(std::span<const TiedGroup> groups) {
  std::uint64_t m = 0, n = 0;
  for (const auto& g : groups) {
    m += g.count_a;
    n += g.count_b;
  }
  if (m == 0 || n == 0) {
    throw Error(ErrorCode::InvalidArgument, "mann-whitney needs two non-empty samples");
  }
  for (std::size_t i = 1; i < groups.size(); ++i) {
    if (!(groups[i - 1].value < groups[i].value)) {
      throw Error(ErrorCode::InvalidArgument, "tied groups must be strictly increasing");
    }
  }

  long double u = 0.0L;
  std::uint64_t b_below = 0;
  long double tie_term = 0.0L;
  for (const auto& g : groups) {
    u += static_cast<long double>(g.count_a) *
         (static_cast<long double>(b_below) + 0.5L * static_cast<long double>(g.count_b));
    b_below += g.count_b;
    const long double t = static_cast<long double>(g.count_a + g.count_b);
    tie_term += t * t * t - t;
  }

  TestResult result;
  result.statistic = static_cast<double>(u);
  const std::uint64_t total = m + n;
  if (m * n <= kMannWhitneyExactLimit) {
    result.method = TestMethod::Exact;
    result.p_value = exact_mann_whitney_p(groups, m <= n, total);
    return result;
  }

  result.method = TestMethod::NormalApprox;
  const long double mn = static_cast<long double>(m) * static_cast<long double>(n);
  const long double big_n = static_cast<long double>(total);
  const long double variance = mn / 12.0L * ((big_n + 1.0L) - tie_term / (big_n * (big_n - 1.0L)));
  const long double deviation = std::fabs(u - mn / 2.0L) - 0.5L;
  if (variance <= 0.0L || deviation <= 0.0L) {
    result.p_value = 1.0;
    return result;
  }
  const double z = static_cast<double>(deviation / std::sqrt(variance));
  result.p_value = std::clamp(std::erfc(z / std::sqrt(2.0)), 0.0, 1.0);
  return result;
}

TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  std::vector<std::pair<double, int>> pooled;
  pooled.reserve(a.size() + b.size());
  for (double v : a) pooled.emplace_back(v, 0);
  for (double v : b) pooled.emplace_back(v, 1);
  std::sort(pooled.begin(), pooled.end());
  std::vector<TiedGroup> groups;
  for (const auto& [v, which] : pooled) {
    if (groups.empty() || groups.back().value != v) groups.push_back({v, 0, 0});
    (which == 0 ? groups.back().count_a : groups.back().count_b) += 1;
  }
  return mann_whitney_u_grouped(groups);
}

double regularized_gamma_q(double a, double x) {
  if (a <= 0.0) throw Error(ErrorCode::InvalidArgument, "gamma shape must be positive");
  if (x <= 0.0) return 1.0;
  const double log_prefix = -x + a * std::log(x) - std::lgamma(a);
  constexpr double kEps = 1e-16;
  constexpr int kMaxIter = 100000;
  if (x < a + 1.0) {
    // Power series for P(a, x).
    double ap = a;
    double del = 1.0 / a;
    double sum = del;
    for (int i = 0; i < kMaxIter; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * kEps) break;
    }
    return std::clamp(1.0 - sum * std::exp(log_prefix), 0.0, 1.0);
  }
  // Continued fraction for Q(a, x), modified Lentz.
  constexpr double kTiny = std::numeric_limits<double>::min() / kEps;
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return std::clamp(std::exp(log_prefix) * h, 0.0, 1.0);
}

double chi_square_sf(double x, double df) {
  if (df <= 0.0) throw Error(ErrorCode::InvalidArgument, "df must be positive");
  return regularized_gamma_q(df / 2.0, x / 2.0);
}

TestResult chi_square(const std::vector<std::vector<double>>& table) {
  const std::size_t rows = table.size();
  if (rows < 2) throw Error(ErrorCode::InvalidArgument, "chi-square needs at least 2 rows");
  const std::size_t cols = table.front().size();
  if (cols < 2) throw Error(ErrorCode::InvalidArgument, "chi-square needs at least 2 columns");
  for (const auto& row : table) {
    if (row.size() != cols) throw Error(ErrorCode::InvalidArgument, "ragged contingency table");
    for (double v : row) {
      if (!(v >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative or NaN count");
    }
  }

  std::vector<double> col_sum(cols, 0.0);
  for (const auto& row : table) {
    for (std::size_t j = 0; j < cols; ++j) col_sum[j] += row[j];
  }
  // An empty column has zero expectation in every cell; merging it into a
  // neighbour adds nothing, so pooling reduces to dropping it.
  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < cols; ++j) {
    if (col_sum[j] > 0.0) kept.push_back(j);
  }
  if (kept.size() < 2) {
    throw Error(ErrorCode::DegenerateTable, "fewer than 2 non-empty columns after pooling");
  }
  std::vector<double> row_sum(rows, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j : kept) row_sum[i] += table[i][j];
    if (row_sum[i] <= 0.0) throw Error(ErrorCode::DegenerateTable, "empty row in contingency table");
    total += row_sum[i];
  }

  double statistic = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j : kept) {
      const double expected = row_sum[i] * col_sum[j] / total;
      const double diff = table[i][j] - expected;
      statistic += diff * diff / expected;
    }
  }
  TestResult result;
  result.method = TestMethod::ChiSquare;
  result.statistic = statistic;
  result.df = static_cast<int>((rows - 1) * (kept.size() - 1));
  result.p_value = chi_square_sf(statistic, *result.df);
  return result;
}

double quantile(std::span<const double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "quantile of empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw Error(ErrorCode::InvalidArgument, "q outside [0,1]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = static_cast<double>(sorted.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

KllSketch::KllSketch(std::uint32_t k, std::uint64_t seed) : k_(k), rng_(seed) {
  if (k_ < 8) throw Error(ErrorCode::InvalidArgument, "kll k must be at least 8");
}

std::size_t KllSketch::capacity(std::size_t level) const {
  const std::size_t depth = levels_.size() - 1 - level;
  const double cap = std::ceil(static_cast<double>(k_) * std::pow(2.0 / 3.0, static_cast<double>(depth)));
  return std::max<std::size_t>(2, static_cast<std::size_t>(cap));
}

std::size_t KllSketch::retained() const {
  std::size_t total = 0;
  for (const auto& l : levels_) total += l.size();
  return total;
}

void KllSketch::update(double value) {
  if (levels_.empty()) levels_.emplace_back();
  if (n_ == 0) {
    min_ = max_ = value;
  } else {
    min_ = std::min(min_, value);
    max_ = std::max(max_, value);
  }
  ++n_;
  levels_[0].push_back(value);
  compress();
}

void KllSketch::merge(const KllSketch& other) {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    min_ = other.min_;
    max_ = other.max_;
  } else {
    min_ = std::min(min_, other.min_);
    max_ = std::max(max_, other.max_);
  }
  n_ += other.n_;
  if (levels_.size() < other.levels_.size()) levels_.resize(other.levels_.size());
  for (std::size_t l = 0; l < other.levels_.size(); ++l) {
    levels_[l].insert(levels_[l].end(), other.levels_[l].begin(), other.levels_[l].end());
  }
  compress();
}

void KllSketch::compress() {
  while (true) {
    std::size_t total_cap = 0;
    for (std::size_t l = 0; l < levels_.size(); ++l) total_cap += capacity(l);
    if (retained() <= total_cap) return;
    for (std::size_t l = 0; l < levels_.size(); ++l) {
      if (levels_[l].size() < capacity(l)) continue;
      if (l + 1 == levels_.size()) levels_.emplace_back();
      auto& level = levels_[l];
      std::sort(level.begin(), level.end());
      // An odd element stays behind so the promoted half has exact weight.
      std::optional<double> leftover;
      if (level.size() % 2 == 1) {
        leftover = level.back();
        level.pop_back();
      }
      const std::size_t offset = static_cast<std::size_t>(rng_.below(2));
      auto& up = levels_[l + 1];
      for (std::size_t i = offset; i < level.size(); i += 2) up.push_back(level[i]);
      level.clear();
      if (leftover) level.push_back(*leftover);
      break;
    }
  }
}

double KllSketch::quantile(double q) const {
  if (n_ == 0) throw Error(ErrorCode::InvalidArgument, "quantile of empty sketch");
  if (q <= 0.0) return min_;
  if (q >= 1.0) return max_;
  std::vector<std::pair<double, std::uint64_t>> weighted;
  weighted.reserve(retained());
  std::uint64_t total_weight = 0;
  for (std::size_t l = 0; l < levels_.size(); ++l) {
    const std::uint64_t w = std::uint64_t{1} << l;
    for (double v : levels_[l]) {
      weighted.emplace_back(v, w);
      total_weight += w;
    }
  }
  std::sort(weighted.begin(), weighted.end());
  const double target = q * static_cast<double>(total_weight);
  std::uint64_t cumulative = 0;
  for (const auto& [v, w] : weighted) {
    cumulative += w;
    if (static_cast<double>(cumulative) >= target) return v;
  }
  return max_;
}

double KllSketch::rank(double value) const {
  if (n_ == 0) return 0.0;
  std::uint64_t below = 0;
  std::uint64_t total_weight = 0;
  for (std::size_t l = 0; l < levels_.size(); ++l) {
    const std::uint64_t w = std::uint64_t{1} << l;
    for (double v : levels_[l]) {
      total_weight += w;
      if (v < value) below += w;
    }
  }
  return static_cast<double>(below) / static_cast<double>(total_weight);
}

}  // namespace screentime::stats
