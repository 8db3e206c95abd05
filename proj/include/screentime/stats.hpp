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

// Nonparametric statistics kernel: rank correlation, Mann-Whitney U,
// chi-square independence and quantiles. Everything here is a pure function
// except KllSketch, which is a plain value type.

#ifndef SCREENTIME_STATS_HPP_
#define SCREENTIME_STATS_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "screentime/random.hpp"

namespace screentime::stats {

enum class TestMethod { Exact, NormalApprox, ChiSquare };

std::string_view to_string(TestMethod method);

struct TestResult {
  double statistic = 0.0;
  std::optional<int> df;  // set only for chi-square
  double p_value = 1.0;
  TestMethod method = TestMethod::Exact;
};

/// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of the average ranks of `x` and `y`.
double spearman(std::span<const double> x, std::span<const double> y);

/// Samples whose enumeration is cheap enough for an exact p-value.
inline constexpr std::uint64_t kMannWhitneyExactLimit = 400;

/// Mann-Whitney U for sample `a` against `b`: the number of pairs with
/// a > b, ties counting one half. Two-sided p-value by exact enumeration of
/// the permutation distribution when |a|*|b| <= 400, otherwise the normal
/// approximation with tie and continuity corrections.
TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

/// One distinct value and how many observations of each sample carry it.
struct TiedGroup {
  double value = 0.0;
  std::uint64_t count_a = 0;
  std::uint64_t count_b = 0;
};

/// Same test over pre-grouped data; `groups` must be sorted by value with no
/// duplicate values. Lets callers stream samples into a sparse histogram
/// instead of holding every observation.
TestResult mann_whitney_u_grouped(std::span<const TiedGroup> groups);

/// Upper tail of the chi-square distribution with `df` degrees of freedom.
double chi_square_sf(double x, double df);

/// Regularized upper incomplete gamma function Q(a, x).
double regularized_gamma_q(double a, double x);

/// Pearson chi-square test of independence on an r x c table of counts.
/// Columns whose expected counts are all zero are pooled into their nearest
/// non-empty neighbour (which leaves the statistic unchanged) and df shrinks
/// with them.
TestResult chi_square(const std::vector<std::vector<double>>& table);

/// Sample quantile with linear interpolation between closest ranks
/// (Hyndman-Fan type 7).
double quantile(std::span<const double> values, double q);

/// Mergeable streaming quantile sketch (KLL compactor hierarchy). Keeps
/// exact min and max. The default k keeps normalized rank error well below
/// 0.5% for the stream sizes handled here.
class KllSketch {
 public:
  static constexpr std::uint32_t kDefaultK = 800;

  explicit KllSketch(std::uint32_t k = kDefaultK, std::uint64_t seed = 0x5eed);

  void update(double value);
  void merge(const KllSketch& other);

  std::uint64_t count() const { return n_; }
  bool empty() const { return n_ == 0; }
  double min() const { return min_; }
  double max() const { return max_; }

  /// Approximate value at normalized rank q in [0, 1].
  double quantile(double q) const;

  /// Approximate fraction of the stream strictly below `value`.
  double rank(double value) const;

  std::size_t retained() const;

 private:
  std::size_t capacity(std::size_t level) const;
  void compress();

  std::uint32_t k_;
  std::uint64_t n_ = 0;
  double min_ = 0.0;
  double max_ = 0.0;
  std::vector<std::vector<double>> levels_;
  Rng rng_;
};

}  // namespace screentime::stats

#endif  // SCREENTIME_STATS_HPP_
