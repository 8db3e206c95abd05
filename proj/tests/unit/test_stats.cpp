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

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "screentime/error.hpp"
#include "screentime/random.hpp"
#include "screentime/stats.hpp"

namespace screentime::stats {
namespace {

std::vector<double> random_ints(Rng& rng, std::size_t n, std::uint64_t range) {
  std::vector<double> v(n);
  for (auto& x : v) x = static_cast<double>(rng.below(range));
  return v;
}

TEST(AverageRanks, Examples) {
  EXPECT_EQ(average_ranks(std::vector<double>{10, 20, 30}), (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(average_ranks(std::vector<double>{10, 10, 30}), (std::vector<double>{1.5, 1.5, 3}));
  EXPECT_EQ(average_ranks(std::vector<double>{5}), (std::vector<double>{1}));
  EXPECT_EQ(average_ranks(std::vector<double>{3, 1, 2, 1}), (std::vector<double>{4, 1.5, 3, 1.5}));
}

TEST(AverageRanks, MatchesCountingOracle) {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    auto v = random_ints(rng, 1 + rng.below(12), 6);
    EXPECT_EQ(average_ranks(v), oracle::ranks(v));
  }
}

TEST(Spearman, Examples) {
  EXPECT_DOUBLE_EQ(spearman(std::vector<double>{1, 2, 3}, std::vector<double>{10, 20, 30}), 1.0);
  EXPECT_DOUBLE_EQ(spearman(std::vector<double>{1, 2, 3}, std::vector<double>{30, 20, 10}), -1.0);
  const std::vector<double> x{1, 2, 2, 4}, y{1, 3, 2, 4};
  // Ranks (1, 2.5, 2.5, 4) and (1, 3, 2, 4): covariance 4.5 over sqrt(4.5 * 5).
  EXPECT_NEAR(spearman(x, y), 4.5 / std::sqrt(4.5 * 5.0), 1e-15);
  EXPECT_NEAR(spearman(x, y), *oracle::spearman(x, y), 1e-15);
}

TEST(Spearman, Errors) {
  auto code = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  EXPECT_THROW(spearman(std::vector<double>{1, 2}, std::vector<double>{1}), Error);
  EXPECT_EQ(code([] { spearman(std::vector<double>{1, 2}, std::vector<double>{1}); }), ErrorCode::LengthMismatch);
  EXPECT_EQ(code([] { spearman(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}); }),
            ErrorCode::ZeroVariance);
  EXPECT_THROW(spearman(std::vector<double>{1}, std::vector<double>{1}), Error);
}

TEST(Spearman, MonotoneTransformsGiveUnitCorrelation) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(2 + rng.below(20));
    for (auto& v : x) v = rng.uniform() * 10 - 5;
    std::vector<double> up(x.size()), down(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      up[i] = std::exp(x[i]) + 3 * x[i];
      down[i] = -x[i] * x[i] * x[i];
    }
    EXPECT_NEAR(spearman(x, up), 1.0, 1e-12);
    EXPECT_NEAR(spearman(x, down), -1.0, 1e-12);
  }
}

TEST(Spearman, MatchesBruteForceOnRandomFixtures) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(7);
    auto x = random_ints(rng, n, 5), y = random_ints(rng, n, 5);
    auto expected = oracle::spearman(x, y);
    if (!expected) {
      EXPECT_THROW(spearman(x, y), Error);
      continue;
    }
    EXPECT_NEAR(spearman(x, y), *expected, 1e-12);
  }
}

TEST(MannWhitney, Examples) {
  auto r = mann_whitney_u(std::vector<double>{1, 2}, std::vector<double>{3, 4});
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_EQ(r.method, TestMethod::Exact);
  EXPECT_FALSE(r.df.has_value());
  // All 6 relabellings of 4 distinct values; U = 0 and U = 4 are the extremes.
  EXPECT_NEAR(r.p_value, 2.0 / 6.0, 1e-12);

  const std::vector<double> same{1, 2, 2, 5};
  auto s = mann_whitney_u(same, same);
  EXPECT_EQ(s.statistic, 8.0);
  EXPECT_NEAR(s.p_value, 1.0, 1e-12);
}

TEST(MannWhitney, ExactMatchesEnumerationForFiveByFive) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(5), b(5);
    for (auto& v : a) v = rng.uniform();
    for (auto& v : b) v = rng.uniform() + 0.2;
    auto r = mann_whitney_u(a, b);
    EXPECT_EQ(r.statistic, oracle::mann_whitney_u(a, b));
    EXPECT_NEAR(r.p_value, oracle::mann_whitney_exact_p(a, b), 1e-12);
  }
}

TEST(MannWhitney, ExactMatchesEnumerationWithTies) {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    auto a = random_ints(rng, 1 + rng.below(8), 4);
    auto b = random_ints(rng, 1 + rng.below(8), 4);
    auto r = mann_whitney_u(a, b);
    ASSERT_EQ(r.method, TestMethod::Exact);
    EXPECT_EQ(r.statistic, oracle::mann_whitney_u(a, b));
    EXPECT_NEAR(r.p_value, oracle::mann_whitney_exact_p(a, b), 1e-9);
  }
}

TEST(MannWhitney, UStatisticsAreComplementary) {
  Rng rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    auto a = random_ints(rng, 1 + rng.below(30), 10);
    auto b = random_ints(rng, 1 + rng.below(30), 10);
    const double ab = mann_whitney_u(a, b).statistic, ba = mann_whitney_u(b, a).statistic;
    EXPECT_DOUBLE_EQ(ab + ba, static_cast<double>(a.size() * b.size()));
    EXPECT_NEAR(mann_whitney_u(a, b).p_value, mann_whitney_u(b, a).p_value, 1e-12);
  }
}

TEST(MannWhitney, NormalBranchMatchesTextbookFormula) {
  Rng rng(12);
  std::vector<double> a(30), b(25);
  for (auto& v : a) v = static_cast<double>(rng.below(15));
  for (auto& v : b) v = static_cast<double>(rng.below(15)) + 2;
  auto r = mann_whitney_u(a, b);
  EXPECT_EQ(r.method, TestMethod::NormalApprox);
  EXPECT_NEAR(r.p_value, oracle::mann_whitney_normal_p(a, b), 1e-12);
}

TEST(MannWhitney, ExactAndApproximateAgreeAtCrossover) {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(20), b(20);
    for (auto& v : a) v = rng.uniform();
    for (auto& v : b) v = rng.uniform() + 0.1 * static_cast<double>(trial % 4);
    auto exact = mann_whitney_u(a, b);
    ASSERT_EQ(exact.method, TestMethod::Exact);
    EXPECT_NEAR(exact.p_value, oracle::mann_whitney_normal_p(a, b), 0.02) << "trial " << trial;
  }
}

TEST(MannWhitney, GroupedFormMatchesRawSamples) {
  std::vector<TiedGroup> groups = {{0.1, 2, 1}, {0.2, 0, 3}, {0.5, 4, 0}, {0.7, 1, 1}};
  std::vector<double> a, b;
  for (const auto& g : groups) {
    a.insert(a.end(), g.count_a, g.value);
    b.insert(b.end(), g.count_b, g.value);
  }
  auto grouped = mann_whitney_u_grouped(groups);
  auto raw = mann_whitney_u(a, b);
  EXPECT_EQ(grouped.statistic, raw.statistic);
  EXPECT_EQ(grouped.p_value, raw.p_value);
  std::vector<TiedGroup> unordered = {{0.5, 1, 1}, {0.1, 1, 1}};
  EXPECT_THROW(mann_whitney_u_grouped(unordered), Error);
}

TEST(ChiSquare, Examples) {
  auto flat = chi_square({{10, 10}, {10, 10}});
  EXPECT_EQ(flat.statistic, 0.0);
  EXPECT_EQ(flat.df, 1);
  EXPECT_NEAR(flat.p_value, 1.0, 1e-12);
  EXPECT_EQ(flat.method, TestMethod::ChiSquare);

  // Expected cells 40, 40, 30, 30 -> 100/40 * 2 + 100/30 * 2 = 35/3.
  auto r = chi_square({{50, 30}, {20, 40}});
  EXPECT_NEAR(r.statistic, 35.0 / 3.0, 1e-12);
  EXPECT_EQ(r.df, 1);
  EXPECT_NEAR(r.p_value, 6.363e-4, 1e-7);
  boost::math::chi_squared one(1);
  EXPECT_NEAR(r.p_value, boost::math::cdf(boost::math::complement(one, 35.0 / 3.0)), 1e-12);
}

TEST(ChiSquare, ZeroColumnIsPooled) {
  std::vector<std::vector<double>> t = {{3, 0, 5, 1, 2, 7, 1, 4, 2}, {6, 0, 1, 2, 2, 3, 5, 1, 1}};
  auto r = chi_square(t);
  EXPECT_EQ(r.df, 7);
  auto o = oracle::chi_square(t);
  EXPECT_NEAR(r.statistic, o.statistic, 1e-12);
  EXPECT_NEAR(r.p_value, o.p, 1e-10);
}

TEST(ChiSquare, DegenerateTables) {
  EXPECT_THROW(chi_square({{0, 0}, {1, 2}}), Error);
  EXPECT_THROW(chi_square({{4, 0}, {1, 0}}), Error);
  EXPECT_THROW(chi_square({{1, 2}}), Error);
  EXPECT_THROW(chi_square({{1, 2}, {1}}), Error);
  try {
    chi_square({{0, 0, 0}, {1, 2, 3}});
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateTable);
  }
}

TEST(ChiSquare, MatchesOracleOnRandomTables) {
  Rng rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t rows = 2 + rng.below(3), cols = 2 + rng.below(8);
    std::vector<std::vector<double>> t(rows, std::vector<double>(cols));
    for (auto& row : t) {
      for (auto& v : row) v = static_cast<double>(rng.below(rng.bernoulli(0.3) ? 1 : 9));
    }
    auto o = oracle::chi_square(t);
    if (o.degenerate) {
      EXPECT_THROW(chi_square(t), Error);
      continue;
    }
    auto r = chi_square(t);
    EXPECT_NEAR(r.statistic, o.statistic, 1e-9 * std::max(1.0, o.statistic));
    EXPECT_EQ(*r.df, o.df);
    EXPECT_NEAR(r.p_value, o.p, 1e-10);
  }
}

TEST(ChiSquare, TailMatchesBoostAcrossRange) {
  for (int df : {1, 2, 3, 7, 8, 20, 60}) {
    boost::math::chi_squared dist(df);
    for (double x : {0.01, 0.5, 1.0, 3.0, 7.5, 15.0, 40.0, 90.0, 200.0}) {
      const double expected = boost::math::cdf(boost::math::complement(dist, x));
      EXPECT_NEAR(chi_square_sf(x, df), expected, 1e-10) << "df " << df << " x " << x;
    }
  }
}

TEST(ChiSquare, StatisticScalesWithTable) {
  std::vector<std::vector<double>> t = {{5, 9, 2}, {7, 1, 6}};
  auto scaled = t;
  for (auto& row : scaled) {
    for (auto& v : row) v *= 3;
  }
  EXPECT_NEAR(chi_square(scaled).statistic, 3 * chi_square(t).statistic, 1e-9);
}

TEST(Quantile, Examples) {
  const std::vector<double> v{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(quantile(v, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile(v, 1.0), 4.0);
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> w(1 + rng.below(40));
    for (auto& x : w) x = rng.uniform();
    const double q = rng.uniform();
    EXPECT_NEAR(quantile(w, q), oracle::quantile7(w, q), 1e-15);
  }
}

TEST(KllSketch, UniformTwentiethPercentile) {
  Rng rng(99);
  KllSketch sketch;
  std::vector<double> all;
  for (int i = 0; i < 10000; ++i) {
    const double v = rng.uniform();
    sketch.update(v);
    all.push_back(v);
  }
  EXPECT_NEAR(sketch.quantile(0.2), 0.2, 0.01);
  EXPECT_NEAR(sketch.quantile(0.2), oracle::quantile7(all, 0.2), 0.01);
  EXPECT_EQ(sketch.quantile(0.0), *std::min_element(all.begin(), all.end()));
  EXPECT_EQ(sketch.quantile(1.0), *std::max_element(all.begin(), all.end()));
}

TEST(KllSketch, RankErrorWithinHalfPercent) {
  Rng rng(7);
  KllSketch sketch;
  std::vector<double> all;
  for (int i = 0; i < 300000; ++i) {
    const double v = std::pow(rng.uniform(), 3.0);
    sketch.update(v);
    all.push_back(v);
  }
  std::sort(all.begin(), all.end());
  EXPECT_LT(sketch.retained(), 20000u);
  for (double q = 0.01; q < 1.0; q += 0.01) {
    const double est = sketch.quantile(q);
    const double true_rank =
        static_cast<double>(std::lower_bound(all.begin(), all.end(), est) - all.begin()) / all.size();
    EXPECT_NEAR(true_rank, q, 0.005) << "q " << q;
  }
}

TEST(KllSketch, MergeEqualsSingleStreamWithinError) {
  Rng rng(17);
  KllSketch a(KllSketch::kDefaultK, 1), b(KllSketch::kDefaultK, 2), whole;
  std::vector<double> all;
  for (int i = 0; i < 100000; ++i) {
    const double v = rng.uniform();
    (i % 3 == 0 ? a : b).update(v);
    whole.update(v);
    all.push_back(v);
  }
  a.merge(b);
  EXPECT_EQ(a.count(), 100000u);
  for (double q : {0.1, 0.2, 0.5, 0.9}) {
    EXPECT_NEAR(a.quantile(q), oracle::quantile7(all, q), 0.005);
    EXPECT_NEAR(a.rank(a.quantile(q)), q, 0.005);
  }
}

TEST(KllSketch, DeterministicForSameInput) {
  KllSketch a, b;
  Rng r1(5), r2(5);
  for (int i = 0; i < 50000; ++i) {
    a.update(r1.uniform());
    b.update(r2.uniform());
  }
  for (double q = 0; q <= 1.0; q += 0.05) EXPECT_EQ(a.quantile(q), b.quantile(q));
}

}  // namespace
}  // namespace screentime::stats
