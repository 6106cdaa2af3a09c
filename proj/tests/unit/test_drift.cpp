#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "permdrift/drift.hpp"
#include "permdrift/error.hpp"

using namespace permdrift;

namespace {

std::vector<double> draw(std::mt19937_64& gen, std::size_t n, int levels = 0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = levels > 0 ? std::floor(u(gen) * levels) / levels : u(gen);
  return v;
}

PermutationOptions exact_everywhere() {
  PermutationOptions o;
  o.exact_limit = 1e18;
  return o;
}

EvalMatrix matrix_from(const std::map<int, std::vector<double>>& rows) {
  EvalMatrix m;
  for (const auto& [train, values] : rows) {
    int test = 3000;
    for (double v : values) {
      EvalCell c;
      c.train_year = train;
      c.test_year = test++;
      c.scores.accuracy = v;
      c.n_test = 1;
      m.cells.push_back(c);
    }
  }
  return m;
}

}  // namespace

TEST(Classify, ThresholdPartitionAndBoundaries) {
  EXPECT_EQ(classify_cell(0.49), CellClass::Yellow);
  EXPECT_EQ(classify_cell(0.70), CellClass::Red);
  EXPECT_EQ(classify_cell(0.95), CellClass::Green);
  EXPECT_EQ(classify_cell(0.50), CellClass::Red);
  EXPECT_EQ(classify_cell(0.94), CellClass::Red);
  EXPECT_EQ(classify_cell(0.0), CellClass::Yellow);
  EXPECT_EQ(classify_cell(1.0), CellClass::Green);
}

TEST(Classify, OutOfRangeAndBadThresholds) {
  for (double v : {-0.01, 1.01, std::nan("")}) {
    try {
      classify_cell(v);
      FAIL() << v;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::OutOfRange);
    }
  }
  EXPECT_THROW(classify_cell(0.5, {0.9, 0.5}), Error);
}

TEST(KsStatistic, Examples) {
  const std::vector<double> a = {0.1, 0.2, 0.3, 0.4}, b = {0.3, 0.4, 0.5, 0.6};
  EXPECT_DOUBLE_EQ(ks_statistic(a, b), 0.5);
  EXPECT_EQ(ks_statistic(a, a), 0.0);
  EXPECT_EQ(ks_statistic(std::vector<double>{0, 0, 0}, std::vector<double>{1, 1, 1}), 1.0);
  EXPECT_THROW(ks_statistic(std::vector<double>{}, a), Error);
}

TEST(KsStatistic, MatchesBruteForceWithTies) {
  std::mt19937_64 gen(3);
  for (int t = 0; t < 300; ++t) {
    const auto a = draw(gen, 1 + gen() % 15, t % 2 ? 5 : 0);
    const auto b = draw(gen, 1 + gen() % 15, t % 2 ? 5 : 0);
    EXPECT_DOUBLE_EQ(ks_statistic(a, b), oracle::brute_ks(a, b));
  }
}

TEST(KsStatistic, SymmetricAndInvariantUnderMonotoneMaps) {
  std::mt19937_64 gen(4);
  for (int t = 0; t < 200; ++t) {
    auto a = draw(gen, 2 + gen() % 10, t % 3 ? 0 : 4);
    auto b = draw(gen, 2 + gen() % 10, t % 3 ? 0 : 4);
    const double d = ks_statistic(a, b);
    EXPECT_EQ(d, ks_statistic(b, a));
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 1.0);
    const bool disjoint = *std::max_element(a.begin(), a.end()) < *std::min_element(b.begin(), b.end()) ||
                          *std::max_element(b.begin(), b.end()) < *std::min_element(a.begin(), a.end());
    EXPECT_EQ(d == 1.0, disjoint);
    for (auto* v : {&a, &b}) {
      for (auto& x : *v) x = std::exp(3.0 * x) - 7.0;
    }
    EXPECT_EQ(ks_statistic(a, b), d);
  }
}

TEST(KsPValue, ZeroStatisticIsOne) {
  EXPECT_EQ(ks_pvalue(0.0, 5, 7, PValueMethod::Asymptotic), 1.0);
  EXPECT_EQ(ks_pvalue(0.0, 5, 7, PValueMethod::Permutation), 1.0);
  const std::vector<double> a = {1, 2, 3};
  EXPECT_EQ(ks_test(a, a).p_value, 1.0);
  EXPECT_EQ(ks_test(a, a, PValueMethod::Asymptotic).p_value, 1.0);
}

TEST(KsPValue, FullySeparatedTwelvesExact) {
  const double p = ks_pvalue(1.0, 12, 12, PValueMethod::Permutation, exact_everywhere());
  EXPECT_NEAR(p, 2.0 / oracle::binomial(24, 12), 1e-18);
  EXPECT_NEAR(p, 7.4e-7, 0.05e-7);
}

TEST(KsPValue, TwelvesDefaultToMonteCarlo) {
  std::vector<double> a(12), b(12);
  for (int i = 0; i < 12; ++i) {
    a[i] = i;
    b[i] = i + 5.5;  // D = 6/12
  }
  const auto r = ks_test(a, b);
  EXPECT_FALSE(r.exact);
  const auto exact = ks_test(a, b, PValueMethod::Permutation, exact_everywhere());
  EXPECT_TRUE(exact.exact);
  EXPECT_NEAR(r.p_value, exact.p_value, 0.01);
  EXPECT_NEAR(exact.p_value, 0.099546771709916, 1e-12);
}

TEST(KsPValue, ExactMatchesEnumerationIncludingTies) {
  std::mt19937_64 gen(6);
  for (int t = 0; t < 60; ++t) {
    const std::size_t n = 1 + gen() % 7, m = 1 + gen() % (14 - n);
    const auto a = draw(gen, n, t % 2 ? 4 : 0);
    const auto b = draw(gen, m, t % 2 ? 4 : 0);
    const auto r = ks_test(a, b);
    ASSERT_TRUE(r.exact);
    EXPECT_NEAR(r.p_value, oracle::enumerate_ks_pvalue(a, b), 1e-12) << n << "," << m;
  }
}

TEST(KsPValue, AsymptoticCloseToExactOnShippedVectors) {
  std::ifstream in(fixture::test_data_path("ks_uniform_12.csv"));
  ASSERT_TRUE(in);
  std::string line;
  std::getline(in, line);
  std::vector<double> a, b;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string x, y;
    std::getline(row, x, ',');
    std::getline(row, y, ',');
    a.push_back(std::stod(x));
    b.push_back(std::stod(y));
  }
  ASSERT_EQ(a.size(), 12U);
  const auto exact = ks_test(a, b, PValueMethod::Permutation, exact_everywhere());
  const auto asym = ks_test(a, b, PValueMethod::Asymptotic);
  EXPECT_NEAR(exact.d, 8.0 / 12.0, 1e-12);
  EXPECT_NEAR(asym.p_value, exact.p_value, 0.02);
}

TEST(KsPValue, AsymptoticGapAtModerateStatisticsIsDocumented) {
  // For n = m = 12 the corrected asymptotic formula understates the exact
  // permutation p by up to about 0.1 when D is 3/12 to 6/12. This pins the
  // size of that gap so a change to either method is noticed.
  double worst = 0.0;
  for (int k = 1; k <= 12; ++k) {
    const double d = k / 12.0;
    const double gap = ks_pvalue(d, 12, 12, PValueMethod::Permutation, exact_everywhere()) -
                       ks_pvalue(d, 12, 12, PValueMethod::Asymptotic);
    worst = std::max(worst, std::abs(gap));
  }
  EXPECT_NEAR(worst, 0.1028, 0.002);
}

TEST(KsPValue, AsymptoticSeriesValues) {
  // lambda >= 1.18 uses the alternating series, smaller lambda the theta form;
  // both are the same Kolmogorov survival function.
  auto q = [](double lambda) {
    double s = 0;
    for (int k = 1; k < 200; ++k) s += (k % 2 ? 2.0 : -2.0) * std::exp(-2.0 * k * k * lambda * lambda);
    return s;
  };
  for (std::size_t n : {10, 40, 400}) {
    const double ne = n / 2.0, root = std::sqrt(ne);
    for (double d : {0.15, 0.2, 0.3, 0.5}) {
      const double lambda = (root + 0.12 + 0.11 / root) * d;
      if (lambda < 0.6) continue;  // series too slow to serve as reference
      EXPECT_NEAR(ks_pvalue(d, n, n, PValueMethod::Asymptotic), std::clamp(q(lambda), 0.0, 1.0), 1e-9);
    }
  }
  EXPECT_NEAR(ks_pvalue(0.01, 50, 50, PValueMethod::Asymptotic), 1.0, 1e-12);
}

TEST(KsPValue, MonteCarloWithinTolerance) {
  std::mt19937_64 gen(10);
  for (int t = 0; t < 10; ++t) {
    const auto a = draw(gen, 7), b = draw(gen, 7);
    PermutationOptions mc;
    mc.exact_limit = 0;
    mc.seed = t;
    const auto r = ks_test(a, b, PValueMethod::Permutation, mc);
    EXPECT_FALSE(r.exact);
    EXPECT_NEAR(r.p_value, oracle::enumerate_ks_pvalue(a, b), 0.01);
  }
}

TEST(KsPValue, BadSizes) {
  EXPECT_THROW(ks_pvalue(0.5, 0, 3, PValueMethod::Asymptotic), Error);
  EXPECT_THROW(ks_pvalue(1.5, 3, 3, PValueMethod::Asymptotic), Error);
}

TEST(KsCritical, TableConstants) {
  EXPECT_NEAR(ks_critical(0.05, 1, 1) / std::sqrt(2.0), 1.358, 5e-4);
  EXPECT_NEAR(ks_critical(0.01, 1, 1) / std::sqrt(2.0), 1.628, 5e-4);
  EXPECT_NEAR(ks_critical(0.05, 12, 12), 1.358 * std::sqrt(24.0 / 144.0), 1e-3);
}

TEST(KsMatrixTest, ConstantCellsAreNeverSignificant) {
  const auto m = matrix_from({{2010, {0.7, 0.7, 0.7}}, {2011, {0.7, 0.7, 0.7}}, {2012, {0.7, 0.7, 0.7}}});
  const auto ks = ks_matrix(m, Metric::Accuracy);
  EXPECT_EQ(ks.results.size(), 6U);
  EXPECT_EQ(ks.significant_count, 0U);
  for (const auto& [_, r] : ks.results) EXPECT_EQ(r.p_value, 1.0);
}

TEST(KsMatrixTest, ThirteenYearsGive156OrderedPairsAndSymmetry) {
  std::mt19937_64 gen(12);
  std::map<int, std::vector<double>> rows;
  for (int y = 2008; y <= 2020; ++y) rows[y] = draw(gen, 12);
  for (int y = 2014; y <= 2020; ++y)
    for (auto& v : rows[y]) v = v * 0.3;  // shift later rows down
  const auto ks = ks_matrix(matrix_from(rows), Metric::Accuracy, 0.05, PValueMethod::Permutation, {}, 3);
  EXPECT_EQ(ks.results.size(), 156U);
  EXPECT_EQ(ks.significant_count % 2, 0U);
  EXPECT_GT(ks.significant_count, 0U);
  for (const auto& [key, r] : ks.results) {
    const auto* mirror = ks.find(key.second, key.first);
    ASSERT_NE(mirror, nullptr);
    EXPECT_EQ(mirror->d, r.d);
    EXPECT_EQ(mirror->p_value, r.p_value);
    EXPECT_NE(key.first, key.second);
  }
  const auto serial = ks_matrix(matrix_from(rows), Metric::Accuracy);
  for (const auto& [key, r] : ks.results) EXPECT_EQ(serial.find(key.first, key.second)->p_value, r.p_value);
}

TEST(KsMatrixTest, TooFewYears) {
  try {
    ks_matrix(matrix_from({{2010, {0.5, 0.6}}}), Metric::Accuracy);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooFewYears);
  }
}

TEST(KsMatrixTest, CsvRoundTrip) {
  const auto ks = ks_matrix(matrix_from({{2010, {0.1, 0.2, 0.3}}, {2011, {0.7, 0.8, 0.9}}, {2012, {0.2, 0.5, 0.6}}}),
                            Metric::Accuracy);
  std::ostringstream out;
  write_ks_csv(out, ks);
  std::istringstream in(out.str());
  const auto back = read_ks_csv(in, 0.05);
  EXPECT_EQ(back.years, ks.years);
  EXPECT_EQ(back.significant_count, ks.significant_count);
  for (const auto& [key, r] : ks.results) EXPECT_EQ(back.find(key.first, key.second)->p_value, r.p_value);
}
