#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <regex>
#include <sstream>

#include "permdrift/error.hpp"
#include "permdrift/report.hpp"

using namespace permdrift;

namespace {

EvalMatrix grid(const std::vector<int>& years, const std::vector<double>& values) {
  EvalMatrix m;
  m.years = years;
  std::size_t k = 0;
  for (int tr : years)
    for (int te : years) {
      if (k >= values.size()) break;
      EvalCell c;
      c.train_year = tr;
      c.test_year = te;
      c.scores.accuracy = values[k++];
      c.n_test = 1;
      m.cells.push_back(c);
    }
  return m;
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST(Counts, WorkedExample) {
  const auto c = summarize_counts(grid({1, 2}, {0.3, 0.6, 0.95, 0.94}));
  EXPECT_EQ(c, (CellCounts{2, 1, 1}));
  EXPECT_EQ(c.total(), 4U);
}

TEST(Counts, PerfectMatrixIsAllGreen) {
  const auto c = summarize_counts(grid({1, 2, 3}, std::vector<double>(9, 1.0)));
  EXPECT_EQ(c, (CellCounts{0, 0, 9}));
  EXPECT_THROW(summarize_counts(EvalMatrix{}), Error);
}

TEST(Counts, ConservationProperty) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 100; ++t) {
    const int n = 1 + static_cast<int>(gen() % 6);
    std::vector<int> years(n);
    std::iota(years.begin(), years.end(), 2000);
    std::vector<double> v(static_cast<std::size_t>(n * n));
    for (auto& x : v) x = t % 4 == 0 ? std::round(u(gen) * 100) / 100 : u(gen);
    const auto c = summarize_counts(grid(years, v));
    EXPECT_EQ(c.total(), v.size());
    std::size_t green = 0;
    for (double x : v) green += x > 0.94;
    EXPECT_EQ(c.green, green);
  }
}

TEST(Averages, PerTrainYear) {
  const auto a = train_year_averages(grid({1, 2}, {0.6, 0.8, 0.2, 0.4}));
  EXPECT_DOUBLE_EQ(a.at(1), 0.7);
  EXPECT_DOUBLE_EQ(a.at(2), 0.3);
  EXPECT_THROW(train_year_averages(EvalMatrix{}), Error);
}

TEST(Heatmap, SvgHasOneRectPerCell) {
  HeatmapSpec spec;
  const auto hm = build_heatmap(grid({1, 2}, {0.3, 0.6, 0.95, 0.94}), spec);
  const auto svg = render_svg(hm, spec);
  EXPECT_EQ(count(svg, "class=\"cell\""), 4U);
  EXPECT_EQ(count(svg, "data-class=\"yellow\""), 1U);
  EXPECT_EQ(count(svg, "data-class=\"red\""), 2U);
  EXPECT_EQ(count(svg, "data-class=\"green\""), 1U);
  EXPECT_NE(svg.find("0.300"), std::string::npos);
  EXPECT_EQ(svg, render_svg(hm, spec));
}

TEST(Heatmap, MissingCellsAreNeutral) {
  auto m = grid({1, 2}, {0.3, 0.6, 0.95});
  const auto hm = build_heatmap(m, HeatmapSpec{});
  EXPECT_FALSE(hm.value(1, 1).has_value());
  EXPECT_EQ(hm.cell_class(1, 1), HeatClass::Neutral);
  EXPECT_EQ(fill_color(HeatClass::Neutral), "#EEEEEE");
}

TEST(Heatmap, KsCellsRedIffSignificant) {
  KSMatrix ks;
  ks.years = {1, 2, 3};
  const double ps[] = {0.01, 0.05, 0.2};
  int k = 0;
  for (auto [a, b] : std::vector<std::pair<int, int>>{{1, 2}, {1, 3}, {2, 3}}) {
    KSResult r;
    r.d = 0.5;
    r.p_value = ps[k++];
    ks.results[{a, b}] = r;
    ks.results[{b, a}] = r;
  }
  HeatmapSpec spec;
  spec.coloring = Coloring::SignificanceBinary;
  const auto hm = build_heatmap(ks, spec);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c) {
      const auto* res = ks.find(hm.rows[r], hm.cols[c]);
      if (res == nullptr) {
        EXPECT_EQ(hm.cell_class(r, c), HeatClass::Neutral);
      } else {
        EXPECT_EQ(hm.cell_class(r, c) == HeatClass::Red, res->p_value <= 0.05);
      }
    }
  EXPECT_THROW(build_heatmap(ks, HeatmapSpec{}), Error);
  EXPECT_THROW(build_heatmap(grid({1}, {0.5}), spec), Error);
}

TEST(Heatmap, CsvRoundTripAgreesWithSvg) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> v(16);
  for (auto& x : v) x = u(gen);
  HeatmapSpec spec;
  const auto hm = build_heatmap(grid({1, 2, 3, 4}, v), spec);
  std::istringstream in(render_csv(hm));
  const auto back = read_heatmap_csv(in);
  EXPECT_EQ(back.rows, hm.rows);
  EXPECT_EQ(back.cols, hm.cols);
  EXPECT_EQ(back.classes, hm.classes);
  for (std::size_t i = 0; i < hm.values.size(); ++i) EXPECT_NEAR(*back.values[i], *hm.values[i], 1e-12);

  const auto svg = render_svg(hm, spec);
  std::regex rect(R"re(data-class="(\w+)")re");
  std::vector<std::string> svg_classes;
  for (std::sregex_iterator it(svg.begin(), svg.end(), rect), end; it != end; ++it) svg_classes.push_back((*it)[1]);
  ASSERT_EQ(svg_classes.size(), hm.classes.size());
  for (std::size_t i = 0; i < hm.classes.size(); ++i) EXPECT_EQ(svg_classes[i], to_string(hm.classes[i]));
}

TEST(Heatmap, UnwritablePathIsIoFailure) {
  try {
    emit_heatmap(grid({1}, {0.5}), HeatmapSpec{}, "/nonexistent-dir/x/heat.svg");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoFailure);
  }
}

TEST(Bars, OneBarPerYear) {
  const auto svg = render_bar_svg({{2010, 0.5}, {2011, 0.9}}, "avg");
  EXPECT_EQ(count(svg, "<rect class=\"bar\""), 2U);
}
