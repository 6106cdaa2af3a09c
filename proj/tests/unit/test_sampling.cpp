#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "permdrift/error.hpp"
#include "permdrift/sampling.hpp"

using namespace permdrift;

namespace {

// Samples carry a unique id; the first bit encodes nothing in particular.
Dataset labelled(std::size_t benign, std::size_t malware, int year = 2010) {
  const auto reg = fixture::toy_registry(2);
  std::vector<fixture::Row> rows;
  for (std::size_t i = 0; i < benign; ++i) rows.push_back({0, year, {0, std::uint8_t(i & 1U)}});
  for (std::size_t i = 0; i < malware; ++i) rows.push_back({1, year, {1, std::uint8_t(i & 1U)}});
  return fixture::toy_dataset(reg, rows);
}

std::multiset<std::string> ids(const Dataset& d) {
  std::multiset<std::string> out;
  for (const auto& s : d.samples()) out.insert(s.id);
  return out;
}

}  // namespace

TEST(Split, TenSamplesStratified) {
  const auto r = split(labelled(5, 5), {0.8, true, 42});
  EXPECT_EQ(r.train.size(), 8U);
  EXPECT_EQ(r.train.class_counts(), (ClassCounts{4, 4}));
  EXPECT_EQ(r.test.class_counts(), (ClassCounts{1, 1}));
}

TEST(Split, DeterministicForSeed) {
  const auto d = labelled(30, 17);
  const auto a = split(d, {0.8, true, 42});
  const auto b = split(d, {0.8, true, 42});
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  const auto c = split(d, {0.8, true, 43});
  EXPECT_NE(ids(a.train), ids(c.train));
}

TEST(Split, KronoDroidScaleArithmetic) {
  // floor per class: 36,755 -> 29,404 and 41,382 -> 33,105, total 62,509.
  const auto r = split(labelled(36755, 41382), {0.8, true, 42});
  EXPECT_EQ(r.train.size(), 62509U);
  EXPECT_EQ(r.test.size(), 78137U - 62509U);
}

TEST(Split, DisjointCoverAndProportionsProperty) {
  std::mt19937_64 gen(23);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t b = 1 + gen() % 40, m = 1 + gen() % 40;
    const double frac = 0.1 + 0.8 * static_cast<double>(gen() % 1000) / 1000.0;
    const auto d = labelled(b, m);
    SplitResult r;
    try {
      r = split(d, {frac, true, gen()});
    } catch (const Error& e) {
      // A class too small to give both halves a sample is the only legal failure.
      EXPECT_EQ(e.code(), ErrorCode::TooFewSamples);
      continue;
    }
    auto all = ids(r.train);
    for (const auto& id : ids(r.test)) {
      EXPECT_EQ(all.count(id), 0U);
      all.insert(id);
    }
    EXPECT_EQ(all, ids(d));
    const auto tc = r.train.class_counts();
    EXPECT_NEAR(static_cast<double>(tc.benign), b * frac, 1.0);
    EXPECT_NEAR(static_cast<double>(tc.malware), m * frac, 1.0);
  }
}

TEST(Split, Errors) {
  EXPECT_THROW(split(labelled(1, 0), {0.8, true, 1}), Error);
  try {
    split(labelled(6, 0), {0.8, true, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingClass);
  }
  EXPECT_THROW(split(labelled(5, 5), {1.0, true, 1}), Error);
}

TEST(Balance, AlreadyBalancedUnchanged) {
  const auto d = labelled(10, 10);
  EXPECT_EQ(balance(d, {BalanceMethod::OversampleMinority, 1}).class_counts(), (ClassCounts{10, 10}));
}

TEST(Balance, OversampleRealDeviceYearBucket) {
  const auto d = labelled(64, 934, 2008);
  const auto o = balance(d, {BalanceMethod::OversampleMinority, 42});
  EXPECT_EQ(o.class_counts(), (ClassCounts{934, 934}));
  for (const auto& s : o.samples()) EXPECT_EQ(s.year, 2008);
  const auto u = balance(d, {BalanceMethod::UndersampleMajority, 42});
  EXPECT_EQ(u.class_counts(), (ClassCounts{64, 64}));
}

TEST(Balance, NoneIsIdentity) {
  const auto d = labelled(3, 9);
  EXPECT_EQ(balance(d, {BalanceMethod::None, 5}), d);
}

TEST(Balance, SupersetSubsetAndDeterminismProperty) {
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 30; ++trial) {
    const auto d = labelled(1 + gen() % 50, 1 + gen() % 50);
    const auto input = ids(d);
    const std::uint64_t seed = gen();
    const auto over = balance(d, {BalanceMethod::OversampleMinority, seed});
    const auto under = balance(d, {BalanceMethod::UndersampleMajority, seed});
    EXPECT_EQ(over.class_counts().benign, over.class_counts().malware);
    EXPECT_EQ(under.class_counts().benign, under.class_counts().malware);
    const auto o = ids(over);
    for (const auto& id : input) EXPECT_GE(o.count(id), 1U);
    for (const auto& id : o) EXPECT_EQ(input.count(id), 1U);
    for (const auto& id : ids(under)) EXPECT_EQ(input.count(id), 1U);
    EXPECT_EQ(fixture::to_csv(balance(d, {BalanceMethod::OversampleMinority, seed})), fixture::to_csv(over));
    EXPECT_EQ(fixture::to_csv(balance(d, {BalanceMethod::UndersampleMajority, seed})), fixture::to_csv(under));
  }
}

TEST(Balance, MissingClassRejected) {
  try {
    balance(labelled(4, 0), {BalanceMethod::OversampleMinority, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingClass);
  }
}

TEST(Balance, MethodNames) {
  EXPECT_EQ(parse_balance_method("over"), BalanceMethod::OversampleMinority);
  EXPECT_EQ(parse_balance_method("under"), BalanceMethod::UndersampleMajority);
  EXPECT_EQ(parse_balance_method("none"), BalanceMethod::None);
  EXPECT_THROW(parse_balance_method("smote"), Error);
}
