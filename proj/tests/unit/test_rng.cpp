#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "permdrift/parallel.hpp"
#include "permdrift/rng.hpp"

using namespace permdrift;

TEST(Fnv, KnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(Fnv, IncrementalMatchesOneShot) {
  Fnv1a64 h;
  h.update("foo");
  h.update("bar");
  EXPECT_EQ(h.digest(), fnv1a64("foobar"));
}

TEST(SplitMix, FirstOutputForSeedZero) {
  Rng rng(0);
  EXPECT_EQ(rng.next_u64(), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(rng.next_u64(), 0x6e789e6aa1b965f4ULL);
}

TEST(DeriveSeed, DependsOnEveryInput) {
  const auto base = derive_seed(42, "tree", {3});
  EXPECT_EQ(base, derive_seed(42, "tree", {3}));
  EXPECT_NE(base, derive_seed(43, "tree", {3}));
  EXPECT_NE(base, derive_seed(42, "model", {3}));
  EXPECT_NE(base, derive_seed(42, "tree", {4}));
  EXPECT_NE(derive_seed(42, "ks", {1, 2}), derive_seed(42, "ks", {2, 1}));
}

TEST(Rng, BelowStaysInRangeAndCoversIt) {
  Rng rng(7);
  std::vector<int> hits(10, 0);
  for (int i = 0; i < 100000; ++i) {
    const auto v = rng.below(10);
    ASSERT_LT(v, 10U);
    ++hits[v];
  }
  for (int h : hits) EXPECT_NEAR(h, 10000, 500);
}

TEST(Rng, UniformInHalfOpenUnitInterval) {
  Rng rng(11);
  double sum = 0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000, 0.5, 0.01);
}

TEST(Rng, ShuffleIsAPermutation) {
  Rng rng(3);
  for (int n : {0, 1, 2, 17}) {
    std::vector<int> v(n);
    std::iota(v.begin(), v.end(), 0);
    rng.shuffle(std::span(v));
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < n; ++i) EXPECT_EQ(sorted[i], i);
  }
}

TEST(ParallelFor, VisitsEveryIndexOnce) {
  for (int threads : {1, 2, 5}) {
    std::vector<int> seen(100, 0);
    parallel_for(seen.size(), threads, [&](std::size_t i) { seen[i] += 1; });
    for (int s : seen) EXPECT_EQ(s, 1);
  }
}

TEST(ParallelFor, RethrowsLowestIndexFailure) {
  for (int threads : {1, 4}) {
    try {
      parallel_for(50, threads, [](std::size_t i) {
        if (i == 7 || i == 30) throw std::runtime_error(std::to_string(i));
      });
      FAIL() << "expected an exception";
    } catch (const std::runtime_error& e) {
      EXPECT_STREQ(e.what(), "7");
    }
  }
}
