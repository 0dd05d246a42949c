#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "chaosbsde/multiindex.hpp"

using namespace chaosbsde;

namespace {

// Exact C(n, k) from Pascal's triangle.
std::uint64_t pascal(int n, int k) {
  std::vector<std::vector<std::uint64_t>> c(n + 1, std::vector<std::uint64_t>(n + 1, 0));
  for (int i = 0; i <= n; ++i) {
    c[i][0] = 1;
    for (int j = 1; j <= i; ++j) c[i][j] = c[i - 1][j - 1] + c[i - 1][j];
  }
  return c[n][k];
}

}  // namespace

TEST(IndexSet, CountsFromTheTruncationRemark) {
  EXPECT_EQ(IndexSet(3, 60, 1).size(), 39711u);
  EXPECT_EQ(IndexSet(6, 20, 1).size(), 230230u);
  EXPECT_EQ(IndexSet(0, 5, 3).size(), 1u);
}

TEST(IndexSet, CountMatchesBinomial) {
  for (int P = 0; P <= 4; ++P) {
    for (int M = 1; M <= 6; ++M) {
      for (int d = 1; d <= 3; ++d) {
        const IndexSet s(P, M, d);
        EXPECT_EQ(s.size(), pascal(P + d * M, d * M)) << P << " " << M << " " << d;
        EXPECT_EQ(index_count(P, d * M), s.size());
      }
    }
  }
}

TEST(IndexSet, RankUnrankBijection) {
  for (auto [P, M, d] : {std::tuple{3, 4, 2}, {2, 3, 3}, {4, 5, 1}, {2, 10, 5}}) {
    const IndexSet s(P, M, d);
    std::set<std::vector<int>> seen;
    for (std::size_t r = 0; r < s.size(); ++r) {
      const MultiIndex a = s.at(r);
      EXPECT_EQ(s.rank(a), r);
      EXPECT_LE(a.order(), P);
      seen.insert(std::vector<int>(a.flat().begin(), a.flat().end()));
    }
    EXPECT_EQ(seen.size(), s.size());
  }
}

TEST(IndexSet, GradedLexOrder) {
  const IndexSet s(3, 3, 2);
  EXPECT_TRUE(s.at(0).is_zero());
  for (std::size_t r = 1; r < s.size(); ++r) {
    const auto a = s.at(r - 1), b = s.at(r);
    ASSERT_LE(a.order(), b.order());
    if (a.order() == b.order()) {
      EXPECT_TRUE(std::lexicographical_compare(a.flat().begin(), a.flat().end(),
                                               b.flat().begin(), b.flat().end()));
    }
  }
}

TEST(IndexSet, ProductRecurrenceData) {
  const IndexSet s(3, 4, 2);
  for (std::size_t r = 1; r < s.size(); ++r) {
    const auto a = s.at(r);
    auto flat = std::vector<int>(a.flat().begin(), a.flat().end());
    const int pos = s.last_position(r);
    EXPECT_EQ(flat[pos], s.last_degree(r));
    for (std::size_t k = pos + 1; k < flat.size(); ++k) EXPECT_EQ(flat[k], 0);
    flat[pos] = 0;
    EXPECT_EQ(*s.find(flat), s.parent(r));
  }
}

TEST(IndexSet, RaisedAndSupport) {
  const IndexSet s(2, 3, 2);
  const MultiIndex e(2, 3, {0, 1, 0, 0, 0, 0});
  const auto r = s.rank(e);
  EXPECT_EQ(s.support(r), 2);
  EXPECT_EQ(s.support(0), 0);
  const auto up = s.raised(r, 4);
  ASSERT_TRUE(up.has_value());
  EXPECT_EQ(s.at(*up), MultiIndex(2, 3, {0, 1, 0, 0, 1, 0}));
  EXPECT_EQ(s.support(*up), 2);
  EXPECT_FALSE(s.raised(*up, 0).has_value());
}

TEST(IndexSet, CapIsEnforced) {
  try {
    IndexSet(6, 60, 1, 1u << 20);
    FAIL() << "expected length_error";
  } catch (const std::length_error& e) {
    EXPECT_NE(std::string(e.what()).find("90858768"), std::string::npos) << e.what();
  }
  EXPECT_THROW(IndexSet(-1, 2, 1), std::invalid_argument);
}

TEST(MultiIndex, FactorialWeight) {
  const MultiIndex a(2, 3, {3, 0, 2, 1, 4, 2});
  EXPECT_EQ(a.order(), 12);
  EXPECT_EQ(a.factorial(), 6.0 * 2 * 1 * 24 * 2);
  EXPECT_DOUBLE_EQ(std::exp(a.log_factorial()), a.factorial());
  const IndexSet s(12, 2, 1);
  for (std::size_t r = 0; r < s.size(); ++r) {
    const auto b = s.at(r);
    double f = 1.0;
    for (int v : b.flat()) for (int k = 2; k <= v; ++k) f *= k;
    EXPECT_EQ(s.factorial(r), f);
    EXPECT_EQ(b.factorial(), f);
  }
}

TEST(MultiIndex, Pad) {
  EXPECT_EQ(pad_index(MultiIndex(1, 2, {2, 1}), 4), MultiIndex(1, 4, {2, 1, 0, 0}));
  EXPECT_TRUE(pad_index(MultiIndex(1, 3), 5).is_zero());
  EXPECT_EQ(pad_index(MultiIndex(1, 2, {0, 3}), 2), MultiIndex(1, 2, {0, 3}));
  EXPECT_EQ(pad_index(MultiIndex(2, 1, {1, 2}), 2), MultiIndex(2, 2, {1, 0, 2, 0}));
  EXPECT_THROW(pad_index(MultiIndex(1, 3), 2), std::invalid_argument);
}

TEST(MultiIndex, TruncatePrefix) {
  EXPECT_EQ(truncate_prefix(MultiIndex(1, 3, {2, 1, 3}), 2), MultiIndex(1, 3, {2, 1, 0}));
  EXPECT_EQ(truncate_prefix(MultiIndex(1, 3, {2, 1, 3}), 3), MultiIndex(1, 3, {2, 1, 3}));
  EXPECT_TRUE(truncate_prefix(MultiIndex(1, 3), 1).is_zero());
  EXPECT_EQ(truncate_prefix(MultiIndex(2, 2, {1, 1, 2, 2}), 1), MultiIndex(2, 2, {1, 0, 2, 0}));
  EXPECT_THROW(truncate_prefix(MultiIndex(1, 3), 0), std::out_of_range);
  EXPECT_THROW(truncate_prefix(MultiIndex(1, 3), 4), std::out_of_range);
}
