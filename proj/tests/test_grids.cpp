#include <gtest/gtest.h>

#include <cstring>

#include "chaosbsde/grids.hpp"

using namespace chaosbsde;

namespace {

void expect_points(std::span<const double> got, std::vector<double> want) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t k = 0; k < want.size(); ++k) EXPECT_DOUBLE_EQ(got[k], want[k]) << k;
}

}  // namespace

TEST(TimeGrid, Uniform) {
  expect_points(build_time_grid(1.0, 4).points(), {0, 0.25, 0.5, 0.75, 1.0});
  expect_points(build_time_grid(1.0, 1).points(), {0, 1});
  expect_points(build_time_grid(2.0, 2).points(), {0, 1, 2});
  EXPECT_EQ(build_time_grid(1.0, 3).horizon(), 1.0);
  EXPECT_DOUBLE_EQ(build_time_grid(1.0, 4).step(2), 0.25);
}

TEST(TimeGrid, Validation) {
  EXPECT_THROW(TimeGrid({0.0, 0.5, 0.5, 1.0}), std::invalid_argument);
  EXPECT_THROW(TimeGrid({0.1, 1.0}), std::invalid_argument);
  // Steps 0.5 then 0.1: ratio 5 exceeds the bound 2.
  EXPECT_THROW(TimeGrid({0.0, 0.5, 0.6}, 2.0), std::invalid_argument);
  EXPECT_NO_THROW(TimeGrid({0.0, 0.5, 0.6}, 5.0));
}

TEST(RefinedGrid, Examples) {
  const auto g2 = build_time_grid(1.0, 2);
  const auto a = build_refined_grid(g2, 4, 2);
  expect_points(a.points(), {0, 0.25, 0.5, 0.75, 1.0});
  EXPECT_EQ(a.cells(), 4);

  const auto b = build_refined_grid(g2, 4, 1);
  expect_points(b.points(), {0, 0.25, 0.5});
  EXPECT_EQ(b.cells(), 2);
  EXPECT_DOUBLE_EQ(b.point(1), 0.25);

  const auto c = build_refined_grid(build_time_grid(1.0, 3), 4, 1);
  expect_points(c.points(), {0, 0.25, 1.0 / 3.0});
  EXPECT_EQ(c.cells(), 2);
  EXPECT_NEAR(c.width(2), 1.0 / 3.0 - 0.25, 1e-16);
}

TEST(RefinedGrid, LocateCell) {
  const auto rg = build_refined_grid(build_time_grid(1.0, 2), 4, 1);
  EXPECT_EQ(locate_cell(rg, 0.25), 1);
  EXPECT_EQ(locate_cell(rg, 0.3), 2);
  EXPECT_EQ(locate_cell(rg, 0.5), 2);
  EXPECT_EQ(locate_cell(rg, 1e-9), 1);
  EXPECT_THROW(locate_cell(rg, 0.0), std::out_of_range);
  EXPECT_THROW(locate_cell(rg, 0.51), std::out_of_range);
}

TEST(RefinedGrid, NestingAndWidths) {
  for (auto [m, M] : {std::pair{3, 4}, {20, 10}, {7, 10}, {50, 5}, {10, 10}, {13, 60}}) {
    const auto g = build_time_grid(1.0, m);
    int prev_cells = 0;
    for (int i = 1; i <= m; ++i) {
      const auto rg = build_refined_grid(g, M, i);
      double sum = 0.0;
      for (int j = 1; j <= rg.cells(); ++j) {
        EXPECT_GT(rg.width(j), 0.0);
        sum += rg.width(j);
      }
      EXPECT_NEAR(sum, g.time(i), 1e-15 * rg.cells());
      EXPECT_EQ(rg.end(), g.time(i));
      EXPECT_GE(rg.cells(), prev_cells);
      prev_cells = rg.cells();
      if (i > 1) {
        const auto prev = build_refined_grid(g, M, i - 1);
        for (int j = 0; j < rg.cells() && rg.point(j) < g.time(i - 1); ++j) {
          // bitwise equality of shared points
          const double x = rg.point(j), y = prev.point(j);
          EXPECT_EQ(std::memcmp(&x, &y, sizeof x), 0) << m << " " << M << " " << i;
        }
      }
    }
  }
}

TEST(RefinedGrid, LatticePointsAreExactFractions) {
  EXPECT_EQ(lattice_point(5, 1.0, 10), lattice_point(1, 1.0, 2));
  EXPECT_EQ(lattice_point(10, 1.0, 10), 1.0);
  EXPECT_EQ(lattice_point(0, 2.0, 7), 0.0);
}

TEST(MergePoints, UnionWithoutDuplicates) {
  const std::vector<double> a{0.0, 0.25, 0.5};
  const std::vector<double> b{0.1, 0.25 + 1e-17, 0.5};
  expect_points(merge_points(a, b), {0.0, 0.1, 0.25, 0.5});
}
