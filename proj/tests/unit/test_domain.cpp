#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "vhj/domain.hpp"

using namespace vhj;

TEST(Grid, IntervalSpacingAndInterior) {
  auto g = build_grid(Domain::interval(-1.0, 1.0), {5});
  EXPECT_DOUBLE_EQ(g->spacing(0), 0.5);
  const std::vector<std::size_t> expect{1, 2, 3};
  EXPECT_EQ(g->interior(), expect);
  EXPECT_EQ(g->boundary().size(), 2u);
  for (std::size_t k = 0; k < g->size(); ++k) EXPECT_DOUBLE_EQ(g->coord(k, 0), -1.0 + 0.5 * static_cast<double>(k));
}

TEST(Grid, SquareWithThreeNodesHasOneInteriorNode) {
  auto g = build_grid(Domain::rectangle({0, 1}, {0, 1}), {3, 3});
  ASSERT_EQ(g->interior().size(), 1u);
  EXPECT_EQ(g->interior()[0], g->index(1, 1));
  EXPECT_EQ(g->boundary().size(), 8u);
}

TEST(Grid, RejectsTooFewNodes) {
  try {
    build_grid(Domain::interval(-1, 1), {2});
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("no interior node"), std::string::npos);
  }
}

TEST(Grid, InteriorAndBoundaryPartitionNodes) {
  auto g = build_grid(Domain::rectangle({-1, 2}, {0, 1}), {7, 5});
  std::set<std::size_t> all(g->interior().begin(), g->interior().end());
  for (std::size_t k : g->boundary()) EXPECT_TRUE(all.insert(k).second);
  EXPECT_EQ(all.size(), g->size());
  for (std::size_t k : g->boundary()) {
    const auto [i, j] = g->multi_index(k);
    EXPECT_TRUE(i == 0 || i == 6 || j == 0 || j == 4);
  }
}

TEST(Grid, InwardNeighborIsDiagonalAtCorners) {
  auto g = build_grid(Domain::rectangle({0, 1}, {0, 2}), {5, 9});
  EXPECT_EQ(g->inward_neighbor(g->index(0, 0)), g->index(1, 1));
  EXPECT_EQ(g->inward_neighbor(g->index(4, 3)), g->index(3, 3));
  EXPECT_EQ(g->inward_neighbor(g->index(2, 8)), g->index(2, 7));
  EXPECT_DOUBLE_EQ(g->inward_spacing(g->index(0, 0)), 0.25);
}

TEST(Domain, RejectsDegenerateAxis) {
  EXPECT_THROW(Domain::interval(1.0, 1.0), InvalidArgument);
  EXPECT_THROW(Domain::rectangle({0, 1}, {2, -1}), InvalidArgument);
}

TEST(DistanceField, Examples) {
  auto sq = build_grid(Domain::rectangle({0, 1}, {0, 1}), {11, 11});
  const Field d = distance_field(sq);
  EXPECT_NEAR(d[sq->index(3, 5)], 0.3, 1e-15);
  for (std::size_t k : sq->boundary()) EXPECT_EQ(d[k], 0.0);

  auto line = build_grid(Domain::interval(-1, 1), {5});
  EXPECT_DOUBLE_EQ(distance_field(line)[2], 1.0);
}

TEST(DistanceField, OneLipschitzAcrossNeighbors) {
  auto g = build_grid(Domain::rectangle({-1, 1}, {0, 3}), {13, 17});
  const Field d = distance_field(g);
  for (std::size_t k = 0; k < g->size(); ++k) {
    const auto [i, j] = g->multi_index(k);
    if (i + 1 < 13) {
      EXPECT_LE(std::abs(d[k] - d[g->index(i + 1, j)]), g->spacing(0) + 1e-14);
    }
    if (j + 1 < 17) {
      EXPECT_LE(std::abs(d[k] - d[g->index(i, j + 1)]), g->spacing(1) + 1e-14);
    }
  }
}

TEST(InteriorBand, Examples) {
  auto g5 = build_grid(Domain::interval(-1, 1), {5});
  const std::vector<std::size_t> mid{1, 2, 3};
  EXPECT_EQ(interior_band(g5, 0.4), mid);
  EXPECT_THROW(interior_band(g5, 1.0), EmptyBand);

  auto g21 = build_grid(Domain::interval(-1, 1), {21});
  for (std::size_t k : interior_band(g21, 0.1)) EXPECT_LE(std::abs(g21->coord(k, 0)), 0.8 + 1e-12);
  EXPECT_EQ(interior_band(g21, 0.1).size(), 17u);
}

TEST(InteriorBand, NestedInDelta) {
  auto g = build_grid(Domain::rectangle({0, 1}, {0, 1}), {21, 21});
  const auto a = interior_band(g, 0.1), b = interior_band(g, 0.3);
  EXPECT_TRUE(std::includes(a.begin(), a.end(), b.begin(), b.end()));
  EXPECT_GT(a.size(), b.size());
}

TEST(InteriorBand, EmptyBandIsDistinctCondition) {
  // Nodes at 0, 1/3, 2/3, 1: the deepest node sits at d = 1/3 < 0.4.
  auto g = build_grid(Domain::interval(0, 1), {4});
  EXPECT_THROW(interior_band(g, 0.4), EmptyBand);
}

TEST(Field, ValueCountMustMatch) {
  auto g = build_grid(Domain::interval(0, 1), {4});
  EXPECT_THROW(Field(g, std::vector<double>(3, 0.0)), InvalidArgument);
}
