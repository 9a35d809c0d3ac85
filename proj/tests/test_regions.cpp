/*
 * Copyright 2026 The palign Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include <gtest/gtest.h>

#include <random>
#include <set>
#include <string>
#include <vector>

#include "palign/regions.hpp"
#include "test_util.hpp"

namespace palign {
namespace {

TEST(GridPartition, SevenBySevenOnTwentyEight) {
  const auto p = make_grid_partition(28, 28, 7, 7);
  EXPECT_EQ(p.n_regions(), 49u);
  EXPECT_EQ(p.cell_height(), 4u);
  EXPECT_EQ(p.cell_width(), 4u);
  std::vector<int> count(49, 0);
  for (std::size_t r = 0; r < 28; ++r) {
    for (std::size_t c = 0; c < 28; ++c) ++count[(r / 4) * 7 + c / 4];
  }
  for (std::size_t v = 0; v < 49; ++v) {
    EXPECT_EQ(count[v], 16);
    EXPECT_EQ(p.pixels_of(static_cast<RegionId>(v)).size(), 16u);
  }
}

TEST(GridPartition, IdentityPartition) {
  const auto p = make_grid_partition(4, 4, 1, 1);
  ASSERT_EQ(p.n_regions(), 1u);
  EXPECT_EQ(p.pixels_of(0).size(), 16u);
  for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(p.region_of_pixel(i), 0u);
}

TEST(GridPartition, NonDivisibleNamesTheAxis) {
  try {
    make_grid_partition(28, 28, 5, 5);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("height"), std::string::npos) << e.what();
  }
  try {
    make_grid_partition(28, 30, 7, 4);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("width"), std::string::npos) << e.what();
  }
  EXPECT_THROW(make_grid_partition(28, 28, 0, 7), ConfigError);
}

TEST(GridPartition, DisjointAndCoveringForManyGeometries) {
  const std::size_t dims[][4] = {{28, 28, 7, 7}, {28, 28, 4, 2}, {6, 9, 3, 3},
                                 {10, 4, 5, 1}, {1, 5, 1, 5}, {12, 12, 12, 12}};
  for (const auto& d : dims) {
    const auto p = make_grid_partition(d[0], d[1], d[2], d[3]);
    ASSERT_EQ(p.n_regions(), d[2] * d[3]);
    std::vector<int> owners(d[0] * d[1], 0);
    std::size_t total = 0;
    for (std::size_t v = 0; v < p.n_regions(); ++v) {
      const auto& px = p.pixels_of(static_cast<RegionId>(v));
      EXPECT_FALSE(px.empty());
      total += px.size();
      for (std::size_t i : px) {
        ++owners[i];
        EXPECT_EQ(p.region_of_pixel(i), v);
      }
    }
    EXPECT_EQ(total, d[0] * d[1]);
    for (int o : owners) EXPECT_EQ(o, 1);
  }
}

TEST(GridPartition, RegionGeometryAccessors) {
  const auto p = make_grid_partition(28, 28, 7, 7);
  EXPECT_EQ(p.region_of(0, 0), 0u);
  EXPECT_EQ(p.region_of(27, 27), 48u);
  EXPECT_EQ(p.region_of(5, 9), 1u * 7 + 2);
  EXPECT_EQ(p.first_row(8), 4u);
  EXPECT_EQ(p.first_col(8), 4u);
  EXPECT_EQ(p.center_row(8), 6u);
  EXPECT_EQ(p.center_col(8), 6u);
}

TEST(SubsetMask, RejectsDuplicatesAndOutOfRange) {
  SubsetMask s(4);
  s.add(2);
  EXPECT_THROW(s.add(2), ContractError);
  EXPECT_THROW(s.add(4), ContractError);
  EXPECT_THROW(SubsetMask(3, {0, 0}), ContractError);
  const SubsetMask t(5, {3, 1});
  EXPECT_EQ(t.size(), 2u);
  EXPECT_TRUE(t.contains(3));
  EXPECT_FALSE(t.contains(0));
  EXPECT_EQ(SubsetMask::all(6).size(), 6u);
}

TEST(ApplyMask, FullMaskIsIdentity) {
  std::mt19937_64 rng(1);
  const auto x = testing::random_image({8, 8, 2}, rng);
  const auto p = make_grid_partition(8, 8, 2, 4);
  const std::vector<double> base = {0.3, 0.7};
  EXPECT_EQ(apply_mask(x, p, SubsetMask::all(8), base).values, x.values);
}

TEST(ApplyMask, EmptyMaskIsConstantBaseline) {
  std::mt19937_64 rng(2);
  const auto x = testing::random_image({8, 8, 2}, rng);
  const auto p = make_grid_partition(8, 8, 2, 2);
  const std::vector<double> base = {0.3, 0.7};
  const Image out = apply_mask(x, p, SubsetMask(4), base);
  for (std::size_t r = 0; r < 8; ++r) {
    for (std::size_t c = 0; c < 8; ++c) {
      EXPECT_EQ(out.at(r, c, 0), 0.3);
      EXPECT_EQ(out.at(r, c, 1), 0.7);
    }
  }
}

TEST(ApplyMask, TopLeftCellOnly) {
  std::mt19937_64 rng(3);
  Image x = testing::random_image({4, 4, 1}, rng);
  const Image original = x;
  const auto p = make_grid_partition(4, 4, 2, 2);
  const std::vector<double> base = {0.0};
  const Image out = apply_mask(x, p, SubsetMask(4, {0}), base);
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 4; ++c) {
      const double expect = (r < 2 && c < 2) ? x.at(r, c) : 0.0;
      EXPECT_EQ(out.at(r, c), expect) << r << "," << c;
    }
  }
  EXPECT_EQ(x.values, original.values);
}

TEST(ApplyMask, ShapeMismatchThrows) {
  const auto p = make_grid_partition(4, 4, 2, 2);
  const std::vector<double> base = {0.0};
  EXPECT_THROW(apply_mask(Image({4, 8, 1}), p, SubsetMask(4), base), ShapeError);
  EXPECT_THROW(apply_mask(Image({4, 4, 1}), p, SubsetMask(5), base), ShapeError);
  const std::vector<double> two = {0.0, 0.0};
  EXPECT_THROW(apply_mask(Image({4, 4, 1}), p, SubsetMask(4), two), ShapeError);
}

// For random subsets A, B: the union mask agrees with A's mask on A's pixels,
// and every output value is either the input or the channel baseline,
// decided by region membership alone.
TEST(ApplyMask, LocalityAndMembershipProperty) {
  std::mt19937_64 rng(4);
  const auto p = make_grid_partition(12, 12, 3, 4);
  const std::vector<double> base = {-1.0, -2.0};
  std::bernoulli_distribution coin(0.4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = testing::random_image({12, 12, 2}, rng);
    SubsetMask a(p.n_regions()), ab(p.n_regions());
    for (std::size_t v = 0; v < p.n_regions(); ++v) {
      const bool in_a = coin(rng), in_b = coin(rng);
      if (in_a) a.add(static_cast<RegionId>(v));
      if (in_a || in_b) ab.add(static_cast<RegionId>(v));
    }
    const Image ma = apply_mask(x, p, a, base);
    const Image mab = apply_mask(x, p, ab, base);
    for (std::size_t px = 0; px < 144; ++px) {
      const RegionId v = p.region_of_pixel(px);
      for (std::size_t ch = 0; ch < 2; ++ch) {
        const std::size_t i = px * 2 + ch;
        if (a.contains(v)) {
          EXPECT_EQ(ma.values[i], mab.values[i]);
          EXPECT_EQ(ma.values[i], x.values[i]);
        } else {
          EXPECT_EQ(ma.values[i], base[ch]);
        }
      }
    }
  }
}

}  // namespace
}  // namespace palign
