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

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "palign/prior.hpp"
#include "palign/regions.hpp"

namespace palign {
namespace {

TEST(Overlap, ContainmentAndDisjointness) {
  const auto part = make_grid_partition(8, 8, 2, 2);
  const auto prior = PriorRegion::from_box(8, 8, {0, 0, 4, 4});
  const auto phi = compute_overlap(part, prior);
  EXPECT_EQ(phi[0], 1.0);
  EXPECT_EQ(phi[1], 0.0);
  EXPECT_EQ(phi[2], 0.0);
  EXPECT_EQ(phi[3], 0.0);
}

TEST(Overlap, HalfCoveredRegion) {
  // eight scattered prior pixels inside the first 4x4 cell
  const auto part = make_grid_partition(8, 8, 2, 2);
  std::vector<std::uint8_t> mask(64, 0);
  const std::size_t cells[][2] = {{0, 0}, {0, 3}, {1, 1}, {1, 2}, {2, 0}, {2, 3}, {3, 1}, {3, 3}};
  for (const auto& rc : cells) mask[rc[0] * 8 + rc[1]] = 1;
  mask[7 * 8 + 7] = 1;  // one pixel in the last cell
  const PriorRegion prior(8, 8, mask, PriorSource::kFreeMask);

  std::size_t brute = 0;
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 4; ++c) brute += mask[r * 8 + c];
  }
  const auto phi = compute_overlap(part, prior);
  EXPECT_EQ(phi[0], static_cast<double>(brute) / 16.0);
  EXPECT_EQ(phi[0], 0.5);
  EXPECT_EQ(phi[3], 1.0 / 16.0);
}

TEST(Overlap, DimensionMismatchThrows) {
  const auto part = make_grid_partition(8, 8, 2, 2);
  EXPECT_THROW(compute_overlap(part, PriorRegion::from_box(8, 4, {0, 0, 2, 2})), ShapeError);
}

TEST(Prior, EmptyMaskRejected) {
  EXPECT_THROW(PriorRegion(4, 4, std::vector<std::uint8_t>(16, 0), PriorSource::kFreeMask),
               ConfigError);
  EXPECT_THROW(PriorRegion(4, 4, std::vector<std::uint8_t>(15, 1), PriorSource::kFreeMask),
               ShapeError);
  EXPECT_THROW(PriorRegion::from_box(4, 4, {2, 2, 3, 1}), ConfigError);
}

TEST(Prior, OffPriorIsStrict) {
  EXPECT_TRUE(is_off_prior(0.0, 0.5));
  EXPECT_FALSE(is_off_prior(0.5, 0.5));
  EXPECT_TRUE(is_off_prior(0.49, 0.5));
  EXPECT_FALSE(is_off_prior(1.0, 0.5));
}

class OverlapProperties : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(OverlapProperties, RangeMassAndMonotonicity) {
  std::mt19937_64 rng(GetParam());
  const auto part = make_grid_partition(12, 16, 3, 4);
  std::bernoulli_distribution coin(0.3);
  std::vector<std::uint8_t> mask(12 * 16, 0);
  for (auto& m : mask) m = coin(rng) ? 1 : 0;
  mask[0] = 1;
  const PriorRegion prior(12, 16, mask, PriorSource::kFreeMask);
  const auto phi = compute_overlap(part, prior);

  double mass = 0.0;
  for (std::size_t v = 0; v < part.n_regions(); ++v) {
    EXPECT_GE(phi[v], 0.0);
    EXPECT_LE(phi[v], 1.0);
    const auto& px = part.pixels_of(static_cast<RegionId>(v));
    const bool all_inside =
        std::all_of(px.begin(), px.end(), [&](std::size_t p) { return prior.inside(p); });
    EXPECT_EQ(phi[v] == 1.0, all_inside);
    mass += phi[v] * static_cast<double>(px.size());
  }
  EXPECT_DOUBLE_EQ(mass, static_cast<double>(prior.true_count()));

  std::vector<std::uint8_t> grown = mask;
  for (auto& m : grown) m = (m || coin(rng)) ? 1 : 0;
  const auto phi2 = compute_overlap(part, PriorRegion(12, 16, grown, PriorSource::kFreeMask));
  for (std::size_t v = 0; v < part.n_regions(); ++v) EXPECT_GE(phi2[v], phi[v]);
}

INSTANTIATE_TEST_SUITE_P(RandomMasks, OverlapProperties, ::testing::Range<std::uint64_t>(0, 20));

}  // namespace
}  // namespace palign
