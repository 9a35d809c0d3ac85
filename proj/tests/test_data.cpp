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

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "palign/data.hpp"

namespace palign {
namespace {

DatasetSpec small_spec(std::uint64_t seed = 3) {
  DatasetSpec s;
  s.n_train = 4;
  s.n_val = 3;
  s.n_flip = 3;
  s.seed = seed;
  return s;
}

std::string serialize(const Dataset& d) {
  std::ostringstream os(std::ios::binary);
  save_dataset(d, os);
  return os.str();
}

TEST(DatasetSpec, Defaults) {
  const DatasetSpec s;
  EXPECT_EQ(s.classes, 4u);
  EXPECT_EQ(s.shape(), (ImageShape{28, 28, 1}));
  EXPECT_EQ(s.n_train, 2000u);
  EXPECT_EQ(s.n_val, 500u);
  EXPECT_EQ(s.n_flip, 500u);
  EXPECT_EQ(s.rho_train, 0.95);
  EXPECT_EQ(s.glyph_size, 8u);
  EXPECT_EQ(s.patch_size, 4u);
  EXPECT_EQ(s.patch_corner, Corner::kTopRight);
  EXPECT_EQ(s.patch_box(), (Box{0, 24, 4, 4}));
}

TEST(DatasetSpec, GeometryErrors) {
  DatasetSpec s;
  s.glyph_size = 30;
  EXPECT_THROW(generate(s), ConfigError);
  s = DatasetSpec{};
  s.glyph_jitter = 9;
  s.patch_size = 8;
  EXPECT_THROW(s.validate(), ConfigError);
  s = DatasetSpec{};
  s.rho_train = 1.5;
  EXPECT_THROW(s.validate(), ConfigError);
  s = DatasetSpec{};
  s.classes = 1;
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(Generate, FullCorrelation) {
  DatasetSpec s;
  s.rho_train = 1.0;
  s.n_val = s.n_flip = 4;
  const Dataset d = generate(s);
  ASSERT_EQ(d.train.size(), 2000u);
  for (const auto& inst : d.train) EXPECT_EQ(inst.shortcut_class, inst.label);
}

// rho = 0: the shortcut is uniform over the three other classes. Counts of
// (shortcut - label) mod K must sit within 3 sigma of n/3 each.
TEST(Generate, ZeroCorrelationIsUniformOverOtherClasses) {
  DatasetSpec s;
  s.rho_train = 0.0;
  s.n_train = 10000;
  s.n_val = s.n_flip = 4;
  s.seed = 17;
  const Dataset d = generate(s);
  std::vector<double> count(4, 0.0);
  for (const auto& inst : d.train) {
    ASSERT_NE(inst.shortcut_class, inst.label);
    count[(inst.shortcut_class + 4 - inst.label) % 4] += 1.0;
  }
  const double n = 10000.0, p = 1.0 / 3.0;
  const double sd = std::sqrt(n * p * (1 - p));
  for (std::size_t off = 1; off < 4; ++off) EXPECT_LE(std::abs(count[off] - n * p), 3 * sd);

  // per label as well: every wrong class shows up
  std::vector<std::vector<int>> per(4, std::vector<int>(4, 0));
  for (const auto& inst : d.train) ++per[inst.label][inst.shortcut_class];
  for (std::size_t y = 0; y < 4; ++y) {
    for (std::size_t c = 0; c < 4; ++c) {
      if (c == y) continue;
      const double m = 2500.0 * p, sdl = std::sqrt(2500.0 * p * (1 - p));
      EXPECT_LE(std::abs(per[y][c] - m), 3.5 * sdl);
    }
  }
}

TEST(Generate, SplitSemantics) {
  DatasetSpec s;
  s.seed = 5;
  const Dataset d = generate(s);
  std::size_t agree = 0;
  for (const auto& inst : d.train) agree += inst.shortcut_class == inst.label;
  const double n = 2000.0, sd = std::sqrt(n * 0.95 * 0.05);
  EXPECT_LE(std::abs(static_cast<double>(agree) - 0.95 * n), 3 * sd);
  for (const auto& inst : d.shortcut_flipped) EXPECT_NE(inst.shortcut_class, inst.label);
  std::vector<int> labels(4, 0);
  for (const auto& inst : d.val) ++labels[inst.label];
  for (int c : labels) EXPECT_EQ(c, 125);
  for (const auto& inst : d.val) EXPECT_EQ(inst.split, Split::kVal);
}

TEST(Generate, DeterministicUnderSeed) {
  DatasetSpec s = small_spec(9);
  s.n_train = 40;
  EXPECT_EQ(generate(s), generate(s));
  EXPECT_EQ(serialize(generate(s)), serialize(generate(s)));
  DatasetSpec t = s;
  t.seed = 10;
  EXPECT_NE(serialize(generate(s)), serialize(generate(t)));
}

// Every pixel of the glyph pattern sits inside the prior with stroke
// intensity, the prior is exactly the glyph box, and the patch encodes the
// shortcut class.
TEST(Generate, GlyphInsidePriorAndPatchEncodesShortcut) {
  DatasetSpec s;
  s.n_train = 200;
  s.seed = 2;
  const Dataset d = generate(s);
  for (const auto* split : {&d.train, &d.val, &d.shortcut_flipped}) {
    for (const auto& inst : *split) {
      ASSERT_EQ(inst.prior.true_count(), 64u);
      std::size_t r0 = 99, c0 = 99;
      for (std::size_t r = 0; r < 28 && r0 == 99; ++r) {
        for (std::size_t c = 0; c < 28; ++c) {
          if (inst.prior.inside(r, c)) {
            r0 = r;
            c0 = c;
            break;
          }
        }
      }
      const auto pattern = glyph_pattern(inst.label, 8);
      for (std::size_t r = 0; r < 8; ++r) {
        for (std::size_t c = 0; c < 8; ++c) {
          ASSERT_TRUE(inst.prior.inside(r0 + r, c0 + c));
          if (pattern[r * 8 + c]) {
            EXPECT_GE(inst.pixels.at(r0 + r, c0 + c), s.glyph_intensity - 0.15 - 1e-12);
          } else {
            EXPECT_LE(inst.pixels.at(r0 + r, c0 + c), s.background_level + s.background_noise);
          }
        }
      }
      const double level = shortcut_intensity(s, inst.shortcut_class);
      for (std::size_t r = 0; r < 4; ++r) {
        for (std::size_t c = 24; c < 28; ++c) EXPECT_EQ(inst.pixels.at(r, c), level);
      }
      for (double v : inst.pixels.values) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
      }
    }
  }
}

TEST(Generate, GlyphsAreDistinct) {
  for (std::size_t a = 0; a < 6; ++a) {
    for (std::size_t b = a + 1; b < 6; ++b) EXPECT_NE(glyph_pattern(a, 8), glyph_pattern(b, 8));
  }
}

// A linear decoder fitted on the patch pixels alone: nearest class-mean of
// the patch intensity, i.e. logits 2 m_c s - m_c^2. It rides the shortcut.
TEST(Generate, ShortcutProbeIsLearnableAndMisleading) {
  DatasetSpec s;
  s.seed = 11;
  const Dataset d = generate(s);
  auto patch_mean = [](const Instance& inst) {
    double sum = 0.0;
    for (std::size_t r = 0; r < 4; ++r) {
      for (std::size_t c = 24; c < 28; ++c) sum += inst.pixels.at(r, c);
    }
    return sum / 16.0;
  };
  std::vector<double> mean(4, 0.0), n(4, 0.0);
  for (const auto& inst : d.train) {
    mean[inst.label] += patch_mean(inst);
    n[inst.label] += 1.0;
  }
  for (std::size_t c = 0; c < 4; ++c) mean[c] /= n[c];
  auto predict = [&](const Instance& inst) {
    const double v = patch_mean(inst);
    std::size_t best = 0;
    double best_logit = -1e300;
    for (std::size_t c = 0; c < 4; ++c) {
      const double logit = 2.0 * mean[c] * v - mean[c] * mean[c];
      if (logit > best_logit) {
        best_logit = logit;
        best = c;
      }
    }
    return best;
  };
  auto accuracy = [&](const std::vector<Instance>& split) {
    double hit = 0.0;
    for (const auto& inst : split) hit += predict(inst) == inst.label;
    return hit / static_cast<double>(split.size());
  };
  const double train_sd = std::sqrt(0.95 * 0.05 / 2000.0);
  EXPECT_GE(accuracy(d.train), s.rho_train - 3 * train_sd);
  const double val_sd = std::sqrt(0.25 * 0.75 / 500.0);
  EXPECT_NEAR(accuracy(d.val), 0.25, 3 * val_sd);
  EXPECT_LE(accuracy(d.shortcut_flipped), 0.25);
}

TEST(Noise, ZeroSigmaIsIdentity) {
  const Dataset d = generate(small_spec());
  const Image& x = d.train[0].pixels;
  EXPECT_EQ(add_gaussian_noise(x, 0.0, 1).values, x.values);
  EXPECT_THROW(add_gaussian_noise(x, -0.1, 1), ConfigError);
}

TEST(Noise, OutputStaysInUnitInterval) {
  const Dataset d = generate(small_spec());
  for (double sigma : {0.1, 0.5, 3.0}) {
    const Image y = add_gaussian_noise(d.train[1].pixels, sigma, 42);
    for (double v : y.values) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Noise, MeanAbsolutePerturbationMoment) {
  const double sigma = 0.2;
  const auto e = gaussian_perturbation(1'000'000, sigma, 123);
  double sum = 0.0;
  for (double v : e) sum += std::abs(v);
  const double expect = sigma * std::sqrt(2.0 / M_PI);
  EXPECT_NEAR(sum / 1e6, expect, 0.02 * expect);
}

TEST(Noise, SeededAndSeedSensitive) {
  const Dataset d = generate(small_spec());
  const Image& x = d.train[0].pixels;
  EXPECT_EQ(add_gaussian_noise(x, 0.2, 5).values, add_gaussian_noise(x, 0.2, 5).values);
  EXPECT_NE(add_gaussian_noise(x, 0.2, 5).values, add_gaussian_noise(x, 0.2, 6).values);
}

TEST(DatasetFile, RoundTripIsBitExact) {
  const Dataset d = generate(small_spec());
  ASSERT_EQ(d.train.size() + d.val.size() + d.shortcut_flipped.size(), 10u);
  std::istringstream in(serialize(d));
  const Dataset back = load_dataset(in);
  EXPECT_EQ(back, d);
  EXPECT_EQ(serialize(back), serialize(d));
}

TEST(DatasetFile, NonDefaultSpecFieldsSurvive) {
  DatasetSpec s = small_spec();
  s.background_level = 0.1;
  s.shortcut_min = 0.25;
  s.glyph_intensity = 0.8;
  s.patch_corner = Corner::kBottomLeft;
  std::istringstream in(serialize(generate(s)));
  EXPECT_EQ(load_dataset(in).spec, s);
}

TEST(DatasetFile, SizeAccounting) {
  const Dataset d = generate(small_spec());
  const std::size_t header = 8 + 4                  // magic, version
                             + 4 * 4                // classes, height, width, channels
                             + 3 * 8                // split counts
                             + 8                    // rho
                             + 4 * 4                // glyph size, jitter, patch size, corner
                             + 4 * 8                // intensity parameters
                             + 8;                   // seed
  const std::size_t per_sample = 28 * 28 * 8 + 4 + 4 + 1 + 28 * 28;
  EXPECT_EQ(header, kDatasetHeaderBytes);
  EXPECT_EQ(serialize(d).size(), header + 10 * per_sample);
}

TEST(DatasetFile, CorruptionIsRejected) {
  const std::string good = serialize(generate(small_spec()));
  std::string bad = good;
  bad[2] = '?';
  std::istringstream magic(bad);
  EXPECT_THROW(load_dataset(magic), LoadError);

  std::string version = good;
  version[8] = 7;
  std::istringstream v(version);
  EXPECT_THROW(load_dataset(v), LoadError);

  std::istringstream truncated(good.substr(0, good.size() - 100));
  try {
    load_dataset(truncated);
    FAIL() << "expected LoadError";
  } catch (const LoadError& e) {
    EXPECT_NE(std::string(e.what()).find("offset"), std::string::npos) << e.what();
  }

  std::istringstream trailing(good + "x");
  EXPECT_THROW(load_dataset(trailing), LoadError);
}

TEST(ChannelMean, MatchesDirectAverage) {
  const Dataset d = generate(small_spec());
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& inst : d.train) {
    for (double v : inst.pixels.values) {
      sum += v;
      ++n;
    }
  }
  EXPECT_NEAR(channel_mean(d.train)[0], sum / static_cast<double>(n), 1e-14);
}

}  // namespace
}  // namespace palign
