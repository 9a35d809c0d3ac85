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

#ifndef PALIGN_EVAL_HPP_
#define PALIGN_EVAL_HPP_

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "palign/attribution.hpp"
#include "palign/data.hpp"
#include "palign/error.hpp"
#include "palign/model.hpp"
#include "palign/parallel.hpp"
#include "palign/prior.hpp"
#include "palign/regions.hpp"

namespace palign {

enum class PointGameRule {
  kCenterPixel,       // center pixel of the top region lies inside the prior
  kOverlapThreshold,  // phi(top region) >= threshold
};

struct PointGameOptions {
  PointGameRule rule = PointGameRule::kCenterPixel;
  double threshold = 0.5;
};

inline int point_game(const AttributionResult& attribution,
                      const RegionPartition& partition, const PriorRegion& prior,
                      const PointGameOptions& options = {}) {
  const RegionId top = top_region(attribution);
  if (options.rule == PointGameRule::kOverlapThreshold) {
    return compute_overlap(partition, prior)[top] >= options.threshold ? 1 : 0;
  }
  return prior.inside(partition.center_row(top), partition.center_col(top)) ? 1 : 0;
}

struct EvalConfig {
  AttributionConfig attribution;
  PointGameOptions point_game;
  std::vector<double> noise_sigmas = {0.1, 0.2, 0.3};
  std::uint64_t noise_seed = 1234;
  std::size_t threads = 1;
};

struct NoisyAccuracy {
  double sigma = 0.0;
  double top1 = 0.0;
  bool operator==(const NoisyAccuracy&) const = default;
};

// Every sample is attributed against its predicted class. point_game
// averages the per-sample outcome over correctly predicted samples (where the
// predicted class is the label); top1_given_pg1 is the accuracy among all
// samples whose top region passes the Point Game.
struct MetricsReport {
  std::string split;
  std::size_t n = 0;
  std::size_t n_correct = 0;
  double top1 = 0.0;
  double point_game = 0.0;
  std::size_t n_pg1 = 0;
  std::optional<double> top1_given_pg1;
  std::vector<NoisyAccuracy> noisy_top1;
  std::uint64_t seed = 0;

  static constexpr const char* kConvention =
      "point_game=mean over correctly predicted samples; "
      "rule=center pixel of rank-1 region inside prior; "
      "top1_given_pg1=accuracy over samples with PG=1 (attributed to predicted class)";

  bool operator==(const MetricsReport&) const = default;
};

inline std::uint64_t noise_seed_for(std::uint64_t base, double sigma, std::size_t index) {
  std::uint64_t h = base ^ (static_cast<std::uint64_t>(sigma * 1e6) * 0x9E3779B97F4A7C15ull);
  h ^= (index + 1) * 0xBF58476D1CE4E5B9ull;
  h ^= h >> 31;
  return h;
}

inline MetricsReport evaluate(const ModelState& model,
                              std::span<const Instance> instances,
                              const RegionPartition& partition,
                              std::span<const double> baseline,
                              const EvalConfig& config,
                              const std::string& split_name = "") {
  if (instances.empty()) throw ConfigError("cannot evaluate an empty split");
  const std::size_t n = instances.size();
  std::vector<int> correct(n, 0), pg(n, 0);
  parallel_for(n, config.threads, [&](std::size_t i) {
    const auto& inst = instances[i];
    const Prediction pred = forward(model, inst.pixels);
    const std::size_t cls = pred.argmax();
    correct[i] = cls == inst.label ? 1 : 0;
    const AttributionResult attr = greedy_attribute(model, inst.pixels, partition,
                                                    cls, config.attribution, baseline);
    pg[i] = point_game(attr, partition, inst.prior, config.point_game);
  });

  MetricsReport r;
  r.split = split_name.empty() ? to_string(instances.front().split) : split_name;
  r.n = n;
  r.seed = config.noise_seed;
  std::size_t pg_correct = 0, correct_and_pg = 0;
  for (std::size_t i = 0; i < n; ++i) {
    r.n_correct += static_cast<std::size_t>(correct[i]);
    r.n_pg1 += static_cast<std::size_t>(pg[i]);
    if (correct[i] && pg[i]) ++correct_and_pg;
    if (correct[i]) pg_correct += static_cast<std::size_t>(pg[i]);
  }
  r.top1 = static_cast<double>(r.n_correct) / static_cast<double>(n);
  r.point_game = r.n_correct ? static_cast<double>(pg_correct) /
                                   static_cast<double>(r.n_correct)
                             : 0.0;
  if (r.n_pg1 > 0) {
    r.top1_given_pg1 =
        static_cast<double>(correct_and_pg) / static_cast<double>(r.n_pg1);
  }

  for (double sigma : config.noise_sigmas) {
    std::vector<int> ok(n, 0);
    parallel_for(n, config.threads, [&](std::size_t i) {
      const auto& inst = instances[i];
      const Image noisy =
          add_gaussian_noise(inst.pixels, sigma, noise_seed_for(config.noise_seed, sigma, i));
      ok[i] = forward(model, noisy).argmax() == inst.label ? 1 : 0;
    });
    std::size_t hits = 0;
    for (int v : ok) hits += static_cast<std::size_t>(v);
    r.noisy_top1.push_back({sigma, static_cast<double>(hits) / static_cast<double>(n)});
  }
  return r;
}

// Flat CSV rendering of a report. Noise columns follow the report's sigma
// order; an undefined top1_given_pg1 is written as an empty field.
inline std::string csv_header(const MetricsReport& r) {
  std::string h = "split,n,n_correct,top1,point_game,n_pg1,top1_given_pg1";
  char buf[64];
  for (const auto& na : r.noisy_top1) {
    std::snprintf(buf, sizeof(buf), ",noisy_top1_sigma%g", na.sigma);
    h += buf;
  }
  return h;
}

inline std::string csv_row(const MetricsReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%s,%zu,%zu,%.6f,%.6f,%zu,", r.split.c_str(), r.n,
                r.n_correct, r.top1, r.point_game, r.n_pg1);
  std::string row = buf;
  if (r.top1_given_pg1) {
    std::snprintf(buf, sizeof(buf), "%.6f", *r.top1_given_pg1);
    row += buf;
  }
  for (const auto& na : r.noisy_top1) {
    std::snprintf(buf, sizeof(buf), ",%.6f", na.top1);
    row += buf;
  }
  return row;
}

}  // namespace palign

#endif  // PALIGN_EVAL_HPP_
