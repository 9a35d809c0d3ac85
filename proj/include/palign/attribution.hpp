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

#ifndef PALIGN_ATTRIBUTION_HPP_
#define PALIGN_ATTRIBUTION_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "palign/error.hpp"
#include "palign/image.hpp"
#include "palign/model.hpp"
#include "palign/parallel.hpp"
#include "palign/regions.hpp"

namespace palign {

// Greedy subset-selection attribution of one prediction.
//
// ordering[r] is the region chosen at rank r+1, prefix_scores[r] is the set
// function on the first r chosen regions (prefix_scores[0] = F(empty)), and
// marginal_gains[r] = prefix_scores[r+1] - prefix_scores[r].
struct AttributionResult {
  std::vector<RegionId> ordering;
  std::vector<double> prefix_scores;
  std::vector<double> marginal_gains;
  bool early_stopped = false;
  std::size_t target_class = 0;

  bool operator==(const AttributionResult&) const = default;
};

struct AttributionConfig {
  std::size_t k = 10;           // maximum regions selected
  double stop_conf = 0.8;       // stop once F(prefix) exceeds this
};

inline void check_target(const ModelState& state, std::size_t target) {
  if (target >= state.classes()) {
    throw ContractError("target class " + std::to_string(target) +
                        " out of range for " + std::to_string(state.classes()) +
                        " classes");
  }
}

// F(S): probability of the target class on the input where only the regions
// of S are visible and every other pixel holds the baseline.
inline double set_function(const ModelState& state, const Image& x,
                           const RegionPartition& partition,
                           const SubsetMask& subset, std::size_t target_class,
                           std::span<const double> baseline) {
  check_target(state, target_class);
  const Image masked = apply_mask(x, partition, subset, baseline);
  return forward(state, masked).probabilities[target_class];
}

// Evaluates F incrementally. The first layer is affine in the input, so its
// pre-activation on a masked input equals the all-baseline pre-activation
// plus one cached contribution per visible region; only the layers above the
// first are recomputed per query.
class MaskedScorer {
 public:
  MaskedScorer(const ModelState& state, const Image& x,
               const RegionPartition& partition,
               std::span<const double> baseline)
      : state_(state), n_regions_(partition.n_regions()) {
    if (!partition.matches(x.shape)) {
      throw ShapeError("image " + x.shape.to_string() +
                       " does not match partition");
    }
    if (baseline.size() != x.shape.channels) {
      throw ShapeError("baseline channel count does not match image");
    }
    check_input(state, x.shape.size());
    if (!state.input_shift.empty() && state.input_shift.size() != x.shape.channels) {
      throw ShapeError("model input shift does not match the image channels");
    }
    const DenseLayer& first = state.layers.front();
    const std::size_t channels = x.shape.channels;
    const std::size_t width = first.outputs;

    std::vector<double> fill(channels);
    for (std::size_t ch = 0; ch < channels; ++ch) {
      fill[ch] = baseline[ch] - (state.input_shift.empty() ? 0.0 : state.input_shift[ch]);
    }
    base_.assign(first.bias.begin(), first.bias.end());
    for (std::size_t o = 0; o < width; ++o) {
      const double* row = first.weight.data() + o * first.inputs;
      double acc = 0.0;
      for (std::size_t i = 0; i < first.inputs; ++i) acc += row[i] * fill[i % channels];
      base_[o] += acc;
    }

    contrib_.assign(n_regions_ * width, 0.0);
    for (std::size_t v = 0; v < n_regions_; ++v) {
      const auto& pixels = partition.pixels_of(static_cast<RegionId>(v));
      double* out = contrib_.data() + v * width;
      for (std::size_t o = 0; o < width; ++o) {
        const double* row = first.weight.data() + o * first.inputs;
        double acc = 0.0;
        for (std::size_t p : pixels) {
          for (std::size_t ch = 0; ch < channels; ++ch) {
            const std::size_t i = p * channels + ch;
            acc += row[i] * (x.values[i] - baseline[ch]);
          }
        }
        out[o] = acc;
      }
    }
  }

  std::size_t n_regions() const { return n_regions_; }
  std::size_t width() const { return base_.size(); }

  // First-layer pre-activation with only `members` visible.
  std::vector<double> first_layer(std::span<const RegionId> members) const {
    std::vector<double> pre = base_;
    for (RegionId v : members) add_region(pre, v);
    return pre;
  }

  void add_region(std::vector<double>& pre, RegionId v) const {
    const double* c = contrib_.data() + static_cast<std::size_t>(v) * width();
    for (std::size_t o = 0; o < pre.size(); ++o) pre[o] += c[o];
  }

  // Class probabilities given a first-layer pre-activation.
  std::vector<double> probabilities_from(std::vector<double> pre) const {
    for (std::size_t l = 1; l < state_.layers.size(); ++l) {
      for (auto& a : pre) a = detail::activate(state_.spec.activation, a);
      std::vector<double> next;
      detail::affine(state_.layers[l], pre, next);
      pre = std::move(next);
    }
    return softmax(pre);
  }

  double score(std::span<const RegionId> members, std::size_t target) const {
    return probabilities_from(first_layer(members))[target];
  }

 private:
  const ModelState& state_;
  std::size_t n_regions_;
  std::vector<double> base_;
  std::vector<double> contrib_;  // n_regions x width
};

// Greedily grows a prefix by the region that maximizes F(prefix + {v}).
// Ties go to the lowest region id. Stops after k regions, once every region
// is used, or as soon as F(prefix) > stop_conf. Gains may be negative.
inline AttributionResult greedy_attribute(const ModelState& state,
                                          const Image& x,
                                          const RegionPartition& partition,
                                          std::size_t target_class,
                                          const AttributionConfig& config,
                                          std::span<const double> baseline) {
  if (config.k == 0) throw ContractError("attribution length k must be >= 1");
  if (!(config.stop_conf > 0.0 && config.stop_conf <= 1.0)) {
    throw ContractError("stop confidence must lie in (0, 1]");
  }
  check_target(state, target_class);
  const MaskedScorer scorer(state, x, partition, baseline);
  const std::size_t n = scorer.n_regions();

  AttributionResult result;
  result.target_class = target_class;
  std::vector<double> prefix_pre = scorer.first_layer({});
  result.prefix_scores.push_back(
      scorer.probabilities_from(prefix_pre)[target_class]);
  std::vector<bool> used(n, false);

  while (result.ordering.size() < config.k && result.ordering.size() < n) {
    RegionId best = 0;
    double best_score = -1.0;
    for (std::size_t v = 0; v < n; ++v) {
      if (used[v]) continue;
      std::vector<double> pre = prefix_pre;
      scorer.add_region(pre, static_cast<RegionId>(v));
      const double s = scorer.probabilities_from(std::move(pre))[target_class];
      if (s > best_score) {
        best_score = s;
        best = static_cast<RegionId>(v);
      }
    }
    used[best] = true;
    scorer.add_region(prefix_pre, best);
    result.ordering.push_back(best);
    result.marginal_gains.push_back(best_score - result.prefix_scores.back());
    result.prefix_scores.push_back(best_score);
    if (best_score > config.stop_conf) {
      result.early_stopped = true;
      break;
    }
  }
  return result;
}

// Most influential region (rank 1).
inline RegionId top_region(const AttributionResult& result) {
  if (result.ordering.empty()) {
    throw ContractError("attribution ordering is empty");
  }
  return result.ordering.front();
}

// Attributes every (input, target) pair, fanning out over `threads` workers.
// Results are returned in input order.
inline std::vector<AttributionResult> attribute_batch(
    const ModelState& state, std::span<const Image* const> inputs,
    std::span<const std::size_t> targets, const RegionPartition& partition,
    const AttributionConfig& config, std::span<const double> baseline,
    std::size_t threads = 1) {
  if (inputs.size() != targets.size()) {
    throw ShapeError("attribute_batch: inputs and targets differ in length");
  }
  std::vector<AttributionResult> out(inputs.size());
  parallel_for(inputs.size(), threads, [&](std::size_t i) {
    out[i] = greedy_attribute(state, *inputs[i], partition, targets[i], config,
                              baseline);
  });
  return out;
}

}  // namespace palign

#endif  // PALIGN_ATTRIBUTION_HPP_
