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

#ifndef PALIGN_ALIGNMENT_HPP_
#define PALIGN_ALIGNMENT_HPP_

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "palign/attribution.hpp"
#include "palign/error.hpp"
#include "palign/image.hpp"
#include "palign/model.hpp"
#include "palign/prior.hpp"
#include "palign/regions.hpp"

namespace palign {

// One batch element as seen by the alignment losses. `attribution` is null
// for samples that did not pass the eligibility gate; the ranking and the
// overlap profile are treated as constants by every gradient below.
struct AlignmentSample {
  const Image* x = nullptr;
  std::size_t label = 0;
  const AttributionResult* attribution = nullptr;
  const OverlapProfile* overlap = nullptr;
};

struct SampleFlags {
  bool eligible = false;
  bool off_prior = false;  // top-ranked region has phi < tau
  std::size_t label = 0;
  std::size_t predicted = 0;
  double confidence = 0.0;
};

struct LossBreakdown {
  double task = 0.0;
  double deviation = 0.0;
  double redundancy = 0.0;
  double total = 0.0;
  std::vector<SampleFlags> per_sample;
};

inline double total_loss(double task, double deviation, double redundancy,
                         double lambda1, double lambda2) {
  if (lambda1 < 0.0 || lambda2 < 0.0) {
    throw ConfigError("loss weights must be non-negative");
  }
  return task + lambda1 * deviation + lambda2 * redundancy;
}

// Mean softmax cross-entropy over the batch. When `accumulate` is set the
// gradient of the mean is added to the model's accumulators.
inline double task_loss(ModelState& state, std::span<const Image* const> inputs,
                        std::span<const std::size_t> labels,
                        bool accumulate = true) {
  if (inputs.size() != labels.size() || inputs.empty()) {
    throw ShapeError("task_loss: need a non-empty batch with one label per input");
  }
  const double scale = 1.0 / static_cast<double>(inputs.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    check_target(state, labels[i]);
    const auto x = inputs[i]->flat();
    const ForwardTrace trace = forward_trace(state, x);
    const auto& p = trace.probabilities;
    loss -= std::log(p[labels[i]]);
    if (accumulate) {
      std::vector<double> up(p.size());
      for (std::size_t c = 0; c < p.size(); ++c) {
        up[c] = scale * (p[c] - (c == labels[i] ? 1.0 : 0.0));
      }
      backward_params(state, trace, up);
    }
  }
  loss *= scale;
  if (!std::isfinite(loss)) throw TrainingError("non-finite task loss");
  return loss;
}

namespace detail {

// Evaluates F on the masked input and, if scale != 0, adds scale * dF/dtheta.
inline double masked_score(ModelState& state, const Image& x,
                           const RegionPartition& partition,
                           std::span<const RegionId> members, std::size_t target,
                           std::span<const double> baseline, double scale) {
  const Image masked =
      apply_mask(x, partition, SubsetMask(partition.n_regions(), members), baseline);
  const ForwardTrace trace = forward_trace(state, masked.flat());
  const auto& p = trace.probabilities;
  const double f = p[target];
  if (scale != 0.0) {
    // d p_t / d z_c = p_t (1[c = t] - p_c)
    std::vector<double> up(p.size());
    for (std::size_t c = 0; c < p.size(); ++c) {
      up[c] = scale * f * ((c == target ? 1.0 : 0.0) - p[c]);
    }
    backward_params(state, trace, up);
  }
  return f;
}

inline void check_sample(const AlignmentSample& s, const RegionPartition& partition) {
  if (s.attribution->ordering.empty()) {
    throw ContractError("eligible sample has an empty attribution");
  }
  if (s.overlap == nullptr || s.overlap->size() != partition.n_regions()) {
    throw ShapeError("overlap profile missing or sized for a different partition");
  }
}

}  // namespace detail

// Sum over eligible samples of F({top region}) for samples whose top region
// is off-prior. F is recomputed as a fresh masked forward so gradients flow
// through the model only; grad_scale multiplies the accumulated gradient and
// 0 disables accumulation.
inline double deviation_loss(ModelState& state,
                             std::span<const AlignmentSample> batch,
                             const RegionPartition& partition,
                             std::span<const double> baseline, double tau,
                             double grad_scale = 1.0) {
  double loss = 0.0;
  for (const auto& s : batch) {
    if (s.attribution == nullptr) continue;
    detail::check_sample(s, partition);
    const RegionId top = s.attribution->ordering.front();
    if (!is_off_prior((*s.overlap)[top], tau)) continue;
    const RegionId single[] = {top};
    loss += detail::masked_score(state, *s.x, partition, single,
                                 s.attribution->target_class, baseline, grad_scale);
  }
  return loss;
}

// Sum over eligible samples and ranks r >= 2 of ReLU(gain_r - gamma) for
// off-prior regions, where gain_r = F(prefix_r) - F(prefix_{r-1}) is
// recomputed from two masked forwards. Only ranks actually selected by the
// attribution (at most k) contribute.
inline double redundancy_loss(ModelState& state,
                              std::span<const AlignmentSample> batch,
                              const RegionPartition& partition,
                              std::span<const double> baseline, double tau,
                              double gamma, std::size_t k,
                              double grad_scale = 1.0) {
  double loss = 0.0;
  for (const auto& s : batch) {
    if (s.attribution == nullptr) continue;
    detail::check_sample(s, partition);
    const auto& order = s.attribution->ordering;
    const std::size_t target = s.attribution->target_class;
    const std::size_t ranks = std::min(order.size(), k);
    for (std::size_t r = 2; r <= ranks; ++r) {
      if (!is_off_prior((*s.overlap)[order[r - 1]], tau)) continue;
      const std::span<const RegionId> upto(order.data(), r);
      const std::span<const RegionId> before(order.data(), r - 1);
      const double f_r =
          detail::masked_score(state, *s.x, partition, upto, target, baseline, 0.0);
      const double f_prev =
          detail::masked_score(state, *s.x, partition, before, target, baseline, 0.0);
      const double excess = (f_r - f_prev) - gamma;
      if (excess <= 0.0) continue;
      loss += excess;
      if (grad_scale != 0.0) {
        detail::masked_score(state, *s.x, partition, upto, target, baseline,
                             grad_scale);
        detail::masked_score(state, *s.x, partition, before, target, baseline,
                             -grad_scale);
      }
    }
  }
  return loss;
}

// Input-gradient penalty outside the prior:
// weight * sum_i sum_{pixels not in H_i} (d sum_c log p_c / dx)^2.
inline double rrr_penalty(ModelState& state, std::span<const Image* const> inputs,
                          std::span<const PriorRegion* const> priors, double weight,
                          bool accumulate = true) {
  if (inputs.size() != priors.size()) {
    throw ShapeError("rrr_penalty: one prior per input required");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Image& x = *inputs[i];
    const PriorRegion& prior = *priors[i];
    if (prior.height() != x.shape.height || prior.width() != x.shape.width) {
      throw ShapeError("rrr_penalty: prior does not match image");
    }
    std::vector<double> mask(x.shape.size());
    for (std::size_t p = 0; p < x.shape.pixel_count(); ++p) {
      const double m = prior.inside(p) ? 0.0 : 1.0;
      for (std::size_t ch = 0; ch < x.shape.channels; ++ch) {
        mask[p * x.shape.channels + ch] = m;
      }
    }
    if (accumulate) {
      total += accumulate_input_gradient_penalty(state, x.flat(), mask,
                                                 ScalarHead::sum_log_probs(), weight);
    } else {
      const auto g = input_gradient(state, x.flat(), ScalarHead::sum_log_probs());
      double s = 0.0;
      for (std::size_t j = 0; j < g.size(); ++j) s += mask[j] * g[j] * g[j];
      total += weight * s;
    }
  }
  return total;
}

}  // namespace palign

#endif  // PALIGN_ALIGNMENT_HPP_
