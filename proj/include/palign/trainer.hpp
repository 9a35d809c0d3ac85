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

#ifndef PALIGN_TRAINER_HPP_
#define PALIGN_TRAINER_HPP_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "palign/alignment.hpp"
#include "palign/attribution.hpp"
#include "palign/data.hpp"
#include "palign/error.hpp"
#include "palign/eval.hpp"
#include "palign/model.hpp"
#include "palign/prior.hpp"
#include "palign/regions.hpp"

namespace palign {

enum class TrainMode { kFinetuneOnly, kAlign, kRrrBaseline };

// Value hidden regions take in masked inputs.
enum class BaselineFill { kTrainMean, kZero };

inline const char* to_string(BaselineFill b) {
  return b == BaselineFill::kTrainMean ? "mean" : "zero";
}
inline BaselineFill baseline_fill_from_string(const std::string& s) {
  if (s == "mean") return BaselineFill::kTrainMean;
  if (s == "zero") return BaselineFill::kZero;
  throw ConfigError("unknown baseline fill '" + s + "'");
}

inline const char* to_string(TrainMode m) {
  switch (m) {
    case TrainMode::kFinetuneOnly: return "finetune_only";
    case TrainMode::kAlign: return "align";
    case TrainMode::kRrrBaseline: return "rrr_baseline";
  }
  return "?";
}
inline TrainMode train_mode_from_string(const std::string& s) {
  if (s == "finetune_only" || s == "finetune") return TrainMode::kFinetuneOnly;
  if (s == "align") return TrainMode::kAlign;
  if (s == "rrr_baseline" || s == "rrr") return TrainMode::kRrrBaseline;
  throw ConfigError("unknown training mode '" + s + "'");
}

struct TrainConfig {
  // Alignment schedule and loss.
  std::size_t interval = 10;
  double lambda1 = 0.5;
  double lambda2 = 0.5;
  double tau = 0.5;
  double gamma = 0.05;
  std::size_t k = 10;
  double stop_conf = 0.8;
  double gate_conf = 0.75;
  double rrr_weight = 0.005;
  TrainMode mode = TrainMode::kAlign;

  // Optimization.
  std::size_t epochs = 25;
  std::size_t batch_size = 20;
  double learning_rate = 0.02;
  double momentum = 0.9;
  std::uint64_t seed = 0;

  // Model and region grid.
  Architecture architecture = Architecture::kMlp1h;
  std::size_t hidden_size = 32;
  Activation activation = Activation::kRelu;
  std::size_t grid_rows = 7;
  std::size_t grid_cols = 7;
  BaselineFill baseline = BaselineFill::kTrainMean;
  bool center_inputs = false;  // model subtracts the training mean from inputs

  std::size_t threads = 1;

  void validate() const {
    if (interval < 1) throw ConfigError("interval must be >= 1");
    if (!(gate_conf > 0.0 && gate_conf < 1.0)) throw ConfigError("gate_conf must lie in (0, 1)");
    if (!(stop_conf > 0.0 && stop_conf <= 1.0)) throw ConfigError("stop_conf must lie in (0, 1]");
    if (k < 1) throw ConfigError("k must be >= 1");
    if (lambda1 < 0.0 || lambda2 < 0.0 || rrr_weight < 0.0) {
      throw ConfigError("loss weights must be non-negative");
    }
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must lie in [0, 1)");
  }

  AttributionConfig attribution() const { return {k, stop_conf}; }

  ModelSpec model_spec(const DatasetSpec& data) const {
    ModelSpec s;
    s.architecture = architecture;
    s.input_size = data.shape().size();
    s.hidden_size = hidden_size;
    s.activation = activation;
    s.classes = data.classes;
    return s;
  }

  bool operator==(const TrainConfig&) const = default;
};

struct TrainLogRecord {
  std::size_t step = 0;   // global, 1-based
  std::size_t epoch = 0;  // 0-based
  bool alignment_step = false;
  LossBreakdown loss;
  double input_gradient_penalty = 0.0;
  std::size_t eligible_count = 0;
  std::size_t off_prior_count = 0;
  double wall_time = 0.0;  // seconds since training started
};

struct TrainResult {
  ModelState model;
  std::vector<TrainLogRecord> log;
};

using LogSink = std::function<void(const TrainLogRecord&)>;

inline std::vector<double> baseline_values(const Dataset& data, BaselineFill fill) {
  if (fill == BaselineFill::kZero) return std::vector<double>(data.spec.channels, 0.0);
  return channel_mean(data.train);
}

// Shared state of a training or evaluation run over one dataset.
struct AlignmentContext {
  RegionPartition partition;
  std::vector<double> baseline;         // per-channel training-set mean
  std::vector<OverlapProfile> overlap;  // one per training instance

  static AlignmentContext build(const Dataset& data, std::size_t rows, std::size_t cols,
                                BaselineFill fill) {
    AlignmentContext ctx;
    ctx.partition = make_grid_partition(data.spec.height, data.spec.width, rows, cols);
    ctx.baseline = baseline_values(data, fill);
    ctx.overlap.reserve(data.train.size());
    for (const auto& inst : data.train) {
      ctx.overlap.push_back(compute_overlap(ctx.partition, inst.prior));
    }
    return ctx;
  }
};

// Interval- and correctness-gated training. Every step accumulates the mean
// task loss. In align mode, steps with t % interval == 0 additionally attribute
// every sample that is predicted correctly with confidence > gate_conf and add
// lambda1 * deviation + lambda2 * redundancy; rrr_baseline mode adds the
// input-gradient penalty on every step.
inline TrainResult train(ModelState model, const Dataset& data,
                         const TrainConfig& config, const LogSink& sink = {}) {
  config.validate();
  if (model.input_size() != data.spec.shape().size() ||
      model.classes() != data.spec.classes) {
    throw ShapeError("model does not match the dataset dimensions");
  }
  if (data.train.size() < config.batch_size) {
    throw ConfigError("training split is smaller than one batch");
  }
  const AlignmentContext ctx =
      AlignmentContext::build(data, config.grid_rows, config.grid_cols, config.baseline);
  const auto start = std::chrono::steady_clock::now();

  std::mt19937_64 rng(config.seed ^ 0x5851F42D4C957F2Dull);
  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t steps_per_epoch = data.train.size() / config.batch_size;

  TrainResult result;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t b = 0; b < steps_per_epoch; ++b) {
      ++step;
      const std::size_t bs = config.batch_size;
      std::vector<const Image*> inputs(bs);
      std::vector<std::size_t> labels(bs);
      std::vector<std::size_t> index(bs);
      for (std::size_t j = 0; j < bs; ++j) {
        index[j] = order[b * bs + j];
        inputs[j] = &data.train[index[j]].pixels;
        labels[j] = data.train[index[j]].label;
      }

      TrainLogRecord rec;
      rec.step = step;
      rec.epoch = epoch;
      rec.loss.per_sample.resize(bs);
      for (std::size_t j = 0; j < bs; ++j) {
        const Prediction p = forward(model, *inputs[j]);
        auto& f = rec.loss.per_sample[j];
        f.label = labels[j];
        f.predicted = p.argmax();
        f.confidence = p.confidence();
      }

      try {
        rec.loss.task = task_loss(model, inputs, labels);

        if (config.mode == TrainMode::kAlign && step % config.interval == 0) {
          rec.alignment_step = true;
          std::vector<const Image*> eligible_inputs;
          std::vector<std::size_t> eligible_targets, eligible_slot;
          for (std::size_t j = 0; j < bs; ++j) {
            auto& f = rec.loss.per_sample[j];
            f.eligible = f.predicted == labels[j] && f.confidence > config.gate_conf;
            if (f.eligible) {
              eligible_inputs.push_back(inputs[j]);
              eligible_targets.push_back(labels[j]);
              eligible_slot.push_back(j);
            }
          }
          const auto attributions =
              attribute_batch(model, eligible_inputs, eligible_targets, ctx.partition,
                              config.attribution(), ctx.baseline, config.threads);
          std::vector<AlignmentSample> samples(bs);
          for (std::size_t j = 0; j < bs; ++j) {
            samples[j].x = inputs[j];
            samples[j].label = labels[j];
            samples[j].overlap = &ctx.overlap[index[j]];
          }
          for (std::size_t e = 0; e < eligible_slot.size(); ++e) {
            const std::size_t j = eligible_slot[e];
            samples[j].attribution = &attributions[e];
            auto& f = rec.loss.per_sample[j];
            f.off_prior =
                is_off_prior(ctx.overlap[index[j]][top_region(attributions[e])], config.tau);
            ++rec.eligible_count;
            if (f.off_prior) ++rec.off_prior_count;
          }
          rec.loss.deviation = deviation_loss(model, samples, ctx.partition, ctx.baseline,
                                              config.tau, config.lambda1);
          rec.loss.redundancy =
              redundancy_loss(model, samples, ctx.partition, ctx.baseline, config.tau,
                              config.gamma, config.k, config.lambda2);
        } else if (config.mode == TrainMode::kRrrBaseline) {
          std::vector<const PriorRegion*> priors(bs);
          for (std::size_t j = 0; j < bs; ++j) priors[j] = &data.train[index[j]].prior;
          rec.input_gradient_penalty = rrr_penalty(model, inputs, priors, config.rrr_weight);
        }
        rec.loss.total = total_loss(rec.loss.task, rec.loss.deviation, rec.loss.redundancy,
                                    config.lambda1, config.lambda2) +
                         rec.input_gradient_penalty;
        if (!std::isfinite(rec.loss.total)) throw TrainingError("non-finite total loss");
        sgd_step(model, config.learning_rate, config.momentum);
      } catch (const TrainingError& e) {
        throw TrainingError("step " + std::to_string(step) + ": " + e.what());
      }

      rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                          .count();
      if (sink) sink(rec);
      result.log.push_back(std::move(rec));
    }
  }
  result.model = std::move(model);
  return result;
}

inline TrainResult train(const Dataset& data, const TrainConfig& config,
                         const LogSink& sink = {}) {
  ModelState model = init_model(config.model_spec(data.spec), config.seed);
  if (config.center_inputs) model.input_shift = channel_mean(data.train);
  return train(std::move(model), data, config, sink);
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

// Metrics of one trained model: val carries the rationality and noise
// columns, shortcut_flipped the headline generalization accuracy.
struct RunMetrics {
  std::string label;
  std::uint64_t seed = 0;
  MetricsReport val;
  MetricsReport flipped;
};

inline RunMetrics evaluate_run(const ModelState& model, const Dataset& data,
                               const TrainConfig& config, const EvalConfig& eval_config) {
  const auto partition =
      make_grid_partition(data.spec.height, data.spec.width, config.grid_rows, config.grid_cols);
  const auto baseline = baseline_values(data, config.baseline);
  RunMetrics m;
  m.seed = config.seed;
  m.val = evaluate(model, data.val, partition, baseline, eval_config, "val");
  EvalConfig flip_config = eval_config;
  flip_config.noise_sigmas.clear();
  m.flipped = evaluate(model, data.shortcut_flipped, partition, baseline, flip_config,
                       "shortcut_flipped");
  return m;
}

struct AblationCell {
  bool deviation = false;
  bool redundancy = false;

  std::string name() const {
    return std::string("dev=") + (deviation ? "on" : "off") +
           ",red=" + (redundancy ? "on" : "off");
  }
};

inline TrainConfig ablation_config(const TrainConfig& base, const AblationCell& cell) {
  TrainConfig c = base;
  c.mode = TrainMode::kAlign;
  c.lambda1 = cell.deviation ? base.lambda1 : 0.0;
  c.lambda2 = cell.redundancy ? base.lambda2 : 0.0;
  return c;
}

struct MetricMeans {
  std::string label;
  std::size_t runs = 0;
  double val_top1 = 0.0;
  double flip_top1 = 0.0;
  double point_game = 0.0;
  double top1_given_pg1 = 0.0;
  std::vector<NoisyAccuracy> noisy_top1;
};

inline MetricMeans mean_of(const std::string& label, std::span<const RunMetrics> runs) {
  MetricMeans m;
  m.label = label;
  m.runs = runs.size();
  if (runs.empty()) return m;
  const double n = static_cast<double>(runs.size());
  m.noisy_top1 = runs.front().val.noisy_top1;
  for (auto& v : m.noisy_top1) v.top1 = 0.0;
  std::size_t pg_runs = 0;
  for (const auto& r : runs) {
    m.val_top1 += r.val.top1 / n;
    m.flip_top1 += r.flipped.top1 / n;
    m.point_game += r.val.point_game / n;
    if (r.val.top1_given_pg1) {
      m.top1_given_pg1 += *r.val.top1_given_pg1;
      ++pg_runs;
    }
    for (std::size_t s = 0; s < m.noisy_top1.size() && s < r.val.noisy_top1.size(); ++s) {
      m.noisy_top1[s].top1 += r.val.noisy_top1[s].top1 / n;
    }
  }
  if (pg_runs) m.top1_given_pg1 /= static_cast<double>(pg_runs);
  return m;
}

struct ExperimentTable {
  std::vector<RunMetrics> runs;   // one per (cell or sweep point, seed)
  std::vector<MetricMeans> means; // one per cell or sweep point
};

using ProgressSink = std::function<void(const RunMetrics&)>;

// Deviation on/off x redundancy on/off, every cell trained on the same seeds.
inline ExperimentTable run_ablation(const Dataset& data, const TrainConfig& base,
                                    std::span<const std::uint64_t> seeds,
                                    const EvalConfig& eval_config,
                                    const ProgressSink& progress = {}) {
  const AblationCell cells[] = {{false, false}, {true, false}, {false, true}, {true, true}};
  ExperimentTable table;
  for (const auto& cell : cells) {
    std::vector<RunMetrics> cell_runs;
    for (std::uint64_t seed : seeds) {
      TrainConfig c = ablation_config(base, cell);
      c.seed = seed;
      RunMetrics m = evaluate_run(train(data, c).model, data, c, eval_config);
      m.label = cell.name();
      if (progress) progress(m);
      cell_runs.push_back(m);
    }
    table.means.push_back(mean_of(cell.name(), cell_runs));
    table.runs.insert(table.runs.end(), cell_runs.begin(), cell_runs.end());
  }
  return table;
}

enum class SweepParam { kInterval, kLambda1 };

inline SweepParam sweep_param_from_string(const std::string& s) {
  if (s == "interval") return SweepParam::kInterval;
  if (s == "lambda1") return SweepParam::kLambda1;
  throw ConfigError("unknown sweep parameter '" + s + "'");
}

// Single-variable sweep; each point is trained in align mode on every seed.
inline ExperimentTable run_sensitivity(const Dataset& data, const TrainConfig& base,
                                       SweepParam param, std::span<const double> values,
                                       std::span<const std::uint64_t> seeds,
                                       const EvalConfig& eval_config,
                                       const ProgressSink& progress = {}) {
  ExperimentTable table;
  for (double value : values) {
    TrainConfig c = base;
    c.mode = TrainMode::kAlign;
    std::string label;
    if (param == SweepParam::kInterval) {
      if (value < 1.0 || value != static_cast<double>(static_cast<std::size_t>(value))) {
        throw ConfigError("interval values must be positive integers");
      }
      c.interval = static_cast<std::size_t>(value);
      label = "interval=" + std::to_string(c.interval);
    } else {
      if (value < 0.0) throw ConfigError("lambda1 values must be non-negative");
      c.lambda1 = value;
      char buf[64];
      std::snprintf(buf, sizeof(buf), "lambda1=%g", value);
      label = buf;
    }
    std::vector<RunMetrics> point_runs;
    for (std::uint64_t seed : seeds) {
      c.seed = seed;
      RunMetrics m = evaluate_run(train(data, c).model, data, c, eval_config);
      m.label = label;
      if (progress) progress(m);
      point_runs.push_back(m);
    }
    table.means.push_back(mean_of(label, point_runs));
    table.runs.insert(table.runs.end(), point_runs.begin(), point_runs.end());
  }
  return table;
}

}  // namespace palign

#endif  // PALIGN_TRAINER_HPP_
