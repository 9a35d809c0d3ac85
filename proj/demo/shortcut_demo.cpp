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


// Trains one plain and one prior-aligned classifier on the planted-shortcut
// benchmark and prints their metrics next to an ASCII map of where each
// model looks on a validation image.
//
//   shortcut_demo [seed]

#include <cstdio>
#include <cstdlib>
#include <string>

#include "palign/palign.hpp"

namespace {

void print_map(const palign::AttributionResult& attr, const palign::RegionPartition& part,
               const palign::OverlapProfile& phi) {
  std::string grid(part.n_regions(), '.');
  for (std::size_t r = 0; r < attr.ordering.size(); ++r) {
    grid[attr.ordering[r]] = r < 9 ? static_cast<char>('1' + r) : '+';
  }
  for (std::size_t row = 0; row < part.rows(); ++row) {
    std::printf("    ");
    for (std::size_t col = 0; col < part.cols(); ++col) {
      const std::size_t v = row * part.cols() + col;
      std::printf(" %c%c", grid[v], phi[v] >= 0.5 ? '*' : ' ');
    }
    std::printf("\n");
  }
}

}  // namespace

int main(int argc, char** argv) {
  const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 0;

  palign::DatasetSpec spec;
  spec.seed = 7;
  const palign::Dataset data = palign::generate(spec);

  palign::EvalConfig eval;
  eval.noise_sigmas = {0.2};

  const auto part = palign::make_grid_partition(spec.height, spec.width, 7, 7);
  const auto& probe = data.val.front();
  const auto phi = palign::compute_overlap(part, probe.prior);
  std::printf("validation sample 0: label %zu, shortcut patch says %zu\n", probe.label,
              probe.shortcut_class);
  std::printf("map legend: digits = attribution rank (+ for rank 10), * = region inside the prior\n\n");

  for (auto mode : {palign::TrainMode::kFinetuneOnly, palign::TrainMode::kAlign}) {
    palign::TrainConfig config;
    config.mode = mode;
    config.seed = seed;
    const palign::TrainResult run = palign::train(data, config);
    const palign::RunMetrics m = palign::evaluate_run(run.model, data, config, eval);

    std::printf("%s\n", palign::to_string(mode));
    std::printf("  val top1 %.3f  flipped top1 %.3f  point game %.3f  noisy(0.2) %.3f\n",
                m.val.top1, m.flipped.top1, m.val.point_game, m.val.noisy_top1[0].top1);
    const auto pred = palign::forward(run.model, probe.pixels);
    const auto baseline = palign::baseline_values(data, config.baseline);
    const auto attr = palign::greedy_attribute(run.model, probe.pixels, part, pred.argmax(),
                                               config.attribution(), baseline);
    std::printf("  predicts %zu (p=%.2f):\n", pred.argmax(), pred.confidence());
    print_map(attr, part, phi);
    std::printf("\n");
  }
  return 0;
}
