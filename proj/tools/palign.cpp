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


// palign command-line driver.
//
//   palign gen-data  --out data.bin [spec flags]
//   palign train     --data data.bin [--out-dir DIR] [training flags]
//   palign eval      --run DIR [--data data.bin] [--sigmas 0.1,0.2,0.3]
//   palign attribute --run DIR --sample N [--split val]
//   palign sweep     --data data.bin --param interval|lambda1|ablation [--values ...]
//   palign report    RUN_DIR...
//
// Relative paths resolve against $PALIGN_OUT (default: the working
// directory). Every subcommand accepts --config FILE with flat key = value
// lines; flags given on the command line take precedence.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cli_support.hpp"

namespace fs = std::filesystem;
using palign::cli::Json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

// Thrown for problems that are not the caller's fault (I/O, corrupt files).
struct RuntimeFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Flag groups
// ---------------------------------------------------------------------------

struct SpecFlags {
  palign::DatasetSpec spec;
  std::string corner = "top_right";

  void attach(CLI::App* app) {
    app->add_option("--classes", spec.classes, "number of classes")->capture_default_str();
    app->add_option("--height", spec.height, "image height")->capture_default_str();
    app->add_option("--width", spec.width, "image width")->capture_default_str();
    app->add_option("--channels", spec.channels, "image channels")->capture_default_str();
    app->add_option("--n-train", spec.n_train, "training instances")->capture_default_str();
    app->add_option("--n-val", spec.n_val, "validation instances")->capture_default_str();
    app->add_option("--n-flip", spec.n_flip, "shortcut-flipped instances")->capture_default_str();
    app->add_option("--rho", spec.rho_train, "train shortcut/label agreement")->capture_default_str();
    app->add_option("--glyph-size", spec.glyph_size, "glyph side length")->capture_default_str();
    app->add_option("--glyph-jitter", spec.glyph_jitter, "max glyph offset")->capture_default_str();
    app->add_option("--patch-size", spec.patch_size, "shortcut patch side")->capture_default_str();
    app->add_option("--corner", corner, "shortcut patch corner")->capture_default_str();
    app->add_option("--background-level", spec.background_level)->capture_default_str();
    app->add_option("--background-noise", spec.background_noise)->capture_default_str();
    app->add_option("--glyph-intensity", spec.glyph_intensity)->capture_default_str();
    app->add_option("--shortcut-min", spec.shortcut_min)->capture_default_str();
    app->add_option("--seed", spec.seed, "generator seed")->capture_default_str();
  }

  palign::DatasetSpec resolve() {
    spec.patch_corner = palign::corner_from_string(corner);
    spec.validate();
    return spec;
  }
};

struct TrainFlags {
  palign::TrainConfig config;
  std::string mode = "align";
  std::string arch = "mlp";
  std::string activation = "relu";
  std::string baseline = "mean";
  CLI::Option* lambda1_opt = nullptr;
  CLI::Option* lambda2_opt = nullptr;

  void attach(CLI::App* app) {
    auto& c = config;
    app->add_option("--mode", mode, "finetune_only | align | rrr_baseline")->capture_default_str();
    app->add_option("--interval", c.interval, "alignment interval T")->capture_default_str();
    lambda1_opt = app->add_option("--lambda1", c.lambda1, "deviation weight")->capture_default_str();
    lambda2_opt = app->add_option("--lambda2", c.lambda2, "redundancy weight")->capture_default_str();
    app->add_option("--tau", c.tau, "overlap threshold")->capture_default_str();
    app->add_option("--gamma", c.gamma, "tolerated marginal gain")->capture_default_str();
    app->add_option("--k", c.k, "max attribution length")->capture_default_str();
    app->add_option("--stop-conf", c.stop_conf, "attribution early-stop")->capture_default_str();
    app->add_option("--gate-conf", c.gate_conf, "alignment gate confidence")->capture_default_str();
    app->add_option("--rrr-weight", c.rrr_weight, "input-gradient penalty weight")->capture_default_str();
    app->add_option("--epochs", c.epochs)->capture_default_str();
    app->add_option("--batch-size", c.batch_size)->capture_default_str();
    app->add_option("--lr", c.learning_rate, "learning rate")->capture_default_str();
    app->add_option("--momentum", c.momentum)->capture_default_str();
    app->add_option("--seed", c.seed, "initialization and shuffling seed")->capture_default_str();
    app->add_option("--arch", arch, "linear | mlp")->capture_default_str();
    app->add_option("--hidden", c.hidden_size, "hidden units")->capture_default_str();
    app->add_option("--activation", activation, "relu | tanh")->capture_default_str();
    app->add_option("--grid-rows", c.grid_rows)->capture_default_str();
    app->add_option("--grid-cols", c.grid_cols)->capture_default_str();
    app->add_option("--baseline", baseline, "mean | zero fill for hidden regions")->capture_default_str();
    app->add_option("--center-inputs", c.center_inputs)->capture_default_str();
    app->add_option("--threads", c.threads, "attribution workers")->capture_default_str();
  }

  palign::TrainConfig resolve() {
    config.mode = palign::train_mode_from_string(mode);
    config.architecture = palign::cli::architecture_from_string(arch);
    config.activation = palign::cli::activation_from_string(activation);
    config.baseline = palign::baseline_fill_from_string(baseline);
    config.validate();
    if (config.mode == palign::TrainMode::kFinetuneOnly &&
        (lambda1_opt->count() > 0 || lambda2_opt->count() > 0)) {
      std::cerr << Json{{"warning", "lambda flags have no effect with mode=finetune_only"}}.dump()
                << "\n";
    }
    return config;
  }
};

struct EvalFlags {
  palign::EvalConfig config;
  std::string pg_rule = "center";

  void attach(CLI::App* app) {
    app->add_option("--sigmas", config.noise_sigmas, "Gaussian noise levels")
        ->delimiter(',')
        ->capture_default_str();
    app->add_option("--noise-seed", config.noise_seed)->capture_default_str();
    app->add_option("--pg-rule", pg_rule, "center | overlap")->capture_default_str();
    app->add_option("--pg-threshold", config.point_game.threshold,
                    "phi threshold for --pg-rule overlap")
        ->capture_default_str();
    app->add_option("--eval-threads", config.threads)->capture_default_str();
  }

  palign::EvalConfig resolve(const palign::TrainConfig& train) {
    if (pg_rule == "center") {
      config.point_game.rule = palign::PointGameRule::kCenterPixel;
    } else if (pg_rule == "overlap") {
      config.point_game.rule = palign::PointGameRule::kOverlapThreshold;
    } else {
      throw palign::cli::UsageError("unknown --pg-rule '" + pg_rule + "'");
    }
    for (double s : config.noise_sigmas) {
      if (!(s >= 0.0)) throw palign::cli::UsageError("noise sigmas must be non-negative");
    }
    config.attribution = train.attribution();
    return config;
  }

  Json to_json() const {
    return Json{{"noise_sigmas", config.noise_sigmas},
                {"noise_seed", config.noise_seed},
                {"pg_rule", pg_rule},
                {"pg_threshold", config.point_game.threshold}};
  }
};

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

struct LoadedDataset {
  palign::Dataset data;
  std::string sha256;
};

LoadedDataset load_dataset_file(const std::string& path) {
  const fs::path p = palign::cli::under_root(path);
  std::string bytes;
  try {
    bytes = palign::cli::read_file(p);
  } catch (const std::exception& e) {
    throw RuntimeFailure(e.what());
  }
  std::istringstream in(bytes);
  LoadedDataset out{palign::load_dataset(in), palign::cli::sha256_hex(bytes)};
  return out;
}

Json load_json(const fs::path& p) {
  std::string text;
  try {
    text = palign::cli::read_file(p);
  } catch (const std::exception& e) {
    throw RuntimeFailure(e.what());
  }
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw RuntimeFailure("malformed JSON in '" + p.string() + "': " + e.what());
  }
}

struct LoadedRun {
  fs::path dir;
  Json manifest;
  std::string manifest_hash;
  palign::TrainConfig config;
  palign::ModelState model;
};

LoadedRun load_run(const std::string& dir) {
  LoadedRun run;
  run.dir = palign::cli::under_root(dir);
  run.manifest = load_json(run.dir / "manifest.json");
  run.manifest_hash = palign::cli::manifest_hash(run.manifest);
  try {
    run.config = palign::cli::train_config_from_json(run.manifest.at("config"));
  } catch (const Json::exception& e) {
    throw RuntimeFailure("manifest in '" + run.dir.string() + "' is incomplete: " + e.what());
  }
  const std::string bytes = [&] {
    try {
      return palign::cli::read_file(run.dir / "model.ckpt");
    } catch (const std::exception& e) {
      throw RuntimeFailure(e.what());
    }
  }();
  if (palign::cli::git_blob_sha1(bytes) !=
      run.manifest.at("checkpoint").at("git_sha1").get<std::string>()) {
    throw RuntimeFailure("checkpoint in '" + run.dir.string() +
                         "' does not match its manifest");
  }
  std::istringstream in(bytes);
  run.model = palign::load_checkpoint(in);
  return run;
}

// Dataset referenced by a run unless overridden; warns when the bytes differ
// from the ones the run was trained on.
LoadedDataset dataset_for_run(const LoadedRun& run, const std::string& override_path) {
  const std::string path = override_path.empty()
                               ? run.manifest.at("dataset").at("path").get<std::string>()
                               : override_path;
  LoadedDataset d = load_dataset_file(path);
  if (d.sha256 != run.manifest.at("dataset").at("sha256").get<std::string>()) {
    std::cerr << Json{{"warning", "dataset checksum differs from the run manifest"},
                      {"path", path}}
                     .dump()
              << "\n";
  }
  return d;
}

std::string to_bytes(const palign::ModelState& model) {
  std::ostringstream os(std::ios::binary);
  palign::save_checkpoint(model, os);
  return os.str();
}

Json tool_json() {
  return Json{{"name", palign::cli::kToolName}, {"version", palign::cli::kToolVersion}};
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_gen_data(SpecFlags& flags, const std::string& out) {
  const palign::DatasetSpec spec = flags.resolve();
  const palign::Dataset data = palign::generate(spec);
  std::ostringstream os(std::ios::binary);
  palign::save_dataset(data, os);
  const std::string bytes = os.str();
  const fs::path path = palign::cli::under_root(out);

  Json manifest{{"kind", "dataset"},
                {"tool", tool_json()},
                {"spec", palign::cli::to_json(spec)},
                {"sha256", palign::cli::sha256_hex(bytes)},
                {"seeds", {{"data", spec.seed}}}};
  const std::string hash = palign::cli::manifest_hash(manifest);
  palign::cli::write_file(path, bytes);
  palign::cli::write_file(path.string() + ".manifest.json", manifest.dump(2) + "\n");

  std::cout << "train=" << data.train.size() << " val=" << data.val.size()
            << " shortcut_flipped=" << data.shortcut_flipped.size()
            << " classes=" << spec.classes << " rho_train=" << spec.rho_train
            << " seed=" << spec.seed << " sha256=" << manifest["sha256"].get<std::string>()
            << " manifest=" << hash << " path=" << path.string() << "\n";
  return 0;
}

int cmd_train(TrainFlags& flags, const std::string& data_path, std::string out_dir,
              std::string label) {
  const palign::TrainConfig config = flags.resolve();
  const LoadedDataset ds = load_dataset_file(data_path);
  if (label.empty()) label = palign::to_string(config.mode);
  if (out_dir.empty()) out_dir = "runs/" + label + "-seed" + std::to_string(config.seed);
  const fs::path dir = palign::cli::under_root(out_dir);

  const palign::TrainResult result = palign::train(ds.data, config);
  const std::string ckpt = to_bytes(result.model);

  Json manifest{{"kind", "train"},
                {"tool", tool_json()},
                {"label", label},
                {"config", palign::cli::to_json(config)},
                {"dataset",
                 {{"path", data_path},
                  {"sha256", ds.sha256},
                  {"spec", palign::cli::to_json(ds.data.spec)}}},
                {"checkpoint", {{"file", "model.ckpt"}, {"git_sha1", palign::cli::git_blob_sha1(ckpt)}}},
                {"seeds", {{"train", config.seed}, {"data", ds.data.spec.seed}}}};
  const std::string hash = palign::cli::manifest_hash(manifest);

  std::string log;
  for (const auto& rec : result.log) {
    Json j = palign::cli::to_json(rec);
    j["manifest"] = hash;
    log += j.dump() + "\n";
  }
  palign::cli::write_file(dir / "model.ckpt", ckpt);
  palign::cli::write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  palign::cli::write_file(dir / "train_log.jsonl", log);

  const auto& last = result.log.back();
  std::cout << "run=" << dir.string() << " label=" << label << " steps=" << last.step
            << " final_task_loss=" << format_double(last.loss.task) << " manifest=" << hash
            << "\n";
  return 0;
}

int cmd_eval(EvalFlags& flags, const std::string& run_dir, const std::string& data_path,
             const std::vector<std::string>& splits) {
  const LoadedRun run = load_run(run_dir);
  const palign::EvalConfig eval_config = flags.resolve(run.config);
  const LoadedDataset ds = dataset_for_run(run, data_path);
  const auto partition = palign::make_grid_partition(ds.data.spec.height, ds.data.spec.width,
                                                     run.config.grid_rows, run.config.grid_cols);
  const auto baseline = palign::baseline_values(ds.data, run.config.baseline);

  std::vector<palign::MetricsReport> reports;
  for (const auto& name : splits) {
    const palign::Split split = palign::split_from_string(name);
    reports.push_back(palign::evaluate(run.model, ds.data.split(split), partition, baseline,
                                       eval_config, palign::to_string(split)));
  }

  Json metrics{{"manifest", run.manifest_hash},
               {"label", run.manifest.at("label")},
               {"seed", run.config.seed},
               {"dataset_sha256", ds.sha256},
               {"eval", flags.to_json()},
               {"convention", palign::MetricsReport::kConvention},
               {"reports", Json::array()}};
  std::string csv = "manifest,label,seed," + palign::csv_header(reports.front()) + "\n";
  for (const auto& r : reports) {
    metrics["reports"].push_back(palign::cli::to_json(r));
    csv += run.manifest_hash + "," + run.manifest.at("label").get<std::string>() + "," +
           std::to_string(run.config.seed) + "," + palign::csv_row(r) + "\n";
  }
  palign::cli::write_file(run.dir / "metrics.json", metrics.dump(2) + "\n");
  palign::cli::write_file(run.dir / "metrics.csv", csv);
  std::cout << csv;
  return 0;
}

int cmd_attribute(const std::string& run_dir, const std::string& data_path,
                  const std::string& split_name, std::size_t sample,
                  std::optional<std::size_t> target) {
  const LoadedRun run = load_run(run_dir);
  const LoadedDataset ds = dataset_for_run(run, data_path);
  const auto& instances = ds.data.split(palign::split_from_string(split_name));
  if (sample >= instances.size()) {
    throw palign::cli::UsageError("--sample " + std::to_string(sample) + " out of range for " +
                                  std::to_string(instances.size()) + " instances");
  }
  const auto& inst = instances[sample];
  const auto partition = palign::make_grid_partition(ds.data.spec.height, ds.data.spec.width,
                                                     run.config.grid_rows, run.config.grid_cols);
  const auto baseline = palign::baseline_values(ds.data, run.config.baseline);
  const palign::Prediction pred = palign::forward(run.model, inst.pixels);
  const std::size_t cls = target.value_or(pred.argmax());
  const auto attr = palign::greedy_attribute(run.model, inst.pixels, partition, cls,
                                             run.config.attribution(), baseline);
  const auto phi = palign::compute_overlap(partition, inst.prior);

  Json regions = Json::array();
  for (std::size_t r = 0; r < attr.ordering.size(); ++r) {
    const auto v = attr.ordering[r];
    regions.push_back({{"rank", r + 1},
                       {"region", v},
                       {"row", partition.first_row(v)},
                       {"col", partition.first_col(v)},
                       {"gain", attr.marginal_gains[r]},
                       {"phi", phi[v]},
                       {"off_prior", palign::is_off_prior(phi[v], run.config.tau)}});
  }
  Json out{{"manifest", run.manifest_hash},
           {"split", split_name},
           {"sample", sample},
           {"label", inst.label},
           {"shortcut_class", inst.shortcut_class},
           {"predicted", pred.argmax()},
           {"confidence", pred.confidence()},
           {"target", cls},
           {"ordering", attr.ordering},
           {"prefix_scores", attr.prefix_scores},
           {"marginal_gains", attr.marginal_gains},
           {"early_stopped", attr.early_stopped},
           {"point_game", palign::point_game(attr, partition, inst.prior)},
           {"regions", regions}};
  std::cout << out.dump() << "\n";
  return 0;
}

std::string means_header(const palign::MetricMeans& m) {
  std::string h = "manifest,label,runs,val_top1,flip_top1,point_game,top1_given_pg1";
  char buf[64];
  for (const auto& n : m.noisy_top1) {
    std::snprintf(buf, sizeof(buf), ",noisy_top1_sigma%g", n.sigma);
    h += buf;
  }
  return h;
}

std::string means_row(const std::string& hash, const palign::MetricMeans& m) {
  std::string row = hash + "," + m.label + "," + std::to_string(m.runs) + "," +
                    format_double(m.val_top1) + "," + format_double(m.flip_top1) + "," +
                    format_double(m.point_game) + "," + format_double(m.top1_given_pg1);
  for (const auto& n : m.noisy_top1) row += "," + format_double(n.top1);
  return row;
}

int cmd_sweep(TrainFlags& train_flags, EvalFlags& eval_flags, const std::string& data_path,
              const std::string& param, const std::vector<double>& values,
              const std::vector<std::uint64_t>& seeds, std::string out_dir) {
  const palign::TrainConfig base = train_flags.resolve();
  const palign::EvalConfig eval_config = eval_flags.resolve(base);
  if (seeds.empty()) throw palign::cli::UsageError("--seeds must list at least one seed");
  if (param != "ablation" && values.empty()) {
    throw palign::cli::UsageError("--values is required for --param " + param);
  }
  const LoadedDataset ds = load_dataset_file(data_path);
  if (out_dir.empty()) out_dir = "sweeps/" + param;
  const fs::path dir = palign::cli::under_root(out_dir);

  Json manifest{{"kind", "sweep"},
                {"tool", tool_json()},
                {"param", param},
                {"values", values},
                {"config", palign::cli::to_json(base)},
                {"eval", eval_flags.to_json()},
                {"dataset", {{"path", data_path}, {"sha256", ds.sha256}}},
                {"seeds", {{"train", seeds}, {"data", ds.data.spec.seed}}}};
  const std::string hash = palign::cli::manifest_hash(manifest);

  auto progress = [](const palign::RunMetrics& m) {
    std::cerr << Json{{"progress", m.label}, {"seed", m.seed}, {"val_top1", m.val.top1},
                      {"point_game", m.val.point_game}}
                     .dump()
              << "\n";
  };
  const palign::ExperimentTable table =
      param == "ablation"
          ? palign::run_ablation(ds.data, base, seeds, eval_config, progress)
          : palign::run_sensitivity(ds.data, base, palign::sweep_param_from_string(param),
                                    values, seeds, eval_config, progress);

  std::string points = means_header(table.means.front()) + "\n";
  for (const auto& m : table.means) points += means_row(hash, m) + "\n";
  std::string runs = "manifest,label,seed," + palign::csv_header(table.runs.front().val) + "\n";
  for (const auto& r : table.runs) {
    for (const auto* rep : {&r.val, &r.flipped}) {
      runs += hash + "," + r.label + "," + std::to_string(r.seed) + "," +
              palign::csv_row(*rep);
      // flipped rows carry no noise columns; pad so every row has the same width
      for (std::size_t i = rep->noisy_top1.size(); i < r.val.noisy_top1.size(); ++i) runs += ",";
      runs += "\n";
    }
  }
  palign::cli::write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  palign::cli::write_file(dir / "sweep.csv", points);
  palign::cli::write_file(dir / "sweep_runs.csv", runs);
  std::cout << points;
  return 0;
}

struct Stat {
  std::vector<double> values;
  std::string mean() const {
    if (values.empty()) return "";
    double s = 0.0;
    for (double v : values) s += v;
    return format_double(s / static_cast<double>(values.size()));
  }
  std::string stddev() const {
    if (values.size() < 2) return "";
    double s = 0.0;
    for (double v : values) s += v;
    const double m = s / static_cast<double>(values.size());
    double q = 0.0;
    for (double v : values) q += (v - m) * (v - m);
    return format_double(std::sqrt(q / static_cast<double>(values.size() - 1)));
  }
};

int cmd_report(const std::vector<std::string>& dirs, const std::string& split, double sigma,
               const std::string& out) {
  struct Group {
    Stat top1, pg, cond, noisy;
    std::vector<std::string> manifests;
    std::optional<Json> config;
    bool config_mismatch = false;
  };
  std::map<std::string, Group> groups;
  std::set<std::string> dataset_checksums;

  for (const auto& d : dirs) {
    const fs::path dir = palign::cli::under_root(d);
    const Json manifest = load_json(dir / "manifest.json");
    const Json metrics = load_json(dir / "metrics.json");
    const std::string hash = palign::cli::manifest_hash(manifest);
    if (metrics.at("manifest").get<std::string>() != hash) {
      throw RuntimeFailure("metrics in '" + dir.string() + "' were produced by another manifest");
    }
    dataset_checksums.insert(metrics.at("dataset_sha256").get<std::string>());
    auto& g = groups[manifest.at("label").get<std::string>()];
    g.manifests.push_back(hash);
    Json config = manifest.at("config");
    config.erase("seed");
    if (g.config && *g.config != config) g.config_mismatch = true;
    g.config = config;

    bool found = false;
    for (const auto& r : metrics.at("reports")) {
      if (r.at("split") != split) continue;
      found = true;
      g.top1.values.push_back(r.at("top1").get<double>());
      g.pg.values.push_back(r.at("point_game").get<double>());
      if (!r.at("top1_given_pg1").is_null()) {
        g.cond.values.push_back(r.at("top1_given_pg1").get<double>());
      }
      for (const auto& n : r.at("noisy_top1")) {
        if (std::abs(n.at("sigma").get<double>() - sigma) < 1e-12) {
          g.noisy.values.push_back(n.at("top1").get<double>());
        }
      }
    }
    if (!found) {
      throw RuntimeFailure("run '" + dir.string() + "' has no metrics for split " + split);
    }
  }

  std::string banner;
  if (dataset_checksums.size() > 1) {
    banner += "# WARNING: runs were evaluated on " + std::to_string(dataset_checksums.size()) +
              " different datasets (checksums differ)\n";
  }
  for (const auto& [label, g] : groups) {
    if (g.config_mismatch) {
      banner += "# WARNING: runs labelled '" + label + "' differ in more than the seed\n";
    }
  }

  std::string table =
      "method,runs,top1_mean,top1_std,point_game_mean,point_game_std,"
      "top1_given_pg1_mean,top1_given_pg1_std,noisy_top1_mean,noisy_top1_std,manifests\n";
  for (auto& [label, g] : groups) {
    std::sort(g.manifests.begin(), g.manifests.end());
    std::string joined;
    for (const auto& m : g.manifests) joined += m + "\n";
    table += label + "," + std::to_string(g.manifests.size()) + "," + g.top1.mean() + "," +
             g.top1.stddev() + "," + g.pg.mean() + "," + g.pg.stddev() + "," + g.cond.mean() +
             "," + g.cond.stddev() + "," + g.noisy.mean() + "," + g.noisy.stddev() + "," +
             palign::cli::sha256_hex(joined) + "\n";
  }
  if (!banner.empty()) std::cerr << banner;
  std::cout << banner << table;
  if (!out.empty()) palign::cli::write_file(palign::cli::under_root(out), banner + table);
  return 0;
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Prior-aligned attribution training laboratory", "palign"};
  app.set_version_flag("--version", std::string(palign::cli::kToolVersion));
  app.require_subcommand(1);
  app.add_option("--config", "flat key = value file; flags override it");

  SpecFlags spec_flags;
  std::string gen_out = "data.bin";
  auto* gen = app.add_subcommand("gen-data", "generate the planted-shortcut dataset");
  spec_flags.attach(gen);
  gen->add_option("--out", gen_out, "dataset file")->capture_default_str();

  TrainFlags train_flags;
  std::string train_data, train_out, train_label;
  auto* train = app.add_subcommand("train", "train one model and write a run directory");
  train_flags.attach(train);
  train->add_option("--data", train_data, "dataset file")->required();
  train->add_option("--out-dir", train_out, "run directory (default runs/<label>-seed<seed>)");
  train->add_option("--label", train_label, "method name used by report (default: mode)");

  EvalFlags eval_flags;
  std::string eval_run, eval_data;
  std::vector<std::string> eval_splits = {"val", "shortcut_flipped"};
  auto* eval = app.add_subcommand("eval", "evaluate a run and write metrics.json/metrics.csv");
  eval_flags.attach(eval);
  eval->add_option("--run", eval_run, "run directory")->required();
  eval->add_option("--data", eval_data, "dataset file (default: the run's)");
  eval->add_option("--splits", eval_splits)->delimiter(',')->capture_default_str();

  std::string attr_run, attr_data, attr_split = "val";
  std::size_t attr_sample = 0;
  std::optional<std::size_t> attr_target;
  auto* attribute = app.add_subcommand("attribute", "dump the greedy attribution of one sample");
  attribute->add_option("--run", attr_run, "run directory")->required();
  attribute->add_option("--data", attr_data, "dataset file (default: the run's)");
  attribute->add_option("--split", attr_split)->capture_default_str();
  attribute->add_option("--sample", attr_sample, "index within the split")->capture_default_str();
  attribute->add_option("--target", attr_target, "class to attribute (default: predicted)");

  TrainFlags sweep_train;
  EvalFlags sweep_eval;
  std::string sweep_data, sweep_param, sweep_out;
  std::vector<double> sweep_values;
  std::vector<std::uint64_t> sweep_seeds = {0, 1, 2, 3, 4};
  auto* sweep = app.add_subcommand("sweep", "ablation grid or single-parameter sweep");
  sweep_train.attach(sweep);
  sweep_eval.attach(sweep);
  sweep->add_option("--data", sweep_data, "dataset file")->required();
  sweep->add_option("--param", sweep_param, "interval | lambda1 | ablation")
      ->required()
      ->check(CLI::IsMember({"interval", "lambda1", "ablation"}));
  sweep->add_option("--values", sweep_values, "comma-separated sweep values")->delimiter(',');
  sweep->add_option("--seeds", sweep_seeds)->delimiter(',')->capture_default_str();
  sweep->add_option("--out-dir", sweep_out, "output directory (default sweeps/<param>)");

  std::vector<std::string> report_dirs;
  std::string report_split = "val", report_out;
  double report_sigma = 0.2;
  auto* report = app.add_subcommand("report", "aggregate evaluated runs per method");
  report->add_option("runs", report_dirs, "run directories")->required();
  report->add_option("--split", report_split)->capture_default_str();
  report->add_option("--sigma", report_sigma, "noise level for the noisy column")
      ->capture_default_str();
  report->add_option("--out", report_out, "also write the table to this file");

  std::vector<std::string> args;
  try {
    args = palign::cli::expand_config(argc, argv);
  } catch (const palign::cli::UsageError& e) {
    std::cerr << palign::cli::error_line("usage", e.what()) << "\n";
    return kExitUsage;
  }
  std::vector<const char*> cargs;
  for (const auto& a : args) cargs.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    std::cout << palign::cli::kToolVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << palign::cli::error_line("usage", e.what()) << "\n";
    return kExitUsage;
  }

  try {
    if (*gen) return cmd_gen_data(spec_flags, gen_out);
    if (*train) return cmd_train(train_flags, train_data, train_out, train_label);
    if (*eval) return cmd_eval(eval_flags, eval_run, eval_data, eval_splits);
    if (*attribute) {
      return cmd_attribute(attr_run, attr_data, attr_split, attr_sample, attr_target);
    }
    if (*sweep) {
      return cmd_sweep(sweep_train, sweep_eval, sweep_data, sweep_param, sweep_values,
                       sweep_seeds, sweep_out);
    }
    if (*report) return cmd_report(report_dirs, report_split, report_sigma, report_out);
  } catch (const palign::cli::UsageError& e) {
    std::cerr << palign::cli::error_line("usage", e.what()) << "\n";
    return kExitUsage;
  } catch (const palign::ConfigError& e) {
    std::cerr << palign::cli::error_line("usage", e.what()) << "\n";
    return kExitUsage;
  } catch (const palign::Error& e) {
    std::cerr << palign::cli::error_line(e.kind(), e.what()) << "\n";
    return kExitRuntime;
  } catch (const Json::exception& e) {
    std::cerr << palign::cli::error_line("format", e.what()) << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << palign::cli::error_line("runtime", e.what()) << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
