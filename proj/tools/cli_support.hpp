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


#ifndef PALIGN_TOOLS_CLI_SUPPORT_HPP_
#define PALIGN_TOOLS_CLI_SUPPORT_HPP_

#include <openssl/evp.h>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>
#include "palign/palign.hpp"

namespace palign::cli {

inline constexpr const char* kToolName = "palign";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kOutputRootEnv = "PALIGN_OUT";

using Json = nlohmann::json;

// Bad invocation: unknown flags, malformed config files, conflicting values.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One-line, machine-parseable error record.
inline std::string error_line(std::string_view kind, std::string_view message) {
  Json j;
  j["error"] = kind;
  j["message"] = message;
  return j.dump();
}

// ---------------------------------------------------------------------------
// Flat key=value configuration files
// ---------------------------------------------------------------------------

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

struct ConfigEntry {
  std::string key;  // flag spelling without the leading dashes
  std::string value;
};

// Blank lines and lines starting with '#' are ignored. Underscores in keys
// are accepted as hyphens so "batch_size" and "batch-size" are equivalent.
inline std::vector<ConfigEntry> parse_config_text(std::string_view text,
                                                  const std::string& origin) {
  std::vector<ConfigEntry> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string_view raw =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(origin + ":" + std::to_string(line_no) + ": expected key = value");
    }
    ConfigEntry e{trim(std::string_view(line).substr(0, eq)),
                  trim(std::string_view(line).substr(eq + 1))};
    if (e.key.empty()) {
      throw UsageError(origin + ":" + std::to_string(line_no) + ": empty key");
    }
    for (auto& c : e.key) {
      if (c == '_') c = '-';
    }
    out.push_back(std::move(e));
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("short write to '" + path.string() + "'");
}

inline bool has_flag(const std::vector<std::string>& args, const std::string& name) {
  const std::string flag = "--" + name;
  for (const auto& a : args) {
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  }
  return false;
}

// Rewrites argv so that entries of a --config file become ordinary flags
// placed right after the subcommand. Keys already given on the command line
// are skipped, so explicit flags always win over the file.
inline std::vector<std::string> expand_config(int argc, const char* const* argv) {
  std::vector<std::string> args(argv, argv + argc);
  std::string config_path;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a file argument");
      config_path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (config_path.empty()) return rest;
  if (rest.size() < 2) throw UsageError("--config requires a subcommand");

  std::string text;
  try {
    text = read_file(config_path);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  std::vector<std::string> out(rest.begin(), rest.begin() + 2);
  for (const auto& e : parse_config_text(text, config_path)) {
    if (has_flag(rest, e.key)) continue;
    out.push_back("--" + e.key + "=" + e.value);
  }
  out.insert(out.end(), rest.begin() + 2, rest.end());
  return out;
}

inline std::filesystem::path output_root() {
  const char* env = std::getenv(kOutputRootEnv);
  return env && *env ? std::filesystem::path(env) : std::filesystem::path(".");
}

// Relative paths land under the output root; absolute ones are kept.
inline std::filesystem::path under_root(const std::string& path) {
  const std::filesystem::path p(path);
  return p.is_absolute() ? p : output_root() / p;
}

// ---------------------------------------------------------------------------
// Hashes
// ---------------------------------------------------------------------------

inline std::string digest_hex(const EVP_MD* md, std::string_view prefix,
                              std::string_view data) {
  unsigned char out[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw std::runtime_error("digest context allocation failed");
  const bool ok = EVP_DigestInit_ex(ctx, md, nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, prefix.data(), prefix.size()) == 1 &&
                  EVP_DigestUpdate(ctx, data.data(), data.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, out, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("digest computation failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    hex.push_back(kHex[out[i] >> 4]);
    hex.push_back(kHex[out[i] & 0xF]);
  }
  return hex;
}

inline std::string sha256_hex(std::string_view data) {
  return digest_hex(EVP_sha256(), {}, data);
}

// Same id `git hash-object` assigns to a file with these bytes.
inline std::string git_blob_sha1(std::string_view data) {
  const std::string header = "blob " + std::to_string(data.size()) + std::string(1, '\0');
  return digest_hex(EVP_sha1(), header, data);
}

// ---------------------------------------------------------------------------
// JSON views of configuration and results
// ---------------------------------------------------------------------------

inline Json to_json(const DatasetSpec& s) {
  return Json{{"classes", s.classes},
              {"height", s.height},
              {"width", s.width},
              {"channels", s.channels},
              {"n_train", s.n_train},
              {"n_val", s.n_val},
              {"n_flip", s.n_flip},
              {"rho_train", s.rho_train},
              {"glyph_size", s.glyph_size},
              {"glyph_jitter", s.glyph_jitter},
              {"patch_size", s.patch_size},
              {"patch_corner", to_string(s.patch_corner)},
              {"background_level", s.background_level},
              {"background_noise", s.background_noise},
              {"glyph_intensity", s.glyph_intensity},
              {"shortcut_min", s.shortcut_min},
              {"seed", s.seed}};
}

inline Json to_json(const TrainConfig& c) {
  return Json{{"mode", to_string(c.mode)},
              {"interval", c.interval},
              {"lambda1", c.lambda1},
              {"lambda2", c.lambda2},
              {"tau", c.tau},
              {"gamma", c.gamma},
              {"k", c.k},
              {"stop_conf", c.stop_conf},
              {"gate_conf", c.gate_conf},
              {"rrr_weight", c.rrr_weight},
              {"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"learning_rate", c.learning_rate},
              {"momentum", c.momentum},
              {"seed", c.seed},
              {"architecture", to_string(c.architecture)},
              {"hidden_size", c.hidden_size},
              {"activation", to_string(c.activation)},
              {"grid_rows", c.grid_rows},
              {"grid_cols", c.grid_cols},
              {"baseline", to_string(c.baseline)},
              {"center_inputs", c.center_inputs}};
}

inline Architecture architecture_from_string(const std::string& s) {
  if (s == "linear") return Architecture::kLinearSoftmax;
  if (s == "mlp") return Architecture::kMlp1h;
  throw ConfigError("unknown architecture '" + s + "'");
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "tanh") return Activation::kTanh;
  throw ConfigError("unknown activation '" + s + "'");
}

inline TrainConfig train_config_from_json(const Json& j) {
  TrainConfig c;
  c.mode = train_mode_from_string(j.at("mode").get<std::string>());
  c.interval = j.at("interval").get<std::size_t>();
  c.lambda1 = j.at("lambda1").get<double>();
  c.lambda2 = j.at("lambda2").get<double>();
  c.tau = j.at("tau").get<double>();
  c.gamma = j.at("gamma").get<double>();
  c.k = j.at("k").get<std::size_t>();
  c.stop_conf = j.at("stop_conf").get<double>();
  c.gate_conf = j.at("gate_conf").get<double>();
  c.rrr_weight = j.at("rrr_weight").get<double>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.momentum = j.at("momentum").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.architecture = architecture_from_string(j.at("architecture").get<std::string>());
  c.hidden_size = j.at("hidden_size").get<std::size_t>();
  c.activation = activation_from_string(j.at("activation").get<std::string>());
  c.grid_rows = j.at("grid_rows").get<std::size_t>();
  c.grid_cols = j.at("grid_cols").get<std::size_t>();
  c.baseline = baseline_fill_from_string(j.at("baseline").get<std::string>());
  c.center_inputs = j.at("center_inputs").get<bool>();
  return c;
}

inline Json to_json(const MetricsReport& r) {
  Json noisy = Json::array();
  for (const auto& n : r.noisy_top1) noisy.push_back({{"sigma", n.sigma}, {"top1", n.top1}});
  Json j{{"split", r.split},
         {"n", r.n},
         {"n_correct", r.n_correct},
         {"top1", r.top1},
         {"point_game", r.point_game},
         {"n_pg1", r.n_pg1},
         {"top1_given_pg1", nullptr},
         {"noisy_top1", noisy},
         {"noise_seed", r.seed}};
  if (r.top1_given_pg1) j["top1_given_pg1"] = *r.top1_given_pg1;
  return j;
}

inline Json to_json(const TrainLogRecord& rec) {
  std::size_t predicted_correct = 0;
  for (const auto& f : rec.loss.per_sample) {
    if (f.predicted == f.label) ++predicted_correct;
  }
  return Json{{"step", rec.step},
              {"epoch", rec.epoch},
              {"alignment_step", rec.alignment_step},
              {"task", rec.loss.task},
              {"deviation", rec.loss.deviation},
              {"redundancy", rec.loss.redundancy},
              {"input_gradient_penalty", rec.input_gradient_penalty},
              {"total", rec.loss.total},
              {"eligible", rec.eligible_count},
              {"off_prior", rec.off_prior_count},
              {"batch_correct", predicted_correct},
              {"wall_time", rec.wall_time}};
}

// Hash identifying a manifest: SHA-256 of its canonical (sorted-key) dump.
inline std::string manifest_hash(const Json& manifest) {
  return sha256_hex(manifest.dump());
}

}  // namespace palign::cli

#endif  // PALIGN_TOOLS_CLI_SUPPORT_HPP_
