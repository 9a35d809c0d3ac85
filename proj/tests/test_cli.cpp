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

#include <cstdlib>
#include <string>
#include <vector>

#include "cli_support.hpp"

namespace palign::cli {
namespace {

TEST(ConfigText, ParsesFlatPairs) {
  const auto entries = parse_config_text(
      "# comment\n\n  epochs = 3 \nbatch_size=10\nlabel = a=b\r\n", "cfg.txt");
  ASSERT_EQ(entries.size(), 3u);
  EXPECT_EQ(entries[0].key, "epochs");
  EXPECT_EQ(entries[0].value, "3");
  EXPECT_EQ(entries[1].key, "batch-size");
  EXPECT_EQ(entries[1].value, "10");
  EXPECT_EQ(entries[2].key, "label");
  EXPECT_EQ(entries[2].value, "a=b");
}

TEST(ConfigText, ReportsLineOfBadEntry) {
  try {
    parse_config_text("epochs = 3\nbroken\n", "run.cfg");
    FAIL() << "expected UsageError";
  } catch (const UsageError& e) {
    EXPECT_STREQ(e.what(), "run.cfg:2: expected key = value");
  }
  EXPECT_THROW(parse_config_text(" = 4", "x"), UsageError);
}

TEST(ExpandConfig, FileEntriesYieldToExplicitFlags) {
  const auto dir = std::filesystem::temp_directory_path() / "palign_cli_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "train.cfg").string();
  write_file(path, "epochs = 3\nseed=9\nlabel = from-file\n");
  const std::vector<std::string> argv_s = {"palign", "train", "--seed", "4",
                                           "--config",  path,   "--data=d.bin"};
  std::vector<const char*> argv;
  for (const auto& a : argv_s) argv.push_back(a.c_str());
  const auto out = expand_config(static_cast<int>(argv.size()), argv.data());
  const std::vector<std::string> expect = {"palign", "train", "--epochs=3",
                                           "--label=from-file", "--seed", "4",
                                           "--data=d.bin"};
  EXPECT_EQ(out, expect);
  std::filesystem::remove_all(dir);
}

TEST(ExpandConfig, NoConfigIsIdentityAndMissingFileIsUsage) {
  const char* argv[] = {"palign", "eval", "--run", "r"};
  EXPECT_EQ(expand_config(4, argv), (std::vector<std::string>{"palign", "eval", "--run", "r"}));
  const char* bad[] = {"palign", "eval", "--config", "/nonexistent/x.cfg"};
  EXPECT_THROW(expand_config(4, bad), UsageError);
  const char* dangling[] = {"palign", "eval", "--config"};
  EXPECT_THROW(expand_config(3, dangling), UsageError);
}

TEST(Hashes, KnownDigests) {
  EXPECT_EQ(sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(git_blob_sha1("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
  EXPECT_EQ(git_blob_sha1(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}

TEST(Manifest, HashIsKeyOrderIndependent) {
  Json a = {{"b", 1}, {"a", "x"}};
  Json b;
  b["a"] = "x";
  b["b"] = 1;
  EXPECT_EQ(manifest_hash(a), manifest_hash(b));
  b["b"] = 2;
  EXPECT_NE(manifest_hash(a), manifest_hash(b));
}

TEST(Json, TrainConfigRoundTrip) {
  TrainConfig c;
  c.mode = TrainMode::kRrrBaseline;
  c.interval = 7;
  c.lambda1 = 0.125;
  c.architecture = Architecture::kLinearSoftmax;
  c.activation = Activation::kTanh;
  c.baseline = BaselineFill::kZero;
  c.center_inputs = true;
  c.seed = 123456789012345ull;
  const Json j = to_json(c);
  TrainConfig back = train_config_from_json(Json::parse(j.dump()));
  back.threads = c.threads;
  EXPECT_EQ(back, c);
  EXPECT_THROW(architecture_from_string("cnn"), ConfigError);
}

TEST(Json, ReportKeepsMissingConditionalAccuracyAsNull) {
  MetricsReport r;
  r.split = "val";
  EXPECT_TRUE(to_json(r)["top1_given_pg1"].is_null());
  r.top1_given_pg1 = 0.5;
  EXPECT_EQ(to_json(r)["top1_given_pg1"], 0.5);
}

TEST(ErrorLine, IsSingleLineJson) {
  const std::string line = error_line("ConfigError", "bad \"value\"\nsecond");
  EXPECT_EQ(line.find('\n'), std::string::npos);
  const Json j = Json::parse(line);
  EXPECT_EQ(j["error"], "ConfigError");
  EXPECT_EQ(j["message"], "bad \"value\"\nsecond");
}

TEST(OutputRoot, FollowsEnvironment) {
  ::setenv(kOutputRootEnv, "/tmp/palign-root", 1);
  EXPECT_EQ(under_root("runs/a"), std::filesystem::path("/tmp/palign-root/runs/a"));
  EXPECT_EQ(under_root("/abs/b"), std::filesystem::path("/abs/b"));
  ::unsetenv(kOutputRootEnv);
  EXPECT_EQ(under_root("runs/a"), std::filesystem::path("./runs/a"));
}

}  // namespace
}  // namespace palign::cli
