// Copyright 2026 The occlunet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "commands.hpp"
#include "json.hpp"
#include "run_config.hpp"

namespace occlunet::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Run {
  int code = -1;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "occlunet");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("occlunet_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()) + "_" +
            std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  void write(const std::string& name, const std::string& text) const { std::ofstream(dir_ / name) << text; }

  fs::path dir_;
};

const std::string kFixture = std::string(OCCLUNET_FIXTURE_DIR) + "/reference_outcomes.json";

TEST(CliUsage, ExitCodes) {
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(run({"eval", "--bogus"}).code, kExitUsage);
  EXPECT_EQ(run({"--help"}).code, kExitOk);
  EXPECT_EQ(run({"eval"}).code, kExitUsage);
}

TEST(CliEval, ReferenceOutcomes) {
  const auto r = run({"eval", "--outcomes", kFixture});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("89.02"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("74.87"), std::string::npos) << r.out;
}

TEST_F(CliTest, EvalReportAndSelfCompare) {
  ASSERT_EQ(run({"eval", "--outcomes", kFixture, "--out", path("rep.json")}).code, kExitOk);
  const auto rep = json::parse(slurp(path("rep.json")));
  EXPECT_EQ(rep["all"]["tp"], 146);
  EXPECT_EQ(rep["all"]["fp"], 18);
  EXPECT_EQ(rep["all"]["fn"], 49);
  EXPECT_EQ(rep["outcomes"].size(), 214u);
  // The report itself is a valid outcome list.
  EXPECT_EQ(run({"eval", "--outcomes", path("rep.json")}).out, run({"eval", "--outcomes", kFixture}).out);
  const auto c = run({"compare", "--a", path("rep.json"), "--b", kFixture, "--out", path("cmp.json")});
  ASSERT_EQ(c.code, kExitOk) << c.err;
  EXPECT_NE(c.out.find("b=0 c=0 p=1"), std::string::npos) << c.out;
  EXPECT_EQ(json::parse(slurp(path("cmp.json")))["p_value"], 1.0);
}

TEST_F(CliTest, CompareCountsDiscordance) {
  auto rep = json::parse(slurp(kFixture));
  json flipped = rep;
  for (int i = 0; i < 3; ++i) flipped["outcomes"][i]["result"] = "FN";        // A right, B wrong
  for (int i = 0; i < 9; ++i) flipped["outcomes"][160 + i]["result"] = "TP";  // FN -> TP: B right
  write("b.json", flipped.dump());
  const auto c = run({"compare", "--a", kFixture, "--b", path("b.json")});
  ASSERT_EQ(c.code, kExitOk) << c.err;
  EXPECT_NE(c.out.find("b=3 c=9 p=0.145996"), std::string::npos) << c.out;
}

TEST_F(CliTest, MalformedInputsAreIoErrors) {
  write("bad.json", "{not json");
  EXPECT_EQ(run({"eval", "--outcomes", path("bad.json")}).code, kExitIo);
  EXPECT_EQ(run({"eval", "--outcomes", path("missing.json")}).code, kExitIo);
  EXPECT_EQ(run({"postprocess", "--detections", path("missing.jsonl")}).code, kExitIo);
  write("hdr.jsonl", "{\"format\":1,\"kind\":\"other\"}\n");
  EXPECT_EQ(run({"postprocess", "--detections", path("hdr.jsonl")}).code, kExitIo);
}

TEST_F(CliTest, ConfigRejectsUnknownKeys) {
  write("cfg.json", R"({"format":1,"model":{"variant":"occlunet2","chanels":8}})");
  const auto r = run({"synth", "--config", path("cfg.json"), "--out", path("ds")});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("model.chanels"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(path("ds")));
  write("cfg2.json", R"({"format":1,"judge":{"center_radius_px":-1}})");
  EXPECT_EQ(run({"synth", "--config", path("cfg2.json"), "--out", path("ds")}).code, kExitUsage);
}

TEST(RunConfigJson, DefaultsAndRoundTrip) {
  const auto cfg = parse_run_config(json::object());
  EXPECT_EQ(cfg.post.link.radius_px, 15.0);
  EXPECT_EQ(cfg.judge.center_radius_px, 25.0);
  EXPECT_EQ(cfg.judge.conf_floor, 0.01);
  EXPECT_EQ(cfg.optimizer.base_lr, 0.005);
  EXPECT_EQ(cfg.optimizer.momentum, 0.9);
  EXPECT_EQ(cfg.optimizer.weight_decay, 5e-4);
  EXPECT_EQ(cfg.model.window, 3u);
  EXPECT_EQ(cfg.preprocess.input_size, 640u);
  auto custom = cfg;
  custom.model.variant = ModelVariant::kOccluNet2;
  custom.multi_class = true;
  custom.synth.n_train = 3;
  custom.post.link.max_gap = 2;
  custom.finalize();
  const auto back = parse_run_config(to_json(custom));
  EXPECT_EQ(to_json(back), to_json(custom));
  EXPECT_EQ(back.model.num_classes, 5u);
  EXPECT_THROW(parse_run_config(json{{"format", 2}}), ConfigError);
  EXPECT_THROW(parse_run_config(json{{"model", {{"classes", "many"}}}}), ConfigError);
  EXPECT_THROW(parse_run_config(json{{"seed", "seven"}}), ConfigError);
}

TEST_F(CliTest, SynthDeterministicAndEmpty) {
  for (const char* name : {"a", "b"})
    ASSERT_EQ(run({"synth", "--out", path(name), "--n-train", "2", "--n-val", "1", "--n-test", "1"}).code, kExitOk);
  for (const auto& e : fs::recursive_directory_iterator(path("a")))
    if (e.is_regular_file())
      EXPECT_EQ(slurp(e.path()), slurp(path("b") / fs::relative(e.path(), path("a"))));
  ASSERT_EQ(run({"synth", "--out", path("empty"), "--n-train", "0", "--n-val", "0", "--n-test", "0"}).code, kExitOk);
  EXPECT_TRUE(json::parse(slurp(path("empty") + "/manifest.json"))["sequences"].empty());
}

TEST_F(CliTest, GradcheckExitReflectsResult) {
  auto r = run({"gradcheck", "--seeds", "2", "--only", "matmul", "--out", path("g.json")});
  EXPECT_EQ(r.code, kExitOk) << r.out;
  EXPECT_TRUE(json::parse(slurp(path("g.json")))["cases"][0]["passed"].get<bool>());
  r = run({"gradcheck", "--seeds", "2", "--only", "conv2d", "--corrupt", "conv2d"});
  EXPECT_EQ(r.code, kExitNumeric);
  EXPECT_NE(r.out.find("FAIL"), std::string::npos);
  EXPECT_EQ(run({"gradcheck", "--only", "nope"}).code, kExitUsage);
}

TEST_F(CliTest, TrainInferPostprocessEval) {
  write("cfg.json", R"({"format":1,
    "model":{"variant":"occlunet1","channels":4,"heads":2},
    "preprocess":{"input_size":64},
    "synth":{"image_size":64,"n_train":2,"n_val":1,"n_test":2,"bolus_speed":12},
    "optimizer":{"epochs":2},
    "schedule":{"warmup_epochs":1,"fixed_epochs":1}})");
  ASSERT_EQ(run({"synth", "--config", path("cfg.json"), "--out", path("ds")}).code, kExitOk);
  auto r = run({"train", "--config", path("cfg.json"), "--dataset", path("ds"), "--out", path("run"), "--jobs", "1"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(path("run/run_config.json")));
  EXPECT_TRUE(fs::exists(path("run/best/index.json")));

  const auto ckpt = path("run/best");
  r = run({"infer", "--checkpoint", ckpt, "--dataset", path("ds"), "--variant", "occlunet2"});
  EXPECT_EQ(r.code, kExitUsage);
  r = run({"infer", "--checkpoint", ckpt, "--dataset", path("ds"), "--out", path("d1.jsonl")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  ASSERT_EQ(run({"infer", "--checkpoint", ckpt, "--dataset", path("ds"), "--out", path("d2.jsonl"), "--jobs", "2"}).code,
            kExitOk);
  EXPECT_EQ(slurp(path("d1.jsonl")), slurp(path("d2.jsonl")));
  const auto header = json::parse(slurp(path("d1.jsonl")).substr(0, slurp(path("d1.jsonl")).find('\n')));
  EXPECT_EQ(header["kind"], "detections");
  EXPECT_EQ(header["sequences"].size(), 2u);
  EXPECT_EQ(header["sequences"][0]["frames"], 8);

  r = run({"postprocess", "--detections", path("d1.jsonl"), "--out", path("w.jsonl")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  r = run({"eval", "--winners", path("w.jsonl"), "--dataset", path("ds"), "--out", path("rep.json")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(json::parse(slurp(path("rep.json")))["all"]["samples"], 2);
  EXPECT_EQ(run({"eval", "--winners", path("w.jsonl"), "--dataset", path("ds"), "--split", "val"}).code, kExitIo);
}

TEST_F(CliTest, EmptyDatasetInferenceAndNoTrajectory) {
  ASSERT_EQ(run({"synth", "--out", path("ds"), "--n-train", "0", "--n-val", "0", "--n-test", "0"}).code, kExitOk);
  write("ds2_cfg.json", R"({"format":1,"model":{"channels":4,"heads":2},"preprocess":{"input_size":64},
    "synth":{"image_size":64,"n_train":1,"n_val":0,"n_test":0},"optimizer":{"epochs":2},
    "schedule":{"warmup_epochs":1,"fixed_epochs":1}})");
  ASSERT_EQ(run({"synth", "--config", path("ds2_cfg.json"), "--out", path("tiny")}).code, kExitOk);
  ASSERT_EQ(run({"train", "--config", path("ds2_cfg.json"), "--dataset", path("tiny"), "--out", path("run"),
                 "--quiet"}).code,
            kExitOk);
  const auto r = run({"infer", "--checkpoint", path("run/last"), "--dataset", path("ds"), "--out", path("d.jsonl")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto text = slurp(path("d.jsonl"));
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1);
  EXPECT_TRUE(json::parse(text)["sequences"].empty());

  write("empty.jsonl", R"({"format":1,"kind":"detections","variant":"occlunet1","input_size":64,)"
                       R"("classes":["occlusion"],"sequences":[{"id":"x","frames":3}]})"
                       "\n");
  ASSERT_EQ(run({"postprocess", "--detections", path("empty.jsonl"), "--out", path("w.jsonl")}).code, kExitOk);
  const auto w = slurp(path("w.jsonl"));
  const auto line = json::parse(w.substr(w.find('\n') + 1));
  EXPECT_EQ(line["sequence"], "x");
  EXPECT_TRUE(line["trajectory"].is_null());
}

}  // namespace
}  // namespace occlunet::cli
