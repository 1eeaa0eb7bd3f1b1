// Copyright 2026 The semer Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "semer/config.hpp"
#include "semer/pipeline.hpp"
#include "test_util.hpp"

namespace semer {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string Slurp(const fs::path &file) {
  std::ifstream in(file);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    cfg_ = testing::TinyExperiment(dir_ / "default_run");
    SaveConfig(cfg_, Config());
  }

  fs::path Config() const { return dir_ / "cfg.txt"; }

  // Runs the binary with `args` (already shell-quoted) and an optional
  // environment prefix such as "VAR=1".
  CliResult Cli(const std::string &args, const std::string &env = "") const {
    const fs::path out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = env + (env.empty() ? "" : " ") + "'" SEMER_CLI_PATH "' " + args + " >'" +
                            out.string() + "' 2>'" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = Slurp(out);
    r.err = Slurp(err);
    return r;
  }

  std::string WithConfig(const std::string &args) const { return "-q -c '" + Config().string() + "' " + args; }
  std::string Q(const fs::path &p) const { return "'" + (dir_ / p).string() + "'"; }

  TempDir dir_;
  ExperimentConfig cfg_;
};

TEST_F(CliTest, HelpSucceeds) {
  const CliResult r = Cli("--help");
  EXPECT_EQ(r.code, 0);
  for (const char *cmd : {"synth-data", "pretrain", "train", "pseudo-label", "predict", "evaluate", "ablate", "report"})
    EXPECT_NE(r.out.find(cmd), std::string::npos) << cmd;
}

TEST_F(CliTest, SynthDataWritesAStore) {
  const CliResult r = Cli(WithConfig("synth-data --out " + Q("store")));
  ASSERT_EQ(r.code, 0) << r.err;
  const DatasetSplit split = LoadFeatureStore(dir_ / "store");
  EXPECT_EQ(static_cast<int>(split.unlabeled.size()), cfg_.data.synthetic.unlabeled_count);
  EXPECT_EQ(split.dims, cfg_.data.synthetic.dims);
}

TEST_F(CliTest, StageCommandsChain) {
  ASSERT_EQ(Cli(WithConfig("synth-data --out " + Q("store"))).code, 0);
  const std::string data = " --data " + Q("store");
  CliResult r = Cli(WithConfig("pretrain" + data + " --out " + Q("run")));
  ASSERT_EQ(r.code, 0) << r.err;
  r = Cli(WithConfig("train --stage baseline" + data + " --out " + Q("run")));
  ASSERT_EQ(r.code, 0) << r.err;
  r = Cli(WithConfig("train --stage 1" + data + " --out " + Q("run")));
  ASSERT_EQ(r.code, 0) << r.err;
  r = Cli("pseudo-label --main " + Q("run") + " --baseline " + Q("run") + data + " --out " + Q("pseudo.jsonl") +
          " --policy sad=0.9,surprise=0.8");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("accepted per class:"), std::string::npos);
  r = Cli(WithConfig("train --stage 2 --oversample surprise=60" + data + " --out " + Q("run") + " --pseudo " +
                     Q("pseudo.jsonl")));
  ASSERT_EQ(r.code, 0) << r.err;
  r = Cli(WithConfig("predict --run " + Q("run") + data + " --out " + Q("pred.csv")));
  ASSERT_EQ(r.code, 0) << r.err;
  r = Cli(WithConfig("evaluate --pred " + Q("pred.csv") + " --gold " + Q("store") + " --out " + Q("eval.json")));
  ASSERT_EQ(r.code, 0) << r.err;
  r = Cli("report --run " + Q("run"));
  ASSERT_EQ(r.code, 0) << r.err;

  const DatasetSplit split = LoadFeatureStore(dir_ / "store");
  const LabelTable predictions = ReadLabelCsv(dir_ / "pred.csv");
  ASSERT_EQ(predictions.size(), split.unlabeled.size());
  for (std::size_t i = 0; i < predictions.size(); ++i)
    EXPECT_EQ(predictions[i].first, split.unlabeled[i].sample_id);
  std::ifstream in(dir_ / "eval.json");
  const double waf = nlohmann::json::parse(in).at("waf").get<double>();
  EXPECT_EQ(waf, Evaluate(predictions, GoldLabels(split)).waf);
  EXPECT_TRUE(fs::exists(dir_ / "run" / "plots" / "loss_stage2.svg"));
  // The stage-two override reached the training set.
  const TrainReport s2 = TrainReportFromJson(nlohmann::json::parse(Slurp(dir_ / "run" / "stage2" / "report.json")));
  EXPECT_GE(s2.train_size, 60u + split.labeled_train.size() - ClassHistogram(split.labeled_train)[5]);
}

TEST_F(CliTest, RunAndAblate) {
  CliResult r = Cli("-c '" + Config().string() + "' run --out " + Q("full"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("final WAF"), std::string::npos);
  std::ifstream in(dir_ / "full" / "manifest.json");
  EXPECT_EQ(RunManifest::FromJson(nlohmann::json::parse(in)).status, "complete");

  r = Cli("-c '" + Config().string() + "' ablate --toggles pseudo --out " + Q("abl"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("| full pipeline |"), std::string::npos);
  EXPECT_NE(r.out.find("| w/o pseudo labels |"), std::string::npos);
}

TEST_F(CliTest, EnvironmentOverridesReachTheStage) {
  ASSERT_EQ(Cli(WithConfig("synth-data --out " + Q("store"))).code, 0);
  const CliResult r =
      Cli(WithConfig("pretrain --data " + Q("store") + " --out " + Q("run")), "SEMER_CFG_TRAIN__BATCH_SIZE=16");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(LoadConfig(dir_ / "run" / "config.txt").train.batch_size, 16);
}

TEST_F(CliTest, ConfigErrorsExitTwo) {
  EXPECT_EQ(Cli(WithConfig("--set train.bogus=1 synth-data --out " + Q("s"))).code, 2);
  EXPECT_EQ(Cli(WithConfig("--set train.batch_size=1 synth-data --out " + Q("s"))).code, 2);
  EXPECT_EQ(Cli(WithConfig("ablate --toggles dropout --out " + Q("a"))).code, 2);
  EXPECT_EQ(Cli(WithConfig("run --skip dropout --out " + Q("a"))).code, 2);
  EXPECT_EQ(Cli(WithConfig("synth-data --out " + Q("s")), "SEMER_CFG_TRAIN__BOGUS=1").code, 2);
  std::ofstream(dir_ / "bad.txt") << "seed = 1\nnot.a.key = 3\n";
  const CliResult r = Cli("-c " + Q("bad.txt") + " synth-data --out " + Q("s"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("line 2"), std::string::npos);
  EXPECT_EQ(Cli("no-such-command").code, 2);
  EXPECT_EQ(Cli("pretrain --out " + Q("r")).code, 2);
  EXPECT_FALSE(fs::exists(dir_ / "s"));
}

TEST_F(CliTest, DataErrorsExitThree) {
  CliResult r = Cli(WithConfig("pretrain --data " + Q("missing") + " --out " + Q("run")));
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("data error"), std::string::npos);
  ASSERT_EQ(Cli(WithConfig("synth-data --out " + Q("store"))).code, 0);
  EXPECT_EQ(Cli(WithConfig("train --stage 2 --data " + Q("store") + " --out " + Q("run"))).code, 3);
  std::ofstream(dir_ / "pred.csv") << "name,discrete\nghost,sad\n";
  EXPECT_EQ(Cli("evaluate --pred " + Q("pred.csv") + " --gold " + Q("store") + " --out " + Q("e.json")).code, 3);
  EXPECT_EQ(Cli("report --run " + Q("nothing")).code, 3);
}

TEST_F(CliTest, StageFailuresExitFour) {
  ASSERT_EQ(Cli(WithConfig("synth-data --out " + Q("store"))).code, 0);
  const CliResult r =
      Cli(WithConfig("--set train.lr_pretrain=1e200 pretrain --data " + Q("store") + " --out " + Q("run")));
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.err.find("pretrain"), std::string::npos);

  const CliResult full = Cli(WithConfig("--set train.lr_pretrain=1e200 run --out " + Q("full")));
  EXPECT_EQ(full.code, 4);
  std::ifstream in(dir_ / "full" / "manifest.json");
  const RunManifest m = RunManifest::FromJson(nlohmann::json::parse(in));
  EXPECT_EQ(m.status, "failed");
  EXPECT_EQ(m.stages.back().name, "pretrain");
}

}  // namespace
}  // namespace semer
