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

// Command-line front end. Exit codes: 0 success, 2 configuration or usage
// error, 3 data error, 4 stage failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "semer/pipeline.hpp"

namespace fs = std::filesystem;
using namespace semer;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitStage = 4;

struct Globals {
  std::string config_file;
  std::vector<std::string> overrides;
  bool quiet = false;
};

ExperimentConfig ResolveConfig(const Globals &g) {
  ExperimentConfig cfg = LoadConfig(g.config_file);
  for (const auto &kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    SetConfigValue(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.Validate();
  return cfg;
}

void Say(const Globals &g, const std::string &line) {
  if (!g.quiet) std::cout << line << std::endl;
}

nlohmann::json ReadJsonFile(const fs::path &file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot read " + file.string());
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw DataError("malformed JSON in " + file.string());
  return j;
}

void WriteJsonFile(const fs::path &file, const nlohmann::json &j) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw DataError("cannot write " + file.string());
  out << j.dump(2) << '\n';
}

std::string Fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

// Wraps a subcommand body: stage failures carry the command name.
template <typename Fn>
void AsStage(const std::string &stage, Fn fn) {
  try {
    fn();
  } catch (const ConfigError &) {
    throw;
  } catch (const DataError &) {
    throw;
  } catch (const StageError &) {
    throw;
  } catch (const std::exception &e) {
    throw StageError(stage, e.what());
  }
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Semi-supervised multimodal emotion recognition pipeline"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("-c,--config", g.config_file, "Config file (key = value lines)")->check(CLI::ExistingFile);
  app.add_option("--set", g.overrides, "Override a config key: --set train.batch_size=32");
  app.add_flag("-q,--quiet", g.quiet, "Only print errors");

  // synth-data
  auto *synth = app.add_subcommand("synth-data", "Generate a synthetic feature store");
  std::string synth_out;
  synth->add_option("--out", synth_out, "Output directory")->required();

  // pretrain
  auto *pretrain = app.add_subcommand("pretrain", "Contrastive pretraining on the unlabeled pool");
  std::string data_dir, run_dir;
  pretrain->add_option("--data", data_dir, "Feature store directory")->required();
  pretrain->add_option("--out", run_dir, "Run directory")->required();

  // train
  auto *train = app.add_subcommand("train", "Supervised step one or two, or the baseline");
  std::string stage_text, pseudo_file, oversample_text;
  train->add_option("--stage", stage_text, "1, 2 or baseline")
      ->required()
      ->check(CLI::IsMember({"1", "2", "baseline"}));
  train->add_option("--data", data_dir, "Feature store directory")->required();
  train->add_option("--out", run_dir, "Run directory")->required();
  train->add_option("--pseudo", pseudo_file, "pseudo_labels.jsonl for stage 2");
  train->add_option("--oversample", oversample_text, "Targets for this stage, e.g. sad=850,worried=850");

  // pseudo-label
  auto *pseudo = app.add_subcommand("pseudo-label", "Label the unlabeled pool by two-model agreement");
  std::string main_run, baseline_run, policy_text = "default", out_file;
  pseudo->add_option("--main", main_run, "Run directory or checkpoint of the main model")->required();
  pseudo->add_option("--baseline", baseline_run, "Run directory or checkpoint of the baseline")->required();
  pseudo->add_option("--policy", policy_text, "default or class=threshold list");
  pseudo->add_option("--data", data_dir, "Feature store directory")->required();
  pseudo->add_option("--out", out_file, "Output pseudo_labels.jsonl")->required();

  // predict
  auto *predict = app.add_subcommand("predict", "Predict with the final model");
  std::string split_name = "unlabeled";
  predict->add_option("--run", run_dir, "Run directory or checkpoint")->required();
  predict->add_option("--data", data_dir, "Feature store directory")->required();
  predict->add_option("--out", out_file, "Output CSV (name,discrete)")->required();
  predict->add_option("--split", split_name, "unlabeled, validation or labeled")
      ->check(CLI::IsMember({"unlabeled", "validation", "labeled"}));

  // evaluate
  auto *evaluate = app.add_subcommand("evaluate", "Score predictions against gold labels");
  std::string pred_file;
  evaluate->add_option("--pred", pred_file, "Predictions CSV")->required();
  evaluate->add_option("--gold", data_dir, "Feature store with gold labels")->required();
  evaluate->add_option("--out", out_file, "Output report.json")->required();

  // ablate
  auto *ablate = app.add_subcommand("ablate", "Full pipeline plus one run per disabled component");
  std::string toggles_text = "pretrain,nee,pseudo,oversample", ablate_out;
  ablate->add_option("--toggles", toggles_text, "Components to ablate (pretrain,nee,pseudo,oversample)");
  ablate->add_option("--out", ablate_out, "Output directory")->required();

  // report
  auto *report = app.add_subcommand("report", "Write plots and print a run summary");
  report->add_option("--run", run_dir, "Run directory")->required();

  // run
  auto *run = app.add_subcommand("run", "Run the whole pipeline");
  std::string skip_text;
  run->add_option("--out", run_dir, "Run directory (default: paths.run_dir)");
  run->add_option("--skip", skip_text, "Components to disable (pretrain,nee,pseudo,oversample)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    const ExperimentConfig cfg = ResolveConfig(g);

    if (synth->parsed()) {
      AsStage("synth-data", [&] {
        const DatasetSplit split = GenerateSynthetic(cfg.ResolvedSynthetic());
        SaveFeatureStore(split, synth_out);
        Say(g, "wrote " + std::to_string(split.labeled_train.size()) + " train, " +
                   std::to_string(split.validation.size()) + " validation, " +
                   std::to_string(split.unlabeled.size()) + " unlabeled records to " + synth_out);
      });
    } else if (pretrain->parsed()) {
      AsStage("pretrain", [&] {
        const DatasetSplit split = LoadFeatureStore(data_dir);
        RunLock lock(run_dir);
        SaveConfig(cfg, fs::path(run_dir) / "config.txt");
        const TrainReport r = RunPretrainStage(cfg, split, run_dir);
        Say(g, "pretrain: best held-out loss " + Fixed(r.best_score) + " at epoch " +
                   std::to_string(r.best_epoch) + " (" + std::string(RenderStopReason(r.stop_reason)) + ")");
      });
    } else if (train->parsed()) {
      AsStage("train", [&] {
        const DatasetSplit split = LoadFeatureStore(data_dir);
        ExperimentConfig c = cfg;
        if (train->count("--oversample") > 0) {
          auto targets = ParseOversampleTargets(oversample_text);
          (stage_text == "2" ? c.train.oversample_step2 : c.train.oversample_step1) = std::move(targets);
        }
        RunLock lock(run_dir);
        SaveConfig(c, fs::path(run_dir) / "config.txt");
        TrainReport r;
        if (stage_text == "baseline") {
          if (!pseudo_file.empty()) throw ConfigError("--pseudo is only valid with --stage 2");
          r = RunBaselineStage(c, split, run_dir);
        } else if (stage_text == "1") {
          if (!pseudo_file.empty()) throw ConfigError("--pseudo is only valid with --stage 2");
          r = RunSupervisedStage(c, split, run_dir, Stage::kOne, {});
        } else {
          std::vector<FeatureRecord> accepted;
          if (!pseudo_file.empty()) {
            std::set<std::string> validation_ids;
            for (const auto &rec : split.validation) validation_ids.insert(rec.sample_id);
            accepted = AcceptedAsTraining(LoadPseudoLabels(pseudo_file), split.unlabeled, validation_ids);
          }
          r = RunSupervisedStage(c, split, run_dir, Stage::kTwo, accepted);
        }
        Say(g, r.stage + ": best validation WAF " + Fixed(r.best_score) + " at epoch " +
                   std::to_string(r.best_epoch) + " (" + std::string(RenderStopReason(r.stop_reason)) + ")");
      });
    } else if (pseudo->parsed()) {
      AsStage("pseudo-label", [&] {
        const DatasetSplit split = LoadFeatureStore(data_dir);
        ExperimentConfig c = cfg;
        c.selftrain = ParseThresholdPolicy(policy_text);
        const auto records = RunPseudoLabelStage(c, split, ResolveCheckpoint(main_run, "stage1"),
                                                 ResolveCheckpoint(baseline_run, "baseline"), out_file);
        const PerClass<int> added = PseudoLabelSummary(records);
        std::string line = "accepted per class:";
        int total = 0;
        for (EmotionLabel l : kAllLabels) {
          const int n = added[static_cast<std::size_t>(Index(l))];
          total += n;
          line += " " + std::string(RenderLabel(l)) + "=" + std::to_string(n);
        }
        Say(g, line);
        Say(g, std::to_string(total) + " of " + std::to_string(records.size()) + " accepted; wrote " + out_file);
      });
    } else if (predict->parsed()) {
      AsStage("predict", [&] {
        const DatasetSplit split = LoadFeatureStore(data_dir);
        const auto &records = split_name == "unlabeled"    ? split.unlabeled
                              : split_name == "validation" ? split.validation
                                                           : split.labeled_train;
        const LabelTable table = Predict(ResolveCheckpoint(run_dir, "stage2"), records, cfg.voting);
        WriteLabelCsv(table, out_file);
        Say(g, "wrote " + std::to_string(table.size()) + " predictions to " + out_file);
      });
    } else if (evaluate->parsed()) {
      AsStage("evaluate", [&] {
        const DatasetSplit split = LoadFeatureStore(data_dir);
        const EvalReport r = Evaluate(ReadLabelCsv(pred_file), GoldLabels(split));
        WriteJsonFile(out_file, ToJson(r));
        Say(g, "WAF " + Fixed(r.waf) + ", accuracy " + Fixed(r.accuracy) + " over " + std::to_string(r.n) +
                   " samples; wrote " + out_file);
      });
    } else if (ablate->parsed()) {
      AsStage("ablate", [&] {
        const AblationTable table = Ablate(cfg, ParseToggles(toggles_text), ablate_out);
        std::cout << table.RenderMarkdown();
      });
    } else if (report->parsed()) {
      AsStage("report", [&] {
        if (!fs::is_directory(run_dir)) throw DataError("no run directory at " + run_dir);
        for (const auto &file : WritePlots(run_dir)) Say(g, "wrote " + file.string());
        const fs::path manifest = fs::path(run_dir) / "manifest.json";
        if (fs::exists(manifest)) {
          const RunManifest m = RunManifest::FromJson(ReadJsonFile(manifest));
          Say(g, "status: " + m.status + (m.error.empty() ? "" : " (" + m.error + ")"));
          for (const auto &s : m.stages) Say(g, "  " + s.name + ": " + s.status + "  " + s.detail);
          for (const auto &[k, v] : m.metrics) Say(g, "  " + k + " = " + Fixed(v));
        }
        const fs::path summary = fs::path(run_dir) / "pseudo_summary.json";
        if (fs::exists(summary)) {
          const auto j = ReadJsonFile(summary);
          Say(g, "training set after pseudo-labeling:");
          for (EmotionLabel l : kAllLabels) {
            const std::string name(RenderLabel(l));
            Say(g, "  " + name + " " + j.at("per_class").at(name).at("display").get<std::string>());
          }
        }
      });
    } else if (run->parsed()) {
      ExperimentConfig c = cfg;
      if (!run_dir.empty()) c.paths.run_dir = run_dir;
      RunOptions options;
      options.disabled = ParseToggles(skip_text);
      const RunManifest m = RunFullPipeline(c, options);
      for (const auto &s : m.stages) Say(g, s.name + ": " + s.status + "  " + s.detail);
      Say(g, "final WAF " + Fixed(m.metrics.at("final_waf")) + "; run directory " + c.paths.run_dir.string());
    }
    return kExitOk;
  } catch (const ConfigError &e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError &e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const StageError &e) {
    std::cerr << "stage failure: " << e.what() << '\n';
    return kExitStage;
  } catch (const std::exception &e) {
    std::cerr << "stage failure: " << e.what() << '\n';
    return kExitStage;
  }
}
