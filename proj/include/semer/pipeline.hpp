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

// End-to-end orchestration: each stage reads and writes a run directory so
// it can be invoked alone from the command line or chained by
// RunFullPipeline.
//
// Run directory layout:
//   config.txt              resolved configuration
//   data/                   feature store (synthetic runs only)
//   pretrain/ baseline/ stage1/ stage2/
//                           checkpoint/ + report.json per stage
//   pseudo_labels.jsonl     every pool record with its decision
//   pseudo_summary.json     accepted counts per class
//   predictions.csv         name,discrete over the unlabeled pool
//   report.json             evaluation of the final predictions
//   plots/*.svg
//   manifest.json           RunManifest

#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "semer/config.hpp"
#include "semer/metrics.hpp"

namespace semer {

/// Pipeline components that can be switched off.
enum class Toggle { kPretrain, kNee, kPseudo, kOversample };
inline constexpr std::array<Toggle, 4> kAllToggles = {Toggle::kPretrain, Toggle::kNee, Toggle::kPseudo,
                                                      Toggle::kOversample};
std::string_view RenderToggle(Toggle t);
/// Table row label, e.g. "w/o NEE".
std::string_view AblationRowName(Toggle t);
/// Comma list of toggle names; throws ConfigError on an unknown name.
std::set<Toggle> ParseToggles(std::string_view text);

/// Config with nee / oversample toggles folded in.
ExperimentConfig ApplyToggles(ExperimentConfig cfg, const std::set<Toggle> &disabled);

struct StageRecord {
  std::string name;
  std::string status;  // done | skipped | failed
  double seconds = 0.0;
  std::string detail;
};

struct RunManifest {
  std::string config_hash;
  std::vector<std::string> disabled;
  std::vector<StageRecord> stages;
  /// Input files read from outside the run directory: path -> SHA-256.
  std::map<std::string, std::string> inputs;
  /// Every file written under the run directory: relative path -> SHA-256.
  std::map<std::string, std::string> artifacts;
  /// Checkpoint content hashes by stage.
  std::map<std::string, std::string> checkpoints;
  std::map<std::string, double> metrics;
  std::string status = "running";  // running | complete | failed
  std::string error;

  nlohmann::json ToJson() const;
  static RunManifest FromJson(const nlohmann::json &j);
};

/// Exclusive ownership of a run directory through a lock file created with
/// O_EXCL. Throws ConfigError when the directory is already locked.
class RunLock {
 public:
  explicit RunLock(const std::filesystem::path &dir);
  ~RunLock();
  RunLock(const RunLock &) = delete;
  RunLock &operator=(const RunLock &) = delete;

 private:
  std::filesystem::path file_;
};

// ---------------------------------------------------------------------------
// Label CSV (name,discrete), used for predictions and gold labels.

using LabelTable = std::vector<std::pair<std::string, EmotionLabel>>;
void WriteLabelCsv(const LabelTable &rows, const std::filesystem::path &file);
LabelTable ReadLabelCsv(const std::filesystem::path &file);

// ---------------------------------------------------------------------------
// Stages. Each writes its artifacts below `run_dir`.

/// Synthesizes (into run_dir/data) or loads the configured split.
DatasetSplit PrepareData(const ExperimentConfig &cfg, const std::filesystem::path &run_dir);

TrainReport RunPretrainStage(const ExperimentConfig &cfg, const DatasetSplit &split,
                             const std::filesystem::path &run_dir);
TrainReport RunBaselineStage(const ExperimentConfig &cfg, const DatasetSplit &split,
                             const std::filesystem::path &run_dir);
/// Stage one starts from run_dir/pretrain/checkpoint when present (fresh
/// encoders otherwise); stage two from run_dir/stage1/checkpoint.
TrainReport RunSupervisedStage(const ExperimentConfig &cfg, const DatasetSplit &split,
                               const std::filesystem::path &run_dir, Stage stage,
                               std::span<const FeatureRecord> pseudo);
/// Labels the pool with the stage-one and baseline checkpoints of run_dir.
std::vector<PseudoLabelRecord> RunPseudoLabelStage(const ExperimentConfig &cfg, const DatasetSplit &split,
                                                   const std::filesystem::path &main_checkpoint,
                                                   const std::filesystem::path &baseline_checkpoint,
                                                   const std::filesystem::path &out_file);

/// Checkpoint directory of `stage` inside a run directory, or `path` itself
/// when it already is a checkpoint.
std::filesystem::path ResolveCheckpoint(const std::filesystem::path &path, std::string_view stage);

/// Predicts `records` with the bundle checkpoint.
LabelTable Predict(const std::filesystem::path &checkpoint, std::span<const FeatureRecord> records,
                   const VotingConfig &voting);
/// Every gold label a store knows: labeled, validation and hidden pool labels.
std::map<std::string, EmotionLabel> GoldLabels(const DatasetSplit &split);
/// Scores predictions against gold; every predicted id needs a gold label
/// (DataError otherwise).
EvalReport Evaluate(const LabelTable &predictions, const std::map<std::string, EmotionLabel> &gold);

/// Renders plots/*.svg from the reports present in run_dir; returns the
/// files written.
std::vector<std::filesystem::path> WritePlots(const std::filesystem::path &run_dir);

// ---------------------------------------------------------------------------
// Whole pipeline.

struct RunOptions {
  std::set<Toggle> disabled;
};

/// data -> pretrain -> baseline -> stage1 -> pseudo-label -> stage2 ->
/// predict -> evaluate -> plots in cfg.paths.run_dir. On failure the partial
/// manifest is saved and the error rethrown (ConfigError / DataError as is,
/// anything else as StageError naming the stage).
RunManifest RunFullPipeline(const ExperimentConfig &cfg, const RunOptions &options = {});

struct AblationRow {
  std::string name;
  std::set<Toggle> disabled;
  double waf = 0.0;
  double accuracy = 0.0;
  double seconds = 0.0;
  std::filesystem::path run_dir;
};

struct AblationTable {
  std::vector<AblationRow> rows;  // full pipeline first

  std::string RenderMarkdown() const;
  nlohmann::json ToJson() const;
};

/// Runs the full pipeline and one variant per toggle in `toggles`, each in
/// out_dir/<name>, sharing one feature store.
AblationTable Ablate(const ExperimentConfig &cfg, const std::set<Toggle> &toggles,
                     const std::filesystem::path &out_dir);

}  // namespace semer
