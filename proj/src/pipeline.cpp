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

#include "semer/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "semer/hashing.hpp"
#include "semer/plots.hpp"

namespace semer {

namespace fs = std::filesystem;

namespace {

constexpr std::array<std::string_view, 13> kRunArtifacts = {
    "config.txt",          "data",           "pretrain",       "baseline",
    "stage1",              "stage2",         "pseudo_labels.jsonl", "pseudo_summary.json",
    "predictions.csv",     "predictions_validation.csv", "report.json", "plots",
    "manifest.json"};

void WriteText(const fs::path &file, const std::string &text) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + file.string());
  out << text;
  if (!out) throw DataError("write failed for " + file.string());
}

nlohmann::json ReadJson(const fs::path &file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("cannot read " + file.string());
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw DataError("malformed JSON in " + file.string());
  return j;
}

std::string CheckpointHash(const fs::path &checkpoint) {
  return ReadJson(checkpoint / "manifest.json").at("content_hash").get<std::string>();
}

void SaveReport(const TrainReport &report, const fs::path &file) {
  WriteText(file, report.ToJson().dump(2) + "\n");
}

std::set<std::string> ValidationIds(const DatasetSplit &split) {
  std::set<std::string> ids;
  for (const auto &r : split.validation) ids.insert(r.sample_id);
  return ids;
}

// Per-class composition of a supervised stage's training set, using the
// same duplicate rule as Oversample.
nlohmann::json ClassComposition(std::span<const FeatureRecord> gold, std::span<const FeatureRecord> pseudo,
                                const std::map<EmotionLabel, int> &targets) {
  const PerClass<int> g = ClassHistogram(gold);
  const PerClass<int> p = ClassHistogram(pseudo);
  nlohmann::json out = nlohmann::json::object();
  for (EmotionLabel l : kAllLabels) {
    const auto c = static_cast<std::size_t>(Index(l));
    const int have = g[c] + p[c];
    int dup = 0;
    if (auto it = targets.find(l); it != targets.end() && have > 0) dup = std::max(0, it->second - have);
    out[std::string(RenderLabel(l))] = {{"gold", g[c]}, {"pseudo", p[c]}, {"duplicate", dup}};
  }
  return out;
}

}  // namespace

std::string_view RenderToggle(Toggle t) {
  switch (t) {
    case Toggle::kPretrain: return "pretrain";
    case Toggle::kNee: return "nee";
    case Toggle::kPseudo: return "pseudo";
    case Toggle::kOversample: return "oversample";
  }
  return "?";
}

std::string_view AblationRowName(Toggle t) {
  switch (t) {
    case Toggle::kPretrain: return "w/o contrastive pre-training";
    case Toggle::kNee: return "w/o NEE";
    case Toggle::kPseudo: return "w/o pseudo labels";
    case Toggle::kOversample: return "w/o oversampling";
  }
  return "?";
}

std::set<Toggle> ParseToggles(std::string_view text) {
  std::set<Toggle> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    std::string_view item = text.substr(0, comma);
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (item.empty()) continue;
    bool found = false;
    for (Toggle t : kAllToggles) {
      if (RenderToggle(t) == item) {
        out.insert(t);
        found = true;
      }
    }
    if (!found)
      throw ConfigError("unknown toggle '" + std::string(item) + "' (pretrain, nee, pseudo, oversample)");
  }
  return out;
}

ExperimentConfig ApplyToggles(ExperimentConfig cfg, const std::set<Toggle> &disabled) {
  if (disabled.contains(Toggle::kNee)) cfg.nee.enabled = false;
  if (disabled.contains(Toggle::kOversample)) {
    cfg.train.oversample_step1.clear();
    cfg.train.oversample_step2.clear();
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Manifest

nlohmann::json RunManifest::ToJson() const {
  nlohmann::json stages_json = nlohmann::json::array();
  for (const auto &s : stages)
    stages_json.push_back({{"name", s.name}, {"status", s.status}, {"seconds", s.seconds}, {"detail", s.detail}});
  return {{"config_hash", config_hash}, {"disabled", disabled},   {"stages", stages_json},
          {"inputs", inputs},           {"artifacts", artifacts}, {"checkpoints", checkpoints},
          {"metrics", metrics},         {"status", status},       {"error", error}};
}

RunManifest RunManifest::FromJson(const nlohmann::json &j) {
  try {
    RunManifest m;
    m.config_hash = j.at("config_hash").get<std::string>();
    m.disabled = j.at("disabled").get<std::vector<std::string>>();
    for (const auto &s : j.at("stages"))
      m.stages.push_back({s.at("name").get<std::string>(), s.at("status").get<std::string>(),
                          s.at("seconds").get<double>(), s.at("detail").get<std::string>()});
    m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
    m.artifacts = j.at("artifacts").get<std::map<std::string, std::string>>();
    m.checkpoints = j.at("checkpoints").get<std::map<std::string, std::string>>();
    m.metrics = j.at("metrics").get<std::map<std::string, double>>();
    m.status = j.at("status").get<std::string>();
    m.error = j.at("error").get<std::string>();
    return m;
  } catch (const nlohmann::json::exception &e) {
    throw DataError(std::string("malformed run manifest: ") + e.what());
  }
}

RunLock::RunLock(const fs::path &dir) : file_(dir / ".lock") {
  fs::create_directories(dir);
  const int fd = ::open(file_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0)
    throw ConfigError("run directory " + dir.string() + " is locked by another pipeline (remove " +
                      file_.string() + " if no run is active)");
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] const auto written = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

RunLock::~RunLock() {
  std::error_code ec;
  fs::remove(file_, ec);
}

// ---------------------------------------------------------------------------
// Label CSV

void WriteLabelCsv(const LabelTable &rows, const fs::path &file) {
  std::string text = "name,discrete\n";
  for (const auto &[id, label] : rows) {
    text += id;
    text += ',';
    text += RenderLabel(label);
    text += '\n';
  }
  WriteText(file, text);
}

LabelTable ReadLabelCsv(const fs::path &file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("cannot read " + file.string());
  std::string line;
  if (!std::getline(in, line) || (line != "name,discrete" && line != "name,discrete\r"))
    throw DataError(file.string() + ": expected header 'name,discrete'");
  LabelTable rows;
  std::set<std::string> seen;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos || comma == 0)
      throw DataError(file.string() + ":" + std::to_string(line_no) + ": expected name,discrete");
    std::string id = line.substr(0, comma);
    if (!seen.insert(id).second) throw DataError(file.string() + ": duplicate name '" + id + "'");
    rows.emplace_back(std::move(id), ParseLabelOrThrow(std::string_view(line).substr(comma + 1)));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Stages

DatasetSplit PrepareData(const ExperimentConfig &cfg, const fs::path &run_dir) {
  if (cfg.data.source == "store") return LoadFeatureStore(cfg.data.dir);
  DatasetSplit split = GenerateSynthetic(cfg.ResolvedSynthetic());
  SaveFeatureStore(split, run_dir / "data");
  return split;
}

TrainReport RunPretrainStage(const ExperimentConfig &cfg, const DatasetSplit &split, const fs::path &run_dir) {
  EncoderBundle bundle = EncoderBundle::Init(cfg.ResolvedNetwork(split.dims));
  PretrainOutcome out = Pretrain(std::move(bundle), split.unlabeled, cfg.nee, cfg.loss, cfg.ResolvedTrain());
  SaveCheckpoint(out.bundle, run_dir / "pretrain" / "checkpoint");
  out.report.best_checkpoint = "pretrain/checkpoint";
  SaveReport(out.report, run_dir / "pretrain" / "report.json");
  return out.report;
}

TrainReport RunBaselineStage(const ExperimentConfig &cfg, const DatasetSplit &split, const fs::path &run_dir) {
  BaselineOutcome out = TrainBaseline(split, cfg.ResolvedNetwork(split.dims), cfg.ResolvedTrain());
  SaveCheckpoint(out.model, run_dir / "baseline" / "checkpoint");
  out.report.best_checkpoint = "baseline/checkpoint";
  SaveReport(out.report, run_dir / "baseline" / "report.json");
  return out.report;
}

TrainReport RunSupervisedStage(const ExperimentConfig &cfg, const DatasetSplit &split, const fs::path &run_dir,
                               Stage stage, std::span<const FeatureRecord> pseudo) {
  EncoderBundle bundle;
  if (stage == Stage::kOne) {
    const fs::path pretrained = run_dir / "pretrain" / "checkpoint";
    bundle = fs::exists(pretrained / "manifest.json") ? LoadEncoderBundle(pretrained)
                                                      : EncoderBundle::Init(cfg.ResolvedNetwork(split.dims));
  } else {
    const fs::path previous = run_dir / "stage1" / "checkpoint";
    if (!fs::exists(previous / "manifest.json"))
      throw DataError("stage two needs a stage-one checkpoint at " + previous.string());
    bundle = LoadEncoderBundle(previous);
  }
  const TrainConfig train = cfg.ResolvedTrain();
  SupervisedOutcome out = TrainSupervised(std::move(bundle), split, train, stage, pseudo, cfg.voting, cfg.nee,
                                          cfg.loss);
  const std::string name = stage == Stage::kOne ? "stage1" : "stage2";
  SaveCheckpoint(out.bundle, run_dir / name / "checkpoint");
  out.report.best_checkpoint = name + "/checkpoint";
  SaveReport(out.report, run_dir / name / "report.json");
  const auto &targets = stage == Stage::kOne ? train.oversample_step1 : train.oversample_step2;
  WriteText(run_dir / name / "class_distribution.json",
            ClassComposition(split.labeled_train, stage == Stage::kTwo ? pseudo : std::span<const FeatureRecord>{},
                             targets)
                    .dump(2) +
                "\n");
  return out.report;
}

std::vector<PseudoLabelRecord> RunPseudoLabelStage(const ExperimentConfig &cfg, const DatasetSplit &split,
                                                   const fs::path &main_checkpoint,
                                                   const fs::path &baseline_checkpoint, const fs::path &out_file) {
  const EncoderBundle main = LoadEncoderBundle(main_checkpoint);
  const BaselineClassifier baseline = LoadBaseline(baseline_checkpoint);
  auto records = GeneratePseudoLabels(main, baseline, split.unlabeled, cfg.voting, cfg.selftrain);
  if (out_file.has_parent_path()) fs::create_directories(out_file.parent_path());
  SavePseudoLabels(records, out_file);
  return records;
}

fs::path ResolveCheckpoint(const fs::path &path, std::string_view stage) {
  if (fs::exists(path / "manifest.json") && fs::exists(path / "config.json")) return path;
  const fs::path inner = path / std::string(stage) / "checkpoint";
  if (fs::exists(inner / "manifest.json")) return inner;
  throw DataError("no " + std::string(stage) + " checkpoint under " + path.string());
}

LabelTable Predict(const fs::path &checkpoint, std::span<const FeatureRecord> records, const VotingConfig &voting) {
  const EncoderBundle bundle = LoadEncoderBundle(checkpoint);
  LabelTable out;
  if (records.empty()) return out;
  const FeatureMatrix data = ToFeatureMatrix(records, bundle.config().d_in);
  const std::vector<int> pred = ArgMaxRows(VoteProbabilities(bundle, data, voting));
  out.reserve(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) out.emplace_back(data.ids[i], LabelFromIndex(pred[i]));
  return out;
}

std::map<std::string, EmotionLabel> GoldLabels(const DatasetSplit &split) {
  std::map<std::string, EmotionLabel> gold = split.hidden_gold;
  for (const auto *pool : {&split.labeled_train, &split.validation})
    for (const auto &r : *pool)
      if (r.label) gold[r.sample_id] = *r.label;
  return gold;
}

EvalReport Evaluate(const LabelTable &predictions, const std::map<std::string, EmotionLabel> &gold) {
  if (predictions.empty()) throw DataError("no predictions to evaluate");
  std::vector<EmotionLabel> y_true, y_pred;
  y_true.reserve(predictions.size());
  y_pred.reserve(predictions.size());
  for (const auto &[id, label] : predictions) {
    const auto it = gold.find(id);
    if (it == gold.end()) throw DataError("no gold label for predicted id '" + id + "'");
    y_true.push_back(it->second);
    y_pred.push_back(label);
  }
  return ComputeWaf(y_true, y_pred);
}

std::vector<fs::path> WritePlots(const fs::path &run_dir) {
  std::vector<fs::path> written;
  const fs::path plots = run_dir / "plots";
  for (const char *stage : {"pretrain", "baseline", "stage1", "stage2"}) {
    const fs::path report = run_dir / stage / "report.json";
    if (!fs::exists(report)) continue;
    const fs::path file = plots / (std::string("loss_") + stage + ".svg");
    WriteText(file, LossCurveSvg(TrainReportFromJson(ReadJson(report))));
    written.push_back(file);
  }
  if (fs::exists(run_dir / "report.json")) {
    const fs::path file = plots / "confusion.svg";
    WriteText(file, ConfusionSvg(EvalReportFromJson(ReadJson(run_dir / "report.json"))));
    written.push_back(file);
  }
  for (const char *stage : {"stage1", "stage2"}) {
    const fs::path dist = run_dir / stage / "class_distribution.json";
    if (!fs::exists(dist)) continue;
    const auto j = ReadJson(dist);
    PerClass<int> gold{}, pseudo{}, dup{};
    for (EmotionLabel l : kAllLabels) {
      const auto c = static_cast<std::size_t>(Index(l));
      const auto &e = j.at(std::string(RenderLabel(l)));
      gold[c] = e.at("gold").get<int>();
      pseudo[c] = e.at("pseudo").get<int>();
      dup[c] = e.at("duplicate").get<int>();
    }
    const fs::path file = plots / (std::string("class_distribution_") + stage + ".svg");
    WriteText(file, ClassDistributionSvg(gold, pseudo, dup));
    written.push_back(file);
  }
  return written;
}

// ---------------------------------------------------------------------------
// Full pipeline

namespace {

class PipelineRun {
 public:
  PipelineRun(fs::path dir, RunManifest &manifest) : dir_(std::move(dir)), manifest_(manifest) {}

  template <typename Fn>
  void Stage(const std::string &name, Fn fn) {
    const auto start = std::chrono::steady_clock::now();
    StageRecord record{name, "done", 0.0, ""};
    try {
      record.detail = fn();
    } catch (const std::exception &e) {
      record.status = "failed";
      record.seconds = Elapsed(start);
      manifest_.stages.push_back(record);
      manifest_.status = "failed";
      manifest_.error = name + ": " + e.what();
      Finalize();
      if (dynamic_cast<const ConfigError *>(&e) != nullptr || dynamic_cast<const DataError *>(&e) != nullptr ||
          dynamic_cast<const StageError *>(&e) != nullptr)
        throw;
      throw StageError(name, e.what());
    }
    record.seconds = Elapsed(start);
    manifest_.stages.push_back(record);
    Save();
  }

  void Skip(const std::string &name, const std::string &why) {
    manifest_.stages.push_back({name, "skipped", 0.0, why});
    Save();
  }

  /// Hashes every file under the run directory and writes the manifest.
  void Finalize() {
    manifest_.artifacts.clear();
    std::error_code ec;
    for (auto it = fs::recursive_directory_iterator(dir_, ec); !ec && it != fs::recursive_directory_iterator();
         it.increment(ec)) {
      if (!it->is_regular_file()) continue;
      const fs::path rel = fs::relative(it->path(), dir_);
      if (rel == "manifest.json" || rel == ".lock") continue;
      manifest_.artifacts[rel.generic_string()] = Sha256File(it->path());
    }
    Save();
  }

  void Save() const { WriteText(dir_ / "manifest.json", manifest_.ToJson().dump(2) + "\n"); }

 private:
  static double Elapsed(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }

  fs::path dir_;
  RunManifest &manifest_;
};

std::string Fixed(double v, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

RunManifest RunFullPipeline(const ExperimentConfig &cfg_in, const RunOptions &options) {
  const ExperimentConfig cfg = ApplyToggles(cfg_in, options.disabled);
  cfg.Validate();
  const fs::path dir = cfg.paths.run_dir;
  RunLock lock(dir);
  for (std::string_view name : kRunArtifacts) fs::remove_all(dir / std::string(name));

  RunManifest manifest;
  manifest.config_hash = ConfigHash(cfg);
  for (Toggle t : options.disabled) manifest.disabled.emplace_back(RenderToggle(t));
  SaveConfig(cfg, dir / "config.txt");
  PipelineRun run(dir, manifest);

  DatasetSplit split;
  run.Stage("data", [&] {
    split = PrepareData(cfg, dir);
    if (cfg.data.source == "store") {
      for (const auto &entry : fs::directory_iterator(cfg.data.dir))
        if (entry.is_regular_file()) manifest.inputs[entry.path().string()] = Sha256File(entry.path());
    }
    return std::to_string(split.labeled_train.size()) + " train, " + std::to_string(split.validation.size()) +
           " validation, " + std::to_string(split.unlabeled.size()) + " unlabeled";
  });

  if (options.disabled.contains(Toggle::kPretrain)) {
    run.Skip("pretrain", "disabled; stage one starts from random encoders");
  } else {
    run.Stage("pretrain", [&] {
      const TrainReport r = RunPretrainStage(cfg, split, dir);
      manifest.metrics["pretrain_heldout_loss"] = r.best_score;
      manifest.metrics["pretrain_epochs"] = static_cast<double>(r.epochs.size() - 1);
      manifest.checkpoints["pretrain"] = CheckpointHash(dir / "pretrain" / "checkpoint");
      return "best epoch " + std::to_string(r.best_epoch);
    });
  }

  run.Stage("baseline", [&] {
    const TrainReport r = RunBaselineStage(cfg, split, dir);
    manifest.metrics["baseline_val_waf"] = r.best_score;
    manifest.checkpoints["baseline"] = CheckpointHash(dir / "baseline" / "checkpoint");
    return "val WAF " + Fixed(r.best_score);
  });

  run.Stage("stage1", [&] {
    const TrainReport r = RunSupervisedStage(cfg, split, dir, Stage::kOne, {});
    manifest.metrics["stage1_val_waf"] = r.best_score;
    manifest.checkpoints["stage1"] = CheckpointHash(dir / "stage1" / "checkpoint");
    return "val WAF " + Fixed(r.best_score);
  });

  std::vector<FeatureRecord> accepted;
  if (options.disabled.contains(Toggle::kPseudo)) {
    run.Skip("pseudo", "disabled; stage two trains on gold labels only");
  } else {
    run.Stage("pseudo", [&] {
      const auto records = RunPseudoLabelStage(cfg, split, dir / "stage1" / "checkpoint",
                                               dir / "baseline" / "checkpoint", dir / "pseudo_labels.jsonl");
      accepted = AcceptedAsTraining(records, split.unlabeled, ValidationIds(split));
      const PerClass<int> added = PseudoLabelSummary(records);
      const PerClass<int> gold = ClassHistogram(split.labeled_train);
      nlohmann::json summary = nlohmann::json::object();
      for (EmotionLabel l : kAllLabels) {
        const auto c = static_cast<std::size_t>(Index(l));
        summary[std::string(RenderLabel(l))] = {
            {"gold", gold[c]}, {"added", added[c]},
            {"display", std::to_string(gold[c] + added[c]) + "(+" + std::to_string(added[c]) + ")"}};
      }
      int correct = 0, audited = 0;
      for (const auto &r : accepted) {
        if (auto it = split.hidden_gold.find(r.sample_id); it != split.hidden_gold.end()) {
          ++audited;
          correct += it->second == *r.label ? 1 : 0;
        }
      }
      manifest.metrics["pseudo_accepted"] = static_cast<double>(accepted.size());
      if (audited > 0) manifest.metrics["pseudo_accuracy"] = static_cast<double>(correct) / audited;
      WriteText(dir / "pseudo_summary.json",
                nlohmann::json{{"accepted", accepted.size()}, {"pool", records.size()}, {"per_class", summary}}
                        .dump(2) +
                    "\n");
      return std::to_string(accepted.size()) + " of " + std::to_string(records.size()) + " accepted";
    });
  }

  run.Stage("stage2", [&] {
    const TrainReport r = RunSupervisedStage(cfg, split, dir, Stage::kTwo, accepted);
    manifest.metrics["stage2_val_waf"] = r.best_score;
    manifest.checkpoints["stage2"] = CheckpointHash(dir / "stage2" / "checkpoint");
    return "val WAF " + Fixed(r.best_score);
  });

  // The pool's hidden labels are the test set when the store has them;
  // otherwise the validation split is scored.
  bool pool_gold = !split.unlabeled.empty();
  for (const auto &r : split.unlabeled) pool_gold = pool_gold && split.hidden_gold.contains(r.sample_id);
  LabelTable predictions;
  run.Stage("predict", [&] {
    const fs::path checkpoint = dir / "stage2" / "checkpoint";
    predictions = Predict(checkpoint, split.unlabeled, cfg.voting);
    WriteLabelCsv(predictions, dir / "predictions.csv");
    if (!pool_gold) {
      predictions = Predict(checkpoint, split.validation, cfg.voting);
      WriteLabelCsv(predictions, dir / "predictions_validation.csv");
    }
    return std::to_string(predictions.size()) + " predictions";
  });

  run.Stage("evaluate", [&] {
    const EvalReport report = Evaluate(predictions, GoldLabels(split));
    nlohmann::json j = ToJson(report);
    j["eval_set"] = pool_gold ? "unlabeled" : "validation";
    WriteText(dir / "report.json", j.dump(2) + "\n");
    manifest.metrics["final_waf"] = report.waf;
    manifest.metrics["final_accuracy"] = report.accuracy;
    manifest.metrics["eval_n"] = static_cast<double>(report.n);
    return "WAF " + Fixed(report.waf) + " on " + (pool_gold ? "unlabeled pool" : "validation");
  });

  run.Stage("plots", [&] { return std::to_string(WritePlots(dir).size()) + " plots"; });

  manifest.status = "complete";
  run.Finalize();
  return manifest;
}

// ---------------------------------------------------------------------------
// Ablation

std::string AblationTable::RenderMarkdown() const {
  std::string out = "| configuration | WAF | accuracy | seconds |\n|---|---|---|---|\n";
  for (const auto &r : rows)
    out += "| " + r.name + " | " + Fixed(r.waf) + " | " + Fixed(r.accuracy) + " | " + Fixed(r.seconds, 1) + " |\n";
  return out;
}

nlohmann::json AblationTable::ToJson() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto &r : rows) {
    std::vector<std::string> disabled;
    for (Toggle t : r.disabled) disabled.emplace_back(RenderToggle(t));
    out.push_back({{"name", r.name},
                   {"disabled", disabled},
                   {"waf", r.waf},
                   {"accuracy", r.accuracy},
                   {"seconds", r.seconds},
                   {"run_dir", r.run_dir.string()}});
  }
  return out;
}

AblationTable Ablate(const ExperimentConfig &cfg, const std::set<Toggle> &toggles, const fs::path &out_dir) {
  cfg.Validate();
  fs::create_directories(out_dir);
  ExperimentConfig base = cfg;
  if (cfg.data.source == "synthetic") {
    SaveFeatureStore(GenerateSynthetic(cfg.ResolvedSynthetic()), out_dir / "data");
    base.data.source = "store";
    base.data.dir = out_dir / "data";
  }

  std::vector<std::pair<std::string, std::set<Toggle>>> variants = {{"full", {}}};
  for (Toggle t : toggles) variants.push_back({"no_" + std::string(RenderToggle(t)), {t}});

  AblationTable table;
  for (const auto &[slug, disabled] : variants) {
    ExperimentConfig c = base;
    c.paths.run_dir = out_dir / slug;
    const auto start = std::chrono::steady_clock::now();
    const RunManifest m = RunFullPipeline(c, {disabled});
    AblationRow row;
    row.name = disabled.empty() ? "full pipeline" : std::string(AblationRowName(*disabled.begin()));
    row.disabled = disabled;
    row.waf = m.metrics.at("final_waf");
    row.accuracy = m.metrics.at("final_accuracy");
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    row.run_dir = c.paths.run_dir;
    table.rows.push_back(std::move(row));
  }
  WriteText(out_dir / "ablation.md", table.RenderMarkdown());
  WriteText(out_dir / "ablation.json", table.ToJson().dump(2) + "\n");
  return table;
}

}  // namespace semer
