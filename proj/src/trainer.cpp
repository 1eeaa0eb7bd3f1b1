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

#include "semer/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "semer/metrics.hpp"

namespace semer {

namespace {

constexpr Eigen::Index kEvalChunk = 1024;

std::vector<Eigen::Index> Iota(Eigen::Index n) {
  std::vector<Eigen::Index> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), Eigen::Index{0});
  return v;
}

void Shuffle(std::vector<Eigen::Index> &v, Rng &rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.UniformIndex(i)]);
}

/// Consecutive mini-batches of `order`. A trailing batch smaller than
/// `min_size` is folded into the previous one.
std::vector<std::span<const Eigen::Index>> Batches(const std::vector<Eigen::Index> &order,
                                                   int batch_size, int min_size) {
  std::vector<std::span<const Eigen::Index>> out;
  const std::size_t n = order.size();
  const auto b = static_cast<std::size_t>(batch_size);
  for (std::size_t start = 0; start < n; start += b) {
    const std::size_t len = std::min(b, n - start);
    if (len < static_cast<std::size_t>(min_size) && !out.empty()) {
      const auto &prev = out.back();
      out.back() = std::span<const Eigen::Index>(prev.data(), prev.size() + len);
    } else if (len >= static_cast<std::size_t>(min_size)) {
      out.emplace_back(order.data() + start, len);
    }
  }
  return out;
}

FeatureMatrix Rows(const FeatureMatrix &data, Eigen::Index begin, Eigen::Index count) {
  FeatureMatrix out;
  for (int m = 0; m < kNumModalities; ++m)
    out.x[static_cast<std::size_t>(m)] = data.x[static_cast<std::size_t>(m)].middleRows(begin, count);
  return out;
}

/// A non-finite epoch loss means the optimizer diverged; later epochs
/// cannot recover, so the stage aborts.
void CheckFinite(double loss, int epoch) {
  if (!std::isfinite(loss))
    throw Error("training diverged: non-finite loss at epoch " + std::to_string(epoch));
}

double ScoreWaf(const Matrix &probs, const FeatureMatrix &val) {
  return ComputeWaf(std::span<const int>(val.labels), ArgMaxRows(probs)).waf;
}

/// Shared epoch loop for supervised training with WAF-based model selection.
/// `step` runs one update on a batch and returns its loss; `score` evaluates
/// the current model on the validation set.
template <typename Model, typename StepFn, typename ScoreFn>
TrainReport SupervisedLoop(Model &model, Eigen::Index train_size, const TrainConfig &cfg,
                           double lr, int min_batch, Rng &rng, Adam &opt, StepFn step,
                           ScoreFn score) {
  TrainReport report;
  report.score_name = "val_waf";
  report.train_size = static_cast<std::size_t>(train_size);
  Model best = model;
  report.best_score = score(model);
  report.best_epoch = 0;
  report.epochs.push_back({0, 0.0, report.best_score});
  report.stop_reason = StopReason::kMaxEpochs;

  auto order = Iota(train_size);
  int since_best = 0;
  for (int epoch = 1; epoch <= cfg.step_epochs; ++epoch) {
    Shuffle(order, rng);
    double loss_sum = 0.0;
    const auto batches = Batches(order, cfg.batch_size, min_batch);
    for (const auto &rows : batches) {
      loss_sum += step(rows);
      opt.Step(lr);
      report.step_lrs.push_back(lr);
    }
    CheckFinite(loss_sum, epoch);
    const double waf = score(model);
    report.epochs.push_back({epoch, batches.empty() ? 0.0 : loss_sum / batches.size(), waf});
    if (waf > report.best_score) {
      report.best_score = waf;
      report.best_epoch = epoch;
      best = model;
      since_best = 0;
    } else if (++since_best > cfg.patience) {
      report.stop_reason = StopReason::kEarlyStop;
      break;
    }
  }
  model = std::move(best);
  return report;
}

ContrastiveConfig SupervisedContrastive(const ContrastiveConfig &loss, const TrainConfig &cfg) {
  ContrastiveConfig c = loss;
  c.lambda_intra = cfg.supervised_lambda_intra;
  c.lambda_imc = cfg.supervised_lambda_imc;
  return c;
}

}  // namespace

void TrainConfig::Validate() const {
  if (!(lr_pretrain > 0.0 && lr_step1 > 0.0 && lr_step2 > 0.0))
    throw ConfigError("learning rates must be positive");
  if (lr_step2 > lr_step1) throw ConfigError("train.lr_step2 must not exceed train.lr_step1");
  if (batch_size < 2) throw ConfigError("train.batch_size must be >= 2");
  if (max_pretrain_epochs < 0 || step_epochs < 0 || patience < 0)
    throw ConfigError("epoch counts and patience must be non-negative");
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
    throw ConfigError("train.holdout_fraction must lie in (0, 1)");
  if (supervised_lambda_intra < 0.0 || supervised_lambda_imc < 0.0)
    throw ConfigError("supervised contrastive weights must be non-negative");
  for (const auto *targets : {&oversample_step1, &oversample_step2})
    for (const auto &[label, n] : *targets)
      if (n < 0) throw ConfigError("oversample targets must be non-negative");
}

std::string_view RenderStopReason(StopReason reason) {
  return reason == StopReason::kEarlyStop ? "early-stop" : "max-epochs";
}

nlohmann::json TrainReport::ToJson() const {
  nlohmann::json epochs_json = nlohmann::json::array();
  for (const auto &e : epochs)
    epochs_json.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {score_name, e.score}});
  nlohmann::json j = {{"stage", stage},
                      {"score_name", score_name},
                      {"epochs", epochs_json},
                      {"best_epoch", best_epoch},
                      {"best_score", best_score},
                      {"best_checkpoint", best_checkpoint},
                      {"stop_reason", std::string(RenderStopReason(stop_reason))},
                      {"train_size", train_size},
                      {"update_steps", step_lrs.size()}};
  if (!step_lrs.empty()) {
    j["lr_min"] = *std::min_element(step_lrs.begin(), step_lrs.end());
    j["lr_max"] = *std::max_element(step_lrs.begin(), step_lrs.end());
  }
  return j;
}

TrainReport TrainReportFromJson(const nlohmann::json &j) {
  try {
    TrainReport r;
    r.stage = j.at("stage").get<std::string>();
    r.score_name = j.at("score_name").get<std::string>();
    for (const auto &e : j.at("epochs"))
      r.epochs.push_back({e.at("epoch").get<int>(), e.at("train_loss").get<double>(),
                          e.at(r.score_name).get<double>()});
    r.best_epoch = j.at("best_epoch").get<int>();
    r.best_score = j.at("best_score").get<double>();
    r.best_checkpoint = j.at("best_checkpoint").get<std::string>();
    const auto stop = j.at("stop_reason").get<std::string>();
    r.stop_reason = stop == "early-stop" ? StopReason::kEarlyStop : StopReason::kMaxEpochs;
    r.train_size = j.at("train_size").get<std::size_t>();
    return r;
  } catch (const nlohmann::json::exception &e) {
    throw DataError(std::string("malformed training report: ") + e.what());
  }
}

PerModality<Matrix> NoiseBatch(const PerModality<Matrix> &x, const NoiseSchedule &schedule,
                               bool random_step, Rng &rng) {
  PerModality<Matrix> out;
  const Eigen::Index n = x[0].rows();
  std::vector<double> alpha(static_cast<std::size_t>(n), schedule.TerminalAlphaBar());
  if (random_step) {
    for (auto &a : alpha)
      a = schedule.AlphaBar(1 + static_cast<int>(rng.UniformIndex(static_cast<std::uint64_t>(schedule.steps()))));
  }
  for (int m = 0; m < kNumModalities; ++m) {
    const auto i = static_cast<std::size_t>(m);
    // Row-major scratch so each sample is contiguous for NoiseInto.
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> src = x[i];
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> dst(src.rows(), src.cols());
    const auto width = static_cast<std::size_t>(src.cols());
    for (Eigen::Index r = 0; r < n; ++r) {
      NoiseInto(std::span<const double>(src.row(r).data(), width),
                std::span<double>(dst.row(r).data(), width), alpha[static_cast<std::size_t>(r)], rng);
    }
    out[i] = dst;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Inference

PerHead<Matrix> HeadProbabilities(const EncoderBundle &bundle, const FeatureMatrix &data) {
  PerHead<Matrix> probs;
  const Eigen::Index n = data.size();
  for (auto &p : probs) p.resize(n, kNumClasses);
  for (Eigen::Index begin = 0; begin < n; begin += kEvalChunk) {
    const Eigen::Index count = std::min(kEvalChunk, n - begin);
    BatchInput batch;
    batch.x = Rows(data, begin, count).x;
    const ForwardOutput out =
        bundle.Forward(batch, Mode::kEval, ForwardParts{false, true}, nullptr, nullptr);
    for (int h = 0; h < kNumHeads; ++h)
      probs[static_cast<std::size_t>(h)].middleRows(begin, count) =
          Softmax(out.logits[static_cast<std::size_t>(h)]);
  }
  return probs;
}

Matrix VoteProbabilities(const EncoderBundle &bundle, const FeatureMatrix &data,
                         const VotingConfig &voting) {
  return SoftVoteScores(HeadProbabilities(bundle, data), voting) / voting.Total();
}

Matrix BaselineProbabilities(const BaselineClassifier &model, const FeatureMatrix &data) {
  const Eigen::Index n = data.size();
  Matrix probs(n, kNumClasses);
  for (Eigen::Index begin = 0; begin < n; begin += kEvalChunk) {
    const Eigen::Index count = std::min(kEvalChunk, n - begin);
    BatchInput batch;
    batch.x = Rows(data, begin, count).x;
    probs.middleRows(begin, count) = Softmax(model.Forward(batch, Mode::kEval, nullptr, nullptr));
  }
  return probs;
}

std::vector<int> ArgMaxRows(const Matrix &scores) {
  std::vector<int> out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index r = 0; r < scores.rows(); ++r) out[static_cast<std::size_t>(r)] = ArgMax(scores.row(r));
  return out;
}

// ---------------------------------------------------------------------------
// Pretraining

PretrainOutcome Pretrain(EncoderBundle bundle, std::span<const FeatureRecord> unlabeled,
                         const NeeConfig &nee, const ContrastiveConfig &loss,
                         const TrainConfig &cfg) {
  cfg.Validate();
  loss.Validate();
  if (unlabeled.empty()) throw ConfigError("pretraining needs a non-empty unlabeled pool");
  if (unlabeled.size() < 4)
    throw ConfigError("pretraining needs at least 4 unlabeled records (2 train, 2 held out)");

  const FeatureMatrix data = ToFeatureMatrix(unlabeled, bundle.config().d_in);
  const std::optional<NoiseSchedule> schedule =
      nee.enabled ? std::optional(BuildSchedule(nee.steps, nee.beta1, nee.betaT)) : std::nullopt;

  auto order = Iota(data.size());
  Rng split_rng(SubSeed(cfg.seed, "pretrain/holdout"));
  Shuffle(order, split_rng);
  auto n_hold = static_cast<std::size_t>(
      std::max<long long>(2, std::llround(cfg.holdout_fraction * static_cast<double>(order.size()))));
  n_hold = std::min(n_hold, order.size() - 2);
  std::vector<Eigen::Index> heldout(order.begin(), order.begin() + static_cast<long>(n_hold));
  std::vector<Eigen::Index> train(order.begin() + static_cast<long>(n_hold), order.end());
  const auto heldout_batches = Batches(heldout, cfg.batch_size, 2);

  auto heldout_loss = [&](const EncoderBundle &model) {
    Rng noise_rng(SubSeed(cfg.seed, "pretrain/heldout-noise"));
    double total = 0.0;
    std::size_t count = 0;
    for (const auto &rows : heldout_batches) {
      BatchInput batch = Gather(data, rows);
      if (schedule) batch.noised = NoiseBatch(batch.x, *schedule, nee.random_step, noise_rng);
      const ForwardOutput out =
          model.Forward(batch, Mode::kEval, ForwardParts{true, false}, nullptr, nullptr);
      total += PretrainLoss(out, loss).loss * static_cast<double>(rows.size());
      count += rows.size();
    }
    return total / static_cast<double>(count);
  };

  TrainReport report;
  report.stage = "pretrain";
  report.score_name = "heldout_loss";
  report.train_size = train.size();
  report.best_score = heldout_loss(bundle);
  report.epochs.push_back({0, 0.0, report.best_score});

  EncoderBundle best = bundle;
  Adam opt(bundle.Parameters(), cfg.adam);
  Rng rng(SubSeed(cfg.seed, "pretrain/batches"));
  ForwardCache cache;
  int since_best = 0;
  for (int epoch = 1; epoch <= cfg.max_pretrain_epochs; ++epoch) {
    Shuffle(train, rng);
    double loss_sum = 0.0;
    const auto batches = Batches(train, cfg.batch_size, 2);
    for (const auto &rows : batches) {
      BatchInput batch = Gather(data, rows);
      if (schedule) batch.noised = NoiseBatch(batch.x, *schedule, nee.random_step, rng);
      const ForwardOutput out =
          bundle.Forward(batch, Mode::kTrain, ForwardParts{true, false}, &rng, &cache);
      PretrainResult r = PretrainLoss(out, loss);
      bundle.Backward(cache, r.grads);
      opt.Step(cfg.lr_pretrain);
      report.step_lrs.push_back(cfg.lr_pretrain);
      loss_sum += r.loss;
    }
    const double score = heldout_loss(bundle);
    CheckFinite(loss_sum + score, epoch);
    report.epochs.push_back({epoch, batches.empty() ? 0.0 : loss_sum / batches.size(), score});
    if (score < report.best_score) {
      report.best_score = score;
      report.best_epoch = epoch;
      best = bundle;
      since_best = 0;
    } else if (++since_best > cfg.patience) {
      report.stop_reason = StopReason::kEarlyStop;
      break;
    }
  }
  return {std::move(best), std::move(report)};
}

// ---------------------------------------------------------------------------
// Supervised steps

SupervisedOutcome TrainSupervised(EncoderBundle bundle, const DatasetSplit &split,
                                  const TrainConfig &cfg, Stage stage,
                                  std::span<const FeatureRecord> pseudo,
                                  const VotingConfig &voting, const NeeConfig &nee,
                                  const ContrastiveConfig &loss) {
  cfg.Validate();
  voting.Validate();
  if (split.labeled_train.empty()) throw ConfigError("supervised training needs labeled records");
  if (split.validation.empty()) throw ConfigError("supervised training needs a validation set");

  std::set<std::string> validation_ids;
  for (const auto &r : split.validation) validation_ids.insert(r.sample_id);

  std::vector<FeatureRecord> train(split.labeled_train.begin(), split.labeled_train.end());
  if (stage == Stage::kTwo) {
    for (const auto &p : pseudo) {
      if (validation_ids.contains(p.sample_id))
        throw ContractError("pseudo-labeled record '" + p.sample_id + "' is a validation record");
      if (!p.label) throw ContractError("pseudo record '" + p.sample_id + "' has no label");
      FeatureRecord r = p;
      r.origin = Origin::kPseudo;
      train.push_back(std::move(r));
    }
  } else if (!pseudo.empty()) {
    throw ContractError("pseudo records are only used in stage two");
  }
  for (const auto &r : train) {
    if (validation_ids.contains(r.sample_id))
      throw ContractError("training record '" + r.sample_id + "' is also a validation record");
  }

  const std::string stage_name = stage == Stage::kOne ? "stage1" : "stage2";
  OversampleConfig oversample{stage == Stage::kOne ? cfg.oversample_step1 : cfg.oversample_step2,
                              SubSeed(cfg.seed, stage_name + "/oversample")};
  const auto balanced = Oversample(train, oversample);
  const FeatureMatrix data = ToFeatureMatrix(balanced, bundle.config().d_in);
  const FeatureMatrix val = ToFeatureMatrix(split.validation, bundle.config().d_in);
  const double lr = stage == Stage::kOne ? cfg.lr_step1 : cfg.lr_step2;

  const ContrastiveConfig contrastive = SupervisedContrastive(loss, cfg);
  const bool use_contrastive = contrastive.lambda_intra > 0.0 || contrastive.lambda_imc > 0.0;
  std::optional<NoiseSchedule> schedule;
  if (use_contrastive && nee.enabled && contrastive.lambda_intra > 0.0)
    schedule = BuildSchedule(nee.steps, nee.beta1, nee.betaT);

  Adam opt(bundle.Parameters(), cfg.adam);
  Rng rng(SubSeed(cfg.seed, stage_name + "/batches"));
  ForwardCache cache;
  auto step = [&](std::span<const Eigen::Index> rows) {
    BatchInput batch = Gather(data, rows);
    const std::vector<int> labels = GatherLabels(data, rows);
    if (schedule) batch.noised = NoiseBatch(batch.x, *schedule, nee.random_step, rng);
    const ForwardOutput out =
        bundle.Forward(batch, Mode::kTrain, ForwardParts{use_contrastive, true}, &rng, &cache);
    ClassificationResult cls = ClassificationLoss(out.logits, labels);
    OutputGrads grads;
    grads.logits = std::move(cls.dlogits);
    double total = cls.loss;
    if (use_contrastive) {
      PretrainResult pre = PretrainLoss(out, contrastive);
      total += pre.loss;
      grads.spec = std::move(pre.grads.spec);
      grads.spec_noised = std::move(pre.grads.spec_noised);
      grads.inv = std::move(pre.grads.inv);
      grads.pair = std::move(pre.grads.pair);
    }
    bundle.Backward(cache, grads);
    return total;
  };
  auto score = [&](const EncoderBundle &model) {
    return ScoreWaf(VoteProbabilities(model, val, voting), val);
  };
  TrainReport report = SupervisedLoop(bundle, data.size(), cfg, lr, use_contrastive ? 2 : 1, rng,
                                      opt, step, score);
  report.stage = stage_name;
  return {std::move(bundle), std::move(report)};
}

BaselineOutcome TrainBaseline(const DatasetSplit &split, const NetworkConfig &net,
                              const TrainConfig &cfg) {
  cfg.Validate();
  if (split.labeled_train.empty()) throw ConfigError("baseline training needs labeled records");
  if (split.validation.empty()) throw ConfigError("baseline training needs a validation set");

  BaselineClassifier model = BaselineClassifier::Init(net);
  const auto balanced =
      Oversample(split.labeled_train, {cfg.oversample_step1, SubSeed(cfg.seed, "baseline/oversample")});
  const FeatureMatrix data = ToFeatureMatrix(balanced, net.d_in);
  const FeatureMatrix val = ToFeatureMatrix(split.validation, net.d_in);

  Adam opt(model.Parameters(), cfg.adam);
  Rng rng(SubSeed(cfg.seed, "baseline/batches"));
  BaselineClassifier::Cache cache;
  auto step = [&](std::span<const Eigen::Index> rows) {
    const BatchInput batch = Gather(data, rows);
    const std::vector<int> labels = GatherLabels(data, rows);
    const Matrix logits = model.Forward(batch, Mode::kTrain, &rng, &cache);
    Matrix dlogits;
    const double loss = CrossEntropy(logits, labels, &dlogits);
    model.Backward(cache, dlogits);
    return loss;
  };
  auto score = [&](const BaselineClassifier &m) {
    return ScoreWaf(BaselineProbabilities(m, val), val);
  };
  TrainReport report = SupervisedLoop(model, data.size(), cfg, cfg.lr_step1, 1, rng, opt, step, score);
  report.stage = "baseline";
  return {std::move(model), std::move(report)};
}

}  // namespace semer
