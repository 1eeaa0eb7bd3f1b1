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

// Training stages: contrastive pretraining on the unlabeled pool, the two
// supervised steps, and the stand-in baseline used for pseudo-label
// agreement. Plus batched inference helpers shared by the later stages.

#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "semer/balance.hpp"
#include "semer/ensemble.hpp"
#include "semer/losses.hpp"
#include "semer/network.hpp"
#include "semer/noise.hpp"
#include "semer/optim.hpp"

namespace semer {

struct TrainConfig {
  /// Unstated by the method; 1e-3 converges within the epoch budget here.
  double lr_pretrain = 1e-3;
  double lr_step1 = 1e-4;
  double lr_step2 = 5e-5;
  /// 512 at full scale; 64 keeps CPU runs short.
  int batch_size = 64;
  int max_pretrain_epochs = 40;
  int patience = 5;
  int step_epochs = 20;
  /// Fraction of the unlabeled pool held out as the pretraining stop signal.
  double holdout_fraction = 0.05;
  AdamConfig adam;
  std::map<EmotionLabel, int> oversample_step1{
      {EmotionLabel::kSad, 850}, {EmotionLabel::kWorried, 850}, {EmotionLabel::kSurprise, 850}};
  std::map<EmotionLabel, int> oversample_step2{
      {EmotionLabel::kSad, 1000}, {EmotionLabel::kWorried, 1000}, {EmotionLabel::kSurprise, 1000}};
  /// Contrastive terms kept active during the supervised steps (0 = off).
  double supervised_lambda_intra = 0.0;
  double supervised_lambda_imc = 0.0;
  std::uint64_t seed = 0;

  /// Throws ConfigError; requires lr_step2 <= lr_step1 and positive sizes.
  void Validate() const;
  bool operator==(const TrainConfig &) const = default;
};

enum class Stage { kOne = 1, kTwo = 2 };
enum class StopReason { kEarlyStop, kMaxEpochs };
std::string_view RenderStopReason(StopReason reason);

struct EpochRecord {
  int epoch = 0;            // 0 is the state before any update
  double train_loss = 0.0;  // mean over the epoch's batches; 0 for epoch 0
  double score = 0.0;       // held-out loss (pretraining) or validation WAF
};

struct TrainReport {
  std::string stage;
  /// "heldout_loss" (lower is better) or "val_waf" (higher is better).
  std::string score_name;
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_score = 0.0;
  std::string best_checkpoint;
  StopReason stop_reason = StopReason::kMaxEpochs;
  /// Learning rate used at every update step, in order.
  std::vector<double> step_lrs;
  std::size_t train_size = 0;

  nlohmann::json ToJson() const;
};

/// Inverse of TrainReport::ToJson (step_lrs are not stored; only their
/// count, range and the epoch curve survive). Throws DataError.
TrainReport TrainReportFromJson(const nlohmann::json &j);

struct PretrainOutcome {
  EncoderBundle bundle;
  TrainReport report;
};

struct SupervisedOutcome {
  EncoderBundle bundle;
  TrainReport report;
};

struct BaselineOutcome {
  BaselineClassifier model;
  TrainReport report;
};

// Every trainer throws Error when an epoch's loss turns non-finite.

/// Minimizes the combined contrastive loss over shuffled mini-batches of the
/// unlabeled pool, early-stopping on a held-out slice. Returns the bundle from
/// the best held-out epoch. Throws ConfigError on an empty pool or batch < 2.
PretrainOutcome Pretrain(EncoderBundle bundle, std::span<const FeatureRecord> unlabeled,
                         const NeeConfig &nee, const ContrastiveConfig &loss,
                         const TrainConfig &cfg);

/// Stage one: oversample labeled_train to oversample_step1 and train at
/// lr_step1. Stage two: append `pseudo` to labeled_train, oversample to
/// oversample_step2, train at lr_step2. Both select by validation WAF.
/// Throws ContractError if a pseudo record id is also a validation id.
SupervisedOutcome TrainSupervised(EncoderBundle bundle, const DatasetSplit &split,
                                  const TrainConfig &cfg, Stage stage,
                                  std::span<const FeatureRecord> pseudo,
                                  const VotingConfig &voting, const NeeConfig &nee,
                                  const ContrastiveConfig &loss);

/// Fused feed-forward classifier on the raw features, trained like stage one.
BaselineOutcome TrainBaseline(const DatasetSplit &split, const NetworkConfig &net,
                              const TrainConfig &cfg);

// ---------------------------------------------------------------------------
// Inference

/// Softmax of every head, evaluated in chunks in eval mode.
PerHead<Matrix> HeadProbabilities(const EncoderBundle &bundle, const FeatureMatrix &data);
/// Weighted soft-vote scores divided by the weight total, so rows sum to 1.
Matrix VoteProbabilities(const EncoderBundle &bundle, const FeatureMatrix &data,
                         const VotingConfig &voting);
Matrix BaselineProbabilities(const BaselineClassifier &model, const FeatureMatrix &data);
std::vector<int> ArgMaxRows(const Matrix &scores);

/// Noised copy of a batch: one draw per row at the terminal step, or at a
/// uniformly drawn step per row when `random_step` is set.
PerModality<Matrix> NoiseBatch(const PerModality<Matrix> &x, const NoiseSchedule &schedule,
                               bool random_step, Rng &rng);

}  // namespace semer
