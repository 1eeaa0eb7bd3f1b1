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

// Pseudo-labeling by intersecting two models' predictions under per-class
// confidence thresholds.

#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "semer/datamodel.hpp"
#include "semer/ensemble.hpp"
#include "semer/network.hpp"

namespace semer {

struct ThresholdPolicy {
  /// neutral, angry, happy, sad at 0.99; worried and surprise at 0.85.
  PerClass<double> thresholds{0.99, 0.99, 0.99, 0.99, 0.85, 0.85};

  double operator[](EmotionLabel label) const {
    return thresholds[static_cast<std::size_t>(Index(label))];
  }
  /// Throws ConfigError unless every threshold lies in (0, 1].
  void Validate() const;
  bool operator==(const ThresholdPolicy &) const = default;
};

/// "default" or a comma list of class=threshold overriding the defaults.
ThresholdPolicy ParseThresholdPolicy(std::string_view text);
std::string RenderThresholdPolicy(const ThresholdPolicy &policy);

enum class Decision { kAccepted, kRejected };
enum class RejectReason { kAccepted, kAgreementFailed, kBelowThreshold };

std::string_view RenderDecision(Decision d);
std::string_view RenderReason(RejectReason r);

struct PseudoLabelRecord {
  std::string sample_id;
  /// Set only when both models pick the same class.
  std::optional<EmotionLabel> agreed_label;
  EmotionLabel main_label = EmotionLabel::kNeutral;
  EmotionLabel baseline_label = EmotionLabel::kNeutral;
  double conf_main = 0.0;
  double conf_baseline = 0.0;
  Decision decision = Decision::kRejected;
  RejectReason reason = RejectReason::kAgreementFailed;

  bool operator==(const PseudoLabelRecord &) const = default;
};

/// The acceptance rule on one sample. `main_probs` is the main model's
/// renormalized vote, `baseline_probs` the baseline's softmax.
PseudoLabelRecord DecidePseudoLabel(std::string sample_id,
                                    const Eigen::Ref<const Eigen::RowVectorXd> &main_probs,
                                    const Eigen::Ref<const Eigen::RowVectorXd> &baseline_probs,
                                    const ThresholdPolicy &policy);

/// One record per pool entry, in pool order. An empty pool gives an empty list.
std::vector<PseudoLabelRecord> GeneratePseudoLabels(const EncoderBundle &main,
                                                    const BaselineClassifier &baseline,
                                                    std::span<const FeatureRecord> pool,
                                                    const VotingConfig &voting,
                                                    const ThresholdPolicy &policy);

/// Accepted count per class.
PerClass<int> PseudoLabelSummary(std::span<const PseudoLabelRecord> records);

/// Accepted records as training records (label = agreed class, origin
/// pseudo), in `records` order. Throws ContractError if an accepted id is
/// missing from `pool` or listed in `forbidden_ids`.
std::vector<FeatureRecord> AcceptedAsTraining(std::span<const PseudoLabelRecord> records,
                                              std::span<const FeatureRecord> pool,
                                              const std::set<std::string> &forbidden_ids = {});

std::string RenderPseudoLabelLine(const PseudoLabelRecord &record);
PseudoLabelRecord ParsePseudoLabelLine(std::string_view line);
void SavePseudoLabels(std::span<const PseudoLabelRecord> records, const std::filesystem::path &file);
std::vector<PseudoLabelRecord> LoadPseudoLabels(const std::filesystem::path &file);

}  // namespace semer
