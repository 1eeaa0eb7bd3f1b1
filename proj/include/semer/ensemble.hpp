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

// Weighted soft voting over the classifier heads A, V, T and F.

#pragma once

#include <map>
#include <vector>

#include "semer/network.hpp"

namespace semer {

struct VotingConfig {
  /// Indexed A, V, T, F.
  PerHead<double> weights{0.7, 0.5, 0.4, 0.7};

  /// Throws ConfigError on a negative weight or when all weights are zero.
  void Validate() const;
  double Total() const;
  bool operator==(const VotingConfig &) const = default;
};

struct VoteResult {
  std::vector<double> aggregate;
  int winner = 0;
  /// aggregate[winner] minus the best other class (aggregate[winner] when
  /// there is a single class).
  double margin = 0.0;

  EmotionLabel label() const { return LabelFromIndex(winner); }
};

/// aggregate[c] = sum_h weight[h] * confidences[h][c]; ties (within 1e-12
/// relative) go to the lowest class index. Every head must be present and
/// each confidence vector must sum to 1 within 1e-6 (ContractError
/// otherwise). Works for any class count.
VoteResult SoftVote(const std::map<Head, std::vector<double>> &confidences, const VotingConfig &cfg);

/// Batched form over per-head softmax matrices: returns the aggregate scores,
/// one row per sample.
Matrix SoftVoteScores(const PerHead<Matrix> &probabilities, const VotingConfig &cfg);

/// Index of the row maximum, lowest index on ties (same tolerance as SoftVote).
int ArgMax(const Eigen::Ref<const Eigen::RowVectorXd> &row);

}  // namespace semer
