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

#include "semer/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace semer {

void VotingConfig::Validate() const {
  bool any_positive = false;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("voting weights must be non-negative");
    any_positive = any_positive || w > 0.0;
  }
  if (!any_positive) throw ConfigError("at least one voting weight must be positive");
}

double VotingConfig::Total() const {
  double sum = 0.0;
  for (double w : weights) sum += w;
  return sum;
}

namespace {

// Scores this close count as tied, so rounding in the weighted sums cannot
// override the lowest-index tie-break.
bool Beats(double candidate, double best) {
  return candidate > best + 1e-12 * std::max(1.0, std::abs(best));
}

}  // namespace

int ArgMax(const Eigen::Ref<const Eigen::RowVectorXd> &row) {
  int best = 0;
  for (Eigen::Index c = 1; c < row.size(); ++c)
    if (Beats(row(c), row(best))) best = static_cast<int>(c);
  return best;
}

VoteResult SoftVote(const std::map<Head, std::vector<double>> &confidences, const VotingConfig &cfg) {
  cfg.Validate();
  std::size_t n_classes = 0;
  for (Head h : kAllHeads) {
    auto it = confidences.find(h);
    if (it == confidences.end())
      throw ContractError("soft vote: missing head " + std::string(HeadName(h)));
    if (n_classes == 0) n_classes = it->second.size();
    if (it->second.size() != n_classes || n_classes == 0)
      throw ContractError("soft vote: heads disagree on the number of classes");
    double sum = 0.0;
    for (double p : it->second) sum += p;
    if (std::abs(sum - 1.0) > 1e-6)
      throw ContractError("soft vote: head " + std::string(HeadName(h)) +
                          " confidences do not sum to 1");
  }

  VoteResult r;
  r.aggregate.assign(n_classes, 0.0);
  for (Head h : kAllHeads) {
    const double w = cfg.weights[static_cast<std::size_t>(Index(h))];
    const auto &conf = confidences.at(h);
    for (std::size_t c = 0; c < n_classes; ++c) r.aggregate[c] += w * conf[c];
  }
  r.winner = 0;
  for (std::size_t c = 1; c < n_classes; ++c)
    if (Beats(r.aggregate[c], r.aggregate[static_cast<std::size_t>(r.winner)]))
      r.winner = static_cast<int>(c);
  double runner_up = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < n_classes; ++c)
    if (static_cast<int>(c) != r.winner) runner_up = std::max(runner_up, r.aggregate[c]);
  const double best = r.aggregate[static_cast<std::size_t>(r.winner)];
  r.margin = n_classes > 1 ? std::max(0.0, best - runner_up) : best;
  return r;
}

Matrix SoftVoteScores(const PerHead<Matrix> &probabilities, const VotingConfig &cfg) {
  cfg.Validate();
  Matrix scores = Matrix::Zero(probabilities[0].rows(), probabilities[0].cols());
  for (Head h : kAllHeads) {
    const auto i = static_cast<std::size_t>(Index(h));
    if (probabilities[i].rows() != scores.rows() || probabilities[i].cols() != scores.cols())
      throw ContractError("soft vote: head outputs differ in shape");
    scores += cfg.weights[i] * probabilities[i];
  }
  return scores;
}

}  // namespace semer
