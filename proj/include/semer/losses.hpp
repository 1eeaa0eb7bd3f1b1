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

// Training objectives. Every loss returns its value together with the
// gradient with respect to its inputs so trainers can feed the result
// straight into EncoderBundle::Backward.

#pragma once

#include <array>
#include <span>

#include "semer/network.hpp"

namespace semer {

struct ContrastiveConfig {
  /// Temperatures of the clean-vs-noised terms, indexed v, a, t.
  PerModality<double> tau_intra{0.07, 0.07, 0.07};
  /// Temperature of the single-vs-single inter-modality terms.
  double tau_pair = 0.07;
  /// Temperature of the one-vs-other-two terms.
  double tau_combo = 0.07;
  /// L2-normalize rows before taking inner products.
  bool normalize = true;
  double lambda_intra = 1.0;
  double lambda_imc = 1.0;

  void Validate() const;
  bool operator==(const ContrastiveConfig &) const = default;
};

struct NceResult {
  double loss = 0.0;
  Matrix dx;
  Matrix dy;
};

/// Symmetric in-batch InfoNCE between two aligned batches: row k of `x` and
/// row k of `y` are the positive pair, every other row is a negative.
///
///   S = x y^T / tau
///   L = mean_k [ -S_kk + logsumexp_j S_kj ] + mean_k [ -S_kk + logsumexp_j S_jk ]
///
/// Both directional terms are added. Requires B >= 2 and equal widths.
NceResult InfoNceSymmetric(const Matrix &x, const Matrix &y, double tau, bool normalize);

struct IntraResult {
  double loss = 0.0;
  PerModality<double> terms{};
  PerModality<Matrix> dspec;
  PerModality<Matrix> dnoised;
};

/// Mean over v, a, t of InfoNceSymmetric(clean, noised, tau_intra[m]).
IntraResult IntraModalityLoss(const PerModality<Matrix> &spec,
                              const PerModality<Matrix> &spec_noised,
                              const ContrastiveConfig &cfg);

/// Inter-modality term order.
enum class InterTerm : int { kVA = 0, kVT, kAT, kVvsAT, kAvsVT, kTvsVA };
inline constexpr int kNumInterTerms = 6;

struct InterResult {
  double loss = 0.0;
  std::array<double, kNumInterTerms> terms{};
  PerModality<Matrix> dinv;
  PerModality<Matrix> dpair;
};

/// Mean of the three single-vs-single terms (tau_pair) and the three
/// one-vs-pair terms NCE(inv[m], pair[m]) (tau_combo).
InterResult InterModalityLoss(const PerModality<Matrix> &inv, const PerModality<Matrix> &pair,
                              const ContrastiveConfig &cfg);

/// Row-wise softmax.
Matrix Softmax(const Matrix &logits);

/// Mean categorical cross-entropy over the batch. Labels index columns.
/// Writes dL/dlogits when `dlogits` is non-null.
double CrossEntropy(const Matrix &logits, std::span<const int> labels, Matrix *dlogits);

struct ClassificationResult {
  double loss = 0.0;
  PerHead<double> terms{};
  PerHead<Matrix> dlogits;
};

/// Sum over the four heads of the batch-mean cross-entropy.
ClassificationResult ClassificationLoss(const PerHead<Matrix> &logits, std::span<const int> labels);

struct PretrainResult {
  double loss = 0.0;
  double intra = 0.0;
  double imc = 0.0;
  OutputGrads grads;
};

/// lambda_intra * L_intra + lambda_imc * L_imc. The intra term needs noised
/// outputs; without them it is reported as 0 and contributes nothing.
PretrainResult PretrainLoss(const ForwardOutput &out, const ContrastiveConfig &cfg);

}  // namespace semer
