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

#include "semer/losses.hpp"

#include <cmath>

namespace semer {

namespace {

constexpr double kNormEps = 1e-12;

// Row-normalizes x; keeps the norms for the backward pass.
Matrix NormalizeRows(const Matrix &x, Eigen::VectorXd *norms) {
  *norms = x.rowwise().norm().cwiseMax(kNormEps);
  return x.array().colwise() / norms->array();
}

// Backward of y = x / |x| given y, |x| and dL/dy.
Matrix NormalizeRowsBackward(const Matrix &y, const Eigen::VectorXd &norms, const Matrix &dy) {
  const Eigen::VectorXd proj = (y.array() * dy.array()).rowwise().sum();
  Matrix dx = dy - (y.array().colwise() * proj.array()).matrix();
  return dx.array().colwise() / norms.array();
}

void AddScaled(Matrix &acc, const Matrix &g, double scale) {
  if (acc.size() == 0)
    acc = scale * g;
  else
    acc += scale * g;
}

}  // namespace

void ContrastiveConfig::Validate() const {
  for (double t : tau_intra)
    if (!(t > 0.0)) throw ConfigError("loss.tau_intra must be positive");
  if (!(tau_pair > 0.0)) throw ConfigError("loss.tau_pair must be positive");
  if (!(tau_combo > 0.0)) throw ConfigError("loss.tau_combo must be positive");
  if (lambda_intra < 0.0 || lambda_imc < 0.0)
    throw ConfigError("loss weights lambda_intra and lambda_imc must be non-negative");
}

NceResult InfoNceSymmetric(const Matrix &x, const Matrix &y, double tau, bool normalize) {
  const Eigen::Index b = x.rows();
  if (b < 2) throw ContractError("InfoNCE needs a batch of at least 2");
  if (y.rows() != b) throw ContractError("InfoNCE batches differ in size");
  if (x.cols() != y.cols()) throw ContractError("InfoNCE embeddings differ in width");
  if (!(tau > 0.0)) throw ContractError("InfoNCE temperature must be positive");

  Eigen::VectorXd nx, ny;
  const Matrix xn = normalize ? NormalizeRows(x, &nx) : x;
  const Matrix yn = normalize ? NormalizeRows(y, &ny) : y;
  const Matrix s = (xn * yn.transpose()) / tau;

  // Row direction: softmax over j of S_kj. Column direction: over j of S_jk.
  const Eigen::VectorXd row_max = s.rowwise().maxCoeff();
  const Matrix row_exp = (s.colwise() - row_max).array().exp();
  const Eigen::VectorXd row_sum = row_exp.rowwise().sum();
  const Eigen::RowVectorXd col_max = s.colwise().maxCoeff();
  const Matrix col_exp = (s.rowwise() - col_max).array().exp();
  const Eigen::RowVectorXd col_sum = col_exp.colwise().sum();

  double loss = 0.0;
  for (Eigen::Index k = 0; k < b; ++k) {
    const double row_lse = row_max(k) + std::log(row_sum(k));
    const double col_lse = col_max(k) + std::log(col_sum(k));
    loss += (row_lse - s(k, k)) + (col_lse - s(k, k));
  }
  const double inv_b = 1.0 / static_cast<double>(b);
  loss *= inv_b;

  // dL/dS = (softmax_rows - I)/B + (softmax_cols - I)/B
  Matrix ds = (row_exp.array().colwise() / row_sum.array()).matrix() +
              (col_exp.array().rowwise() / col_sum.array()).matrix();
  ds.diagonal().array() -= 2.0;
  ds *= inv_b / tau;

  NceResult r;
  r.loss = loss;
  Matrix dxn = ds * yn;
  Matrix dyn = ds.transpose() * xn;
  r.dx = normalize ? NormalizeRowsBackward(xn, nx, dxn) : std::move(dxn);
  r.dy = normalize ? NormalizeRowsBackward(yn, ny, dyn) : std::move(dyn);
  return r;
}

IntraResult IntraModalityLoss(const PerModality<Matrix> &spec,
                              const PerModality<Matrix> &spec_noised,
                              const ContrastiveConfig &cfg) {
  IntraResult r;
  const Eigen::Index b = spec[0].rows();
  for (int m = 0; m < kNumModalities; ++m) {
    const auto i = static_cast<std::size_t>(m);
    if (spec[i].rows() != b || spec_noised[i].rows() != b)
      throw ContractError("intra-modality loss: batches are not aligned");
    NceResult term = InfoNceSymmetric(spec[i], spec_noised[i], cfg.tau_intra[i], cfg.normalize);
    r.terms[i] = term.loss;
    r.loss += term.loss / 3.0;
    r.dspec[i] = term.dx / 3.0;
    r.dnoised[i] = term.dy / 3.0;
  }
  return r;
}

InterResult InterModalityLoss(const PerModality<Matrix> &inv, const PerModality<Matrix> &pair,
                              const ContrastiveConfig &cfg) {
  const Eigen::Index b = inv[0].rows();
  for (int m = 0; m < kNumModalities; ++m) {
    if (inv[static_cast<std::size_t>(m)].rows() != b || pair[static_cast<std::size_t>(m)].rows() != b)
      throw ContractError("inter-modality loss: batches are not aligned");
  }
  InterResult r;
  constexpr double w = 1.0 / kNumInterTerms;
  // Single-vs-single: (v,a), (v,t), (a,t).
  constexpr std::array<std::pair<int, int>, 3> singles = {{{0, 1}, {0, 2}, {1, 2}}};
  for (std::size_t k = 0; k < singles.size(); ++k) {
    const auto x = static_cast<std::size_t>(singles[k].first);
    const auto y = static_cast<std::size_t>(singles[k].second);
    NceResult term = InfoNceSymmetric(inv[x], inv[y], cfg.tau_pair, cfg.normalize);
    r.terms[k] = term.loss;
    r.loss += w * term.loss;
    AddScaled(r.dinv[x], term.dx, w);
    AddScaled(r.dinv[y], term.dy, w);
  }
  // One versus the other two: v vs at, a vs vt, t vs va.
  for (int m = 0; m < kNumModalities; ++m) {
    const auto i = static_cast<std::size_t>(m);
    NceResult term = InfoNceSymmetric(inv[i], pair[i], cfg.tau_combo, cfg.normalize);
    r.terms[3 + i] = term.loss;
    r.loss += w * term.loss;
    AddScaled(r.dinv[i], term.dx, w);
    AddScaled(r.dpair[i], term.dy, w);
  }
  return r;
}

Matrix Softmax(const Matrix &logits) {
  const Eigen::VectorXd row_max = logits.rowwise().maxCoeff();
  Matrix e = (logits.colwise() - row_max).array().exp();
  const Eigen::VectorXd sums = e.rowwise().sum();
  return e.array().colwise() / sums.array();
}

double CrossEntropy(const Matrix &logits, std::span<const int> labels, Matrix *dlogits) {
  const Eigen::Index b = logits.rows();
  if (static_cast<Eigen::Index>(labels.size()) != b)
    throw ContractError("cross-entropy: label count differs from batch size");
  if (b == 0) throw ContractError("cross-entropy over an empty batch");
  const Eigen::VectorXd row_max = logits.rowwise().maxCoeff();
  const Matrix shifted = logits.colwise() - row_max;
  const Eigen::VectorXd lse = shifted.array().exp().rowwise().sum().log();
  double loss = 0.0;
  for (Eigen::Index k = 0; k < b; ++k) {
    const int y = labels[static_cast<std::size_t>(k)];
    if (y < 0 || y >= logits.cols()) throw ContractError("cross-entropy: label out of range");
    loss += lse(k) - shifted(k, y);
  }
  loss /= static_cast<double>(b);
  if (dlogits != nullptr) {
    *dlogits = Softmax(logits);
    for (Eigen::Index k = 0; k < b; ++k) (*dlogits)(k, labels[static_cast<std::size_t>(k)]) -= 1.0;
    *dlogits /= static_cast<double>(b);
  }
  return loss;
}

ClassificationResult ClassificationLoss(const PerHead<Matrix> &logits, std::span<const int> labels) {
  ClassificationResult r;
  for (Head h : kAllHeads) {
    const auto i = static_cast<std::size_t>(Index(h));
    r.terms[i] = CrossEntropy(logits[i], labels, &r.dlogits[i]);
    r.loss += r.terms[i];
  }
  return r;
}

PretrainResult PretrainLoss(const ForwardOutput &out, const ContrastiveConfig &cfg) {
  cfg.Validate();
  PretrainResult r;
  if (out.spec_noised && cfg.lambda_intra > 0.0) {
    IntraResult intra = IntraModalityLoss(out.spec, *out.spec_noised, cfg);
    r.intra = intra.loss;
    for (int m = 0; m < kNumModalities; ++m) {
      const auto i = static_cast<std::size_t>(m);
      r.grads.spec[i] = cfg.lambda_intra * intra.dspec[i];
      r.grads.spec_noised[i] = cfg.lambda_intra * intra.dnoised[i];
    }
  } else if (out.spec_noised) {
    r.intra = IntraModalityLoss(out.spec, *out.spec_noised, cfg).loss;
  }
  if (out.inv[0].size() != 0 && cfg.lambda_imc > 0.0) {
    InterResult inter = InterModalityLoss(out.inv, out.pair, cfg);
    r.imc = inter.loss;
    for (int m = 0; m < kNumModalities; ++m) {
      const auto i = static_cast<std::size_t>(m);
      r.grads.inv[i] = cfg.lambda_imc * inter.dinv[i];
      r.grads.pair[i] = cfg.lambda_imc * inter.dpair[i];
    }
  } else if (out.inv[0].size() != 0) {
    r.imc = InterModalityLoss(out.inv, out.pair, cfg).loss;
  }
  r.loss = cfg.lambda_intra * r.intra + cfg.lambda_imc * r.imc;
  return r;
}

}  // namespace semer
