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

// Central finite-difference checks of every hand-written backward pass.

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <functional>

#include "semer/losses.hpp"
#include "test_util.hpp"

namespace semer {
namespace {

// 1e-4 leaves O(h^2) truncation error above tolerance when a narrow LayerNorm
// makes the loss sharply curved; 1e-5 stays well clear of round-off.
constexpr double kStep = 1e-5;
constexpr double kTolerance = 1e-3;

Matrix RandomMatrix(Eigen::Index rows, Eigen::Index cols, Rng &rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.Normal();
  return m;
}

int Width(Rng &rng) { return 2 + static_cast<int>(rng.UniformIndex(7)); }  // 2..8

struct CheckOutcome {
  double worst_tensor_error = 0.0;
  std::string worst_tensor;
  long entries = 0;
};

// Compares analytic gradients already accumulated in `params` with central
// differences of `loss`. Returns the worst tensor-level relative error
// ||a - n|| / max(||a||, ||n||, 1e-6) and fails on any entry outside tolerance.
CheckOutcome CompareWithFiniteDifferences(const ParameterList &params,
                                          const std::function<double()> &loss) {
  CheckOutcome outcome;
  for (Parameter *p : params) {
    Matrix numeric(p->value.rows(), p->value.cols());
    for (Eigen::Index k = 0; k < p->value.size(); ++k) {
      double &w = p->value.data()[k];
      const double saved = w;
      w = saved + kStep;
      const double up = loss();
      w = saved - kStep;
      const double down = loss();
      w = saved;
      numeric.data()[k] = (up - down) / (2.0 * kStep);
    }
    const Matrix &analytic = p->grad;
    for (Eigen::Index k = 0; k < analytic.size(); ++k) {
      const double a = analytic.data()[k], n = numeric.data()[k];
      EXPECT_LE(std::abs(a - n), kTolerance * std::max(std::abs(a), std::abs(n)) + 1e-7)
          << p->name << "[" << k << "] analytic " << a << " numeric " << n;
    }
    // Tensors with a near-zero gradient are compared absolutely; their
    // numeric estimate is dominated by round-off in the loss.
    const double scale = std::max({analytic.norm(), numeric.norm(), 1e-6});
    const double err = (analytic - numeric).norm() / scale;
    if (err > outcome.worst_tensor_error) {
      outcome.worst_tensor_error = err;
      outcome.worst_tensor = p->name;
    }
    outcome.entries += p->value.size();
  }
  return outcome;
}

struct RandomSetup {
  NetworkConfig net;
  ContrastiveConfig loss;
  BatchInput batch;
  std::vector<int> labels;
  double lambda_cls = 1.0;
};

RandomSetup MakeSetup(std::uint64_t seed) {
  Rng rng(seed);
  RandomSetup s;
  s.net.d_in = Dims{Width(rng), Width(rng), Width(rng)};
  s.net.d_spec = Width(rng);
  s.net.n_spec_layers = 1 + static_cast<int>(rng.UniformIndex(2));
  s.net.d_inv = Width(rng);
  s.net.baseline_hidden = Width(rng);
  s.net.dropout = 0.0;
  s.net.fusion_uses_inv = rng.Uniform() < 0.3;
  s.net.init_seed = rng.NextU64();
  s.loss.normalize = rng.Uniform() < 0.8;
  for (auto &t : s.loss.tau_intra) t = 0.2 + rng.Uniform();
  s.loss.tau_pair = 0.2 + rng.Uniform();
  s.loss.tau_combo = 0.2 + rng.Uniform();
  s.loss.lambda_intra = 0.5 + rng.Uniform();
  s.loss.lambda_imc = 0.5 + rng.Uniform();
  const int b = 2 + static_cast<int>(rng.UniformIndex(3));  // 2..4
  PerModality<Matrix> noised;
  for (Modality m : kAllModalities) {
    s.batch.x[Index(m)] = RandomMatrix(b, s.net.d_in[m], rng);
    noised[Index(m)] = RandomMatrix(b, s.net.d_in[m], rng);
  }
  s.batch.noised = noised;
  for (int i = 0; i < b; ++i) s.labels.push_back(static_cast<int>(rng.UniformIndex(kNumClasses)));
  s.lambda_cls = 0.5 + rng.Uniform();
  return s;
}

// Pretraining loss plus a weighted classification loss, through the bundle.
double TotalLoss(const EncoderBundle &bundle, const RandomSetup &s, OutputGrads *grads,
                 ForwardCache *cache) {
  Rng rng(0);
  const ForwardOutput out = bundle.Forward(s.batch, Mode::kTrain, {true, true}, &rng, cache);
  const PretrainResult pre = PretrainLoss(out, s.loss);
  const ClassificationResult cls = ClassificationLoss(out.logits, s.labels);
  if (grads != nullptr) {
    *grads = pre.grads;
    for (int h = 0; h < kNumHeads; ++h) grads->logits[h] = s.lambda_cls * cls.dlogits[h];
  }
  return pre.loss + s.lambda_cls * cls.loss;
}

TEST(GradientCheck, BundleLossesOnRandomConfigurations) {
  const auto start = std::chrono::steady_clock::now();
  constexpr int kConfigs = 24;
  double worst = 0.0;
  for (int c = 0; c < kConfigs; ++c) {
    const RandomSetup s = MakeSetup(1000 + c);
    EncoderBundle bundle = EncoderBundle::Init(s.net);
    ForwardCache cache;
    OutputGrads grads;
    TotalLoss(bundle, s, &grads, &cache);
    bundle.ZeroGrad();
    bundle.Backward(cache, grads);
    const CheckOutcome o = CompareWithFiniteDifferences(
        bundle.Parameters(), [&] { return TotalLoss(bundle, s, nullptr, nullptr); });
    EXPECT_LE(o.worst_tensor_error, kTolerance) << "config " << c << " tensor " << o.worst_tensor;
    worst = std::max(worst, o.worst_tensor_error);
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_LT(seconds, 60.0);
  RecordProperty("worst_relative_error", std::to_string(worst));
}

TEST(GradientCheck, EachLossTermSeparately) {
  // Isolating the terms keeps one of them from masking an error in another.
  for (int c = 0; c < 6; ++c) {
    RandomSetup s = MakeSetup(2000 + c);
    for (int term = 0; term < 3; ++term) {
      s.loss.lambda_intra = term == 0 ? 1.0 : 0.0;
      s.loss.lambda_imc = term == 1 ? 1.0 : 0.0;
      s.lambda_cls = term == 2 ? 1.0 : 0.0;
      EncoderBundle bundle = EncoderBundle::Init(s.net);
      ForwardCache cache;
      OutputGrads grads;
      TotalLoss(bundle, s, &grads, &cache);
      bundle.ZeroGrad();
      bundle.Backward(cache, grads);
      const CheckOutcome o = CompareWithFiniteDifferences(
          bundle.Parameters(), [&] { return TotalLoss(bundle, s, nullptr, nullptr); });
      EXPECT_LE(o.worst_tensor_error, kTolerance) << "config " << c << " term " << term << " " << o.worst_tensor;
    }
  }
}

TEST(GradientCheck, BaselineClassifier) {
  for (int c = 0; c < 20; ++c) {
    const RandomSetup s = MakeSetup(3000 + c);
    BaselineClassifier model = BaselineClassifier::Init(s.net);
    auto loss = [&](BaselineClassifier::Cache *cache, Matrix *dlogits) {
      Rng rng(0);
      const Matrix logits = model.Forward(s.batch, Mode::kTrain, &rng, cache);
      return CrossEntropy(logits, s.labels, dlogits);
    };
    BaselineClassifier::Cache cache;
    Matrix dlogits;
    loss(&cache, &dlogits);
    model.ZeroGrad();
    model.Backward(cache, dlogits);
    const CheckOutcome o =
        CompareWithFiniteDifferences(model.Parameters(), [&] { return loss(nullptr, nullptr); });
    EXPECT_LE(o.worst_tensor_error, kTolerance) << "config " << c;
  }
}

TEST(GradientCheck, NceInputGradients) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int b = 2 + static_cast<int>(rng.UniformIndex(3));
    const int d = Width(rng);
    Parameter x{"x", RandomMatrix(b, d, rng), Matrix::Zero(b, d)};
    Parameter y{"y", RandomMatrix(b, d, rng), Matrix::Zero(b, d)};
    const double tau = 0.1 + rng.Uniform();
    const bool normalize = trial % 2 == 0;
    const NceResult r = InfoNceSymmetric(x.value, y.value, tau, normalize);
    x.grad = r.dx;
    y.grad = r.dy;
    const CheckOutcome o = CompareWithFiniteDifferences(
        {&x, &y}, [&] { return InfoNceSymmetric(x.value, y.value, tau, normalize).loss; });
    EXPECT_LE(o.worst_tensor_error, kTolerance);
  }
}

}  // namespace
}  // namespace semer
