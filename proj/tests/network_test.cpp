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

#include <gtest/gtest.h>

#include <fstream>
#include <utility>

#include "semer/network.hpp"
#include "test_util.hpp"

namespace semer {
namespace {

using testing::TempDir;
using testing::TinyNetwork;

BatchInput RandomBatch(const Dims &dims, int rows, Rng &rng, double scale = 1.0) {
  BatchInput b;
  for (Modality m : kAllModalities) {
    Matrix x(rows, dims[m]);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = scale * rng.Normal();
    b.x[Index(m)] = x;
  }
  return b;
}

bool SameParameters(const EncoderBundle &a, const EncoderBundle &b) {
  const auto pa = a.Parameters(), pb = b.Parameters();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i)
    if (pa[i]->name != pb[i]->name || pa[i]->value != pb[i]->value) return false;
  return true;
}

TEST(NetworkConfig, Validation) {
  NetworkConfig cfg = TinyNetwork(Dims{3, 3, 3});
  EXPECT_NO_THROW(cfg.Validate());
  cfg.d_spec = 0;
  EXPECT_THROW(EncoderBundle::Init(cfg), ConfigError);
  cfg = TinyNetwork(Dims{3, 3, 3});
  cfg.n_classes = 5;
  EXPECT_THROW(cfg.Validate(), ConfigError);
  cfg = TinyNetwork(Dims{3, 3, 3});
  cfg.dropout = 1.0;
  EXPECT_THROW(cfg.Validate(), ConfigError);
  cfg = TinyNetwork(Dims{3, 0, 3});
  EXPECT_THROW(cfg.Validate(), ConfigError);
  EXPECT_EQ(NetworkConfigFromJson(ToJson(TinyNetwork(Dims{3, 4, 5}))), TinyNetwork(Dims{3, 4, 5}));
}

TEST(EncoderBundle, InitIsDeterministic) {
  const NetworkConfig cfg = TinyNetwork(Dims{5, 4, 6}, 21);
  EXPECT_TRUE(SameParameters(EncoderBundle::Init(cfg), EncoderBundle::Init(cfg)));
  EXPECT_FALSE(SameParameters(EncoderBundle::Init(cfg), EncoderBundle::Init(TinyNetwork(Dims{5, 4, 6}, 22))));
}

TEST(EncoderBundle, DefaultShapeAudit) {
  NetworkConfig cfg;
  cfg.d_in = Dims{64, 96, 128};
  const EncoderBundle bundle = EncoderBundle::Init(cfg);
  EXPECT_NO_THROW(bundle.AuditShapes());

  // Parameter count from the architecture arithmetic: input projection, per
  // block two norms, value/output projections and a 2x feed-forward, a final
  // norm; then the invariant encoder, pair projection and four heads.
  const long d = cfg.d_spec, h = cfg.d_inv, c = kNumClasses, layers = cfg.n_spec_layers;
  const long block = 2 * (2 * d) + 2 * (d * d + d) + (d * 2 * d + 2 * d) + (2 * d * d + d);
  long expected = 0;
  for (long in : {64L, 96L, 128L}) expected += in * d + d + layers * block + 2 * d;
  expected += (d * h + h) + (h * h + h) + (2 * h * h + h);
  expected += 3 * (d * c + c) + (3 * d * c + c);
  long actual = 0;
  for (const Parameter *p : bundle.Parameters()) actual += p->value.size();
  EXPECT_EQ(actual, expected);
  const std::size_t tensors = 3 * (2 + 12 * layers + 2) + 6 + 8;
  EXPECT_EQ(bundle.Parameters().size(), tensors);
  EXPECT_EQ(EncoderBundle::ExpectedShapes(cfg).size(), tensors);
}

TEST(EncoderBundle, ForwardShapesAndDeterminism) {
  const Dims dims{5, 4, 6};
  NetworkConfig cfg = TinyNetwork(dims);
  cfg.dropout = 0.3;
  const EncoderBundle bundle = EncoderBundle::Init(cfg);
  Rng rng(1);
  BatchInput batch = RandomBatch(dims, 3, rng);
  const ForwardOutput a = bundle.Forward(batch, Mode::kEval, {}, nullptr, nullptr);
  const ForwardOutput b = bundle.Forward(batch, Mode::kEval, {}, nullptr, nullptr);
  for (int m = 0; m < kNumModalities; ++m) {
    EXPECT_EQ(a.spec[m].cols(), cfg.d_spec);
    EXPECT_EQ(a.inv[m].cols(), cfg.d_inv);
    EXPECT_EQ(a.pair[m].cols(), cfg.d_inv);
    EXPECT_EQ(a.inv[m], b.inv[m]);
    EXPECT_EQ(a.pair[m], b.pair[m]);
  }
  for (int h = 0; h < kNumHeads; ++h) {
    EXPECT_EQ(a.logits[h].cols(), kNumClasses);
    EXPECT_EQ(a.logits[h].rows(), 3);
    EXPECT_EQ(a.logits[h], b.logits[h]);
  }
  EXPECT_FALSE(a.spec_noised.has_value());
}

TEST(EncoderBundle, TrainAndEvalAgreeWithoutDropout) {
  const Dims dims{5, 4, 6};
  const EncoderBundle bundle = EncoderBundle::Init(TinyNetwork(dims));
  Rng rng(2);
  const BatchInput batch = RandomBatch(dims, 4, rng);
  Rng drop(3);
  const ForwardOutput train = bundle.Forward(batch, Mode::kTrain, {}, &drop, nullptr);
  const ForwardOutput eval = bundle.Forward(batch, Mode::kEval, {}, nullptr, nullptr);
  for (int h = 0; h < kNumHeads; ++h) EXPECT_LT((train.logits[h] - eval.logits[h]).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(EncoderBundle, NoisedViewUsesSameEncoder) {
  const Dims dims{5, 4, 6};
  const EncoderBundle bundle = EncoderBundle::Init(TinyNetwork(dims));
  Rng rng(4);
  BatchInput batch = RandomBatch(dims, 3, rng);
  batch.noised = batch.x;
  const ForwardOutput out = bundle.Forward(batch, Mode::kEval, {}, nullptr, nullptr);
  ASSERT_TRUE(out.spec_noised.has_value());
  for (int m = 0; m < kNumModalities; ++m) EXPECT_EQ(out.spec[m], (*out.spec_noised)[m]);
}

TEST(EncoderBundle, InvariantEncoderIsShared) {
  const Dims dims{5, 4, 6};
  EncoderBundle bundle = EncoderBundle::Init(TinyNetwork(dims));
  Rng rng(5);
  const BatchInput batch = RandomBatch(dims, 2, rng);
  const ForwardOutput before = bundle.Forward(batch, Mode::kEval, {}, nullptr, nullptr);
  for (Parameter *p : bundle.Parameters())
    if (p->name.rfind("inv.", 0) == 0) p->value.array() += 0.05;
  const ForwardOutput after = bundle.Forward(batch, Mode::kEval, {}, nullptr, nullptr);
  for (int m = 0; m < kNumModalities; ++m) {
    EXPECT_EQ(before.spec[m], after.spec[m]);
    EXPECT_GT((before.inv[m] - after.inv[m]).cwiseAbs().maxCoeff(), 1e-6) << m;
  }
}

TEST(EncoderBundle, FusionHeadOptionallyReadsInvariantEmbeddings) {
  const Dims dims{5, 4, 6};
  NetworkConfig cfg = TinyNetwork(dims);
  cfg.fusion_uses_inv = true;
  const EncoderBundle bundle = EncoderBundle::Init(cfg);
  EXPECT_NO_THROW(bundle.AuditShapes());
  Rng rng(6);
  const ForwardOutput out = bundle.Forward(RandomBatch(dims, 2, rng), Mode::kEval, {false, true}, nullptr, nullptr);
  EXPECT_EQ(out.logits[Index(Head::kF)].cols(), kNumClasses);
}

TEST(EncoderBundle, FiniteOnLargeInputs) {
  const Dims dims{5, 4, 6};
  NetworkConfig cfg = TinyNetwork(dims);
  const EncoderBundle bundle = EncoderBundle::Init(cfg);
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const ForwardOutput out =
        bundle.Forward(RandomBatch(dims, 4, rng, 1e3), Mode::kEval, {}, nullptr, nullptr);
    for (int m = 0; m < kNumModalities; ++m) {
      EXPECT_TRUE(out.spec[m].allFinite());
      EXPECT_TRUE(out.pair[m].allFinite());
    }
    for (const auto &l : out.logits) EXPECT_TRUE(l.allFinite());
  }
}

TEST(EncoderBundle, RejectsWrongWidths) {
  const EncoderBundle bundle = EncoderBundle::Init(TinyNetwork(Dims{5, 4, 6}));
  Rng rng(8);
  EXPECT_THROW(bundle.Forward(RandomBatch(Dims{5, 4, 7}, 2, rng), Mode::kEval, {}, nullptr, nullptr),
               ContractError);
}

TEST(EncoderBundle, SingleRecordForwardMatchesBatch) {
  const Dims dims{5, 4, 6};
  const EncoderBundle bundle = EncoderBundle::Init(TinyNetwork(dims));
  Rng rng(9);
  const FeatureRecord r = testing::MakeRecord("x", std::nullopt, dims, rng);
  const FeatureMatrix fm = ToFeatureMatrix(std::vector<FeatureRecord>{r}, dims);
  BatchInput batch{fm.x, std::nullopt};
  const ForwardOutput a = bundle.Forward(r, std::nullopt, Mode::kEval);
  const ForwardOutput b = bundle.Forward(batch, Mode::kEval, {}, nullptr, nullptr);
  for (int h = 0; h < kNumHeads; ++h) EXPECT_EQ(a.logits[h], b.logits[h]);
}

TEST(EncoderBundle, ResetHeadsKeepsEncoders) {
  EncoderBundle bundle = EncoderBundle::Init(TinyNetwork(Dims{5, 4, 6}));
  const EncoderBundle before = bundle;
  bundle.ResetHeads(1234);
  const auto pa = before.Parameters();
  const auto pb = std::as_const(bundle).Parameters();
  bool head_changed = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i]->name.rfind("head.", 0) == 0)
      head_changed |= pa[i]->value != pb[i]->value;
    else
      EXPECT_EQ(pa[i]->value, pb[i]->value) << pa[i]->name;
  }
  EXPECT_TRUE(head_changed);
}

TEST(Checkpoint, BundleRoundTrip) {
  TempDir dir;
  const EncoderBundle bundle = EncoderBundle::Init(TinyNetwork(Dims{5, 4, 6}, 44));
  SaveCheckpoint(bundle, dir.path());
  EXPECT_EQ(CheckpointKind(dir.path()), "bundle");
  const EncoderBundle loaded = LoadEncoderBundle(dir.path());
  EXPECT_EQ(loaded.config(), bundle.config());
  EXPECT_TRUE(SameParameters(loaded, bundle));
  EXPECT_THROW(LoadBaseline(dir.path()), DataError);
}

TEST(Checkpoint, DetectsCorruption) {
  TempDir dir;
  SaveCheckpoint(EncoderBundle::Init(TinyNetwork(Dims{5, 4, 6})), dir.path());
  {
    std::fstream f(dir / "pair.weight.bin", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(3);
    f.put('\x7f');
  }
  EXPECT_THROW(LoadEncoderBundle(dir.path()), DataError);
}

TEST(Checkpoint, BaselineRoundTrip) {
  TempDir dir;
  const BaselineClassifier model = BaselineClassifier::Init(TinyNetwork(Dims{5, 4, 6}, 45));
  EXPECT_EQ(model.num_heads(), 1);
  SaveCheckpoint(model, dir.path());
  EXPECT_EQ(CheckpointKind(dir.path()), "baseline");
  const BaselineClassifier loaded = LoadBaseline(dir.path());
  const auto pa = model.Parameters(), pb = loaded.Parameters();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i]->value, pb[i]->value);
}

}  // namespace
}  // namespace semer
