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

// Encoders and classifier heads.
//
//   spec[m]  = SpecificityEncoder_m(F^m)            per-modality parameters
//   noised[m]= SpecificityEncoder_m(N^m)            same parameters as spec[m]
//   inv[m]   = InvariantEncoder(spec[m])            one encoder shared by v, a, t
//   pair[m]  = PairProjection([inv[x] | inv[y]])    {x, y} = the two modalities
//                                                   other than m, in v,a,t order
//   logits   = heads A/V/T on spec[a]/spec[v]/spec[t], head F on
//              [spec[v] | spec[a] | spec[t]] (optionally also the inv vectors)
//
// pair[m] is the "one versus the other two" partner of inv[m]: pair[v] is the
// projected H^{at}, pair[a] is H^{vt} and pair[t] is H^{av}.

#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "semer/datamodel.hpp"
#include "semer/layers.hpp"

namespace semer {

struct NetworkConfig {
  Dims d_in{};
  int d_spec = 256;
  int n_spec_layers = 2;
  int d_inv = 128;
  int n_classes = kNumClasses;
  double dropout = 0.3;
  /// Classifier F also reads the invariant embeddings.
  bool fusion_uses_inv = false;
  /// Hidden width of the stand-in baseline classifier.
  int baseline_hidden = 256;
  std::uint64_t init_seed = 0;

  /// Throws ConfigError on non-positive widths, n_classes != 6 or a dropout
  /// outside [0, 1).
  void Validate() const;
  bool operator==(const NetworkConfig &) const = default;
};

nlohmann::json ToJson(const NetworkConfig &cfg);
NetworkConfig NetworkConfigFromJson(const nlohmann::json &j);

template <typename T>
using PerModality = std::array<T, kNumModalities>;
template <typename T>
using PerHead = std::array<T, kNumHeads>;

enum class Mode { kTrain, kEval };

/// Which parts of the forward graph to evaluate.
struct ForwardParts {
  bool contrastive = true;  // inv and pair embeddings
  bool logits = true;
};

/// A batch of inputs, one sample per row.
struct BatchInput {
  PerModality<Matrix> x;
  std::optional<PerModality<Matrix>> noised;

  Eigen::Index size() const { return x[0].rows(); }
};

struct ForwardOutput {
  PerModality<Matrix> spec;
  std::optional<PerModality<Matrix>> spec_noised;
  PerModality<Matrix> inv;   // empty when contrastive parts are skipped
  PerModality<Matrix> pair;  // empty when contrastive parts are skipped
  PerHead<Matrix> logits;    // empty when logits are skipped
};

/// Gradients of a scalar loss with respect to forward outputs. Empty matrices
/// mean zero.
struct OutputGrads {
  PerModality<Matrix> spec;
  PerModality<Matrix> spec_noised;
  PerModality<Matrix> inv;
  PerModality<Matrix> pair;
  PerHead<Matrix> logits;
};

class SpecificityEncoder {
 public:
  struct BlockCache {
    LayerNorm::Cache ln1;
    Matrix attn_in;
    Matrix value;
    Matrix drop1;
    LayerNorm::Cache ln2;
    Matrix ff_in;
    Matrix ff_pre;
    Matrix ff_act;
    Matrix drop2;
  };
  struct Cache {
    Matrix input;
    std::vector<BlockCache> blocks;
    LayerNorm::Cache final_norm;
  };

  SpecificityEncoder() = default;
  SpecificityEncoder(const std::string &name, int d_in, int d_model, int n_layers);

  void Init(Rng &rng);
  /// `rng` supplies dropout masks in train mode; may be null in eval mode.
  Matrix Forward(const Matrix &x, Mode mode, double dropout, Rng *rng, Cache *cache) const;
  void Backward(const Cache &cache, const Matrix &dy);
  void Collect(ParameterList &out);
  void Collect(ConstParameterList &out) const;

 private:
  // Pre-norm residual block. Self-attention over a single pooled vector has
  // one key, so its softmax weight is exactly 1 and the sublayer reduces to
  // the value projection followed by the output projection.
  struct Block {
    LayerNorm ln1;
    Linear value;
    Linear output;
    LayerNorm ln2;
    Linear ff1;
    Linear ff2;
  };

  Linear input_;
  std::vector<Block> blocks_;
  LayerNorm final_norm_;
};

class InvariantEncoder {
 public:
  struct Cache {
    Matrix input;
    Matrix hidden_pre;
    Matrix hidden;
  };

  InvariantEncoder() = default;
  InvariantEncoder(int d_spec, int d_inv);

  void Init(Rng &rng);
  Matrix Forward(const Matrix &x, Cache *cache) const;
  Matrix Backward(const Cache &cache, const Matrix &dy);
  void Collect(ParameterList &out);
  void Collect(ConstParameterList &out) const;

 private:
  Linear first_;
  Linear second_;
};

/// Linear classifier head with input dropout.
class ClassifierHead {
 public:
  struct Cache {
    Matrix input;  // after dropout
    Matrix mask;
  };

  ClassifierHead() = default;
  ClassifierHead(const std::string &name, int d_in, int n_classes);

  void Init(Rng &rng);
  Matrix Forward(const Matrix &x, Mode mode, double dropout, Rng *rng, Cache *cache) const;
  Matrix Backward(const Cache &cache, const Matrix &dy);
  void Collect(ParameterList &out);
  void Collect(ConstParameterList &out) const;

 private:
  Linear linear_;
};

struct ForwardCache {
  PerModality<SpecificityEncoder::Cache> spec;
  PerModality<SpecificityEncoder::Cache> spec_noised;
  PerModality<InvariantEncoder::Cache> inv;
  PerModality<Matrix> pair_input;
  PerHead<ClassifierHead::Cache> heads;
  bool has_noised = false;
  bool has_contrastive = false;
  bool has_logits = false;
};

struct ParameterShape {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  bool operator==(const ParameterShape &) const = default;
};

/// Three specificity encoders, the shared invariant encoder, the pair
/// projection and the four classifier heads.
class EncoderBundle {
 public:
  /// Deterministic in cfg.init_seed. Throws ConfigError on a bad config.
  static EncoderBundle Init(const NetworkConfig &cfg);

  const NetworkConfig &config() const { return cfg_; }

  ForwardOutput Forward(const BatchInput &batch, Mode mode, ForwardParts parts, Rng *rng,
                        ForwardCache *cache) const;
  /// Single-record forward in the record's feature space.
  ForwardOutput Forward(const FeatureRecord &record,
                        const std::optional<PerModality<std::vector<double>>> &noised,
                        Mode mode, Rng *rng = nullptr) const;
  /// Accumulates parameter gradients of a loss whose output gradients are
  /// `grads`, using the cache of the forward pass that produced the outputs.
  void Backward(const ForwardCache &cache, const OutputGrads &grads);

  ParameterList Parameters();
  ConstParameterList Parameters() const;
  void ZeroGrad();

  /// Shapes implied by the config, in Parameters() order.
  static std::vector<ParameterShape> ExpectedShapes(const NetworkConfig &cfg);
  /// Throws ContractError naming the first parameter that does not match.
  void AuditShapes() const;

  /// Re-draws the classifier heads from `seed`, leaving encoders untouched.
  void ResetHeads(std::uint64_t seed);

 private:
  NetworkConfig cfg_;
  PerModality<SpecificityEncoder> spec_;
  InvariantEncoder inv_;
  Linear pair_;
  PerHead<ClassifierHead> heads_;
};

/// The stand-in baseline: one fused feed-forward classifier over the
/// concatenated raw features, Linear -> GELU -> dropout -> Linear.
class BaselineClassifier {
 public:
  struct Cache {
    Matrix input;
    Matrix hidden_pre;
    Matrix hidden;  // after dropout
    Matrix mask;
  };

  static BaselineClassifier Init(const NetworkConfig &cfg);

  const NetworkConfig &config() const { return cfg_; }
  int num_heads() const { return 1; }

  Matrix Forward(const BatchInput &batch, Mode mode, Rng *rng, Cache *cache) const;
  void Backward(const Cache &cache, const Matrix &dlogits);

  ParameterList Parameters();
  ConstParameterList Parameters() const;
  void ZeroGrad();

 private:
  NetworkConfig cfg_;
  Linear hidden_;
  Linear output_;
};

// ---------------------------------------------------------------------------
// Batches

/// Dense copy of a record list: one matrix per modality plus labels (-1 when
/// absent) and ids.
struct FeatureMatrix {
  PerModality<Matrix> x;
  std::vector<int> labels;
  std::vector<std::string> ids;

  Eigen::Index size() const { return x[0].rows(); }
};

FeatureMatrix ToFeatureMatrix(std::span<const FeatureRecord> records, const Dims &dims);
BatchInput Gather(const FeatureMatrix &data, std::span<const Eigen::Index> rows);
std::vector<int> GatherLabels(const FeatureMatrix &data, std::span<const Eigen::Index> rows);

// ---------------------------------------------------------------------------
// Checkpoints: a directory with config.json, one little-endian float64 file
// per parameter (column-major) and manifest.json listing name, shape, file
// and SHA-256 per tensor plus a hash over all of them.

void SaveCheckpoint(const EncoderBundle &bundle, const std::filesystem::path &dir);
EncoderBundle LoadEncoderBundle(const std::filesystem::path &dir);
void SaveCheckpoint(const BaselineClassifier &model, const std::filesystem::path &dir);
BaselineClassifier LoadBaseline(const std::filesystem::path &dir);
/// "bundle" or "baseline", read from config.json.
std::string CheckpointKind(const std::filesystem::path &dir);

}  // namespace semer
