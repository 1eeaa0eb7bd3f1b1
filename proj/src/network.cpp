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

#include "semer/network.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "semer/hashing.hpp"

namespace semer {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kFeedForwardMultiplier = 2;

void AddTo(Matrix &acc, const Matrix &g) {
  if (g.size() == 0) return;
  if (acc.size() == 0)
    acc = g;
  else
    acc += g;
}

// The two modalities paired against `m`, in v, a, t order.
std::pair<int, int> Complement(int m) {
  switch (m) {
    case 0:
      return {1, 2};
    case 1:
      return {0, 2};
    default:
      return {0, 1};
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

void NetworkConfig::Validate() const {
  if (d_in.v < 1 || d_in.a < 1 || d_in.t < 1) throw ConfigError("network input dims must be >= 1");
  if (d_spec < 1) throw ConfigError("network.d_spec must be >= 1");
  if (n_spec_layers < 0) throw ConfigError("network.n_spec_layers must be >= 0");
  if (d_inv < 1) throw ConfigError("network.d_inv must be >= 1");
  if (n_classes != kNumClasses) throw ConfigError("network.n_classes must be 6");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("network.dropout must lie in [0, 1)");
  if (baseline_hidden < 1) throw ConfigError("network.baseline_hidden must be >= 1");
}

json ToJson(const NetworkConfig &cfg) {
  return {{"d_in", {{"v", cfg.d_in.v}, {"a", cfg.d_in.a}, {"t", cfg.d_in.t}}},
          {"d_spec", cfg.d_spec},
          {"n_spec_layers", cfg.n_spec_layers},
          {"d_inv", cfg.d_inv},
          {"n_classes", cfg.n_classes},
          {"dropout", cfg.dropout},
          {"fusion_uses_inv", cfg.fusion_uses_inv},
          {"baseline_hidden", cfg.baseline_hidden},
          {"init_seed", cfg.init_seed}};
}

NetworkConfig NetworkConfigFromJson(const json &j) {
  NetworkConfig cfg;
  try {
    cfg.d_in.v = j.at("d_in").at("v").get<int>();
    cfg.d_in.a = j.at("d_in").at("a").get<int>();
    cfg.d_in.t = j.at("d_in").at("t").get<int>();
    cfg.d_spec = j.at("d_spec").get<int>();
    cfg.n_spec_layers = j.at("n_spec_layers").get<int>();
    cfg.d_inv = j.at("d_inv").get<int>();
    cfg.n_classes = j.at("n_classes").get<int>();
    cfg.dropout = j.at("dropout").get<double>();
    cfg.fusion_uses_inv = j.at("fusion_uses_inv").get<bool>();
    cfg.baseline_hidden = j.at("baseline_hidden").get<int>();
    cfg.init_seed = j.at("init_seed").get<std::uint64_t>();
  } catch (const json::exception &e) {
    throw DataError(std::string("network config: ") + e.what());
  }
  cfg.Validate();
  return cfg;
}

// ---------------------------------------------------------------------------
// Specificity encoder

SpecificityEncoder::SpecificityEncoder(const std::string &name, int d_in, int d_model,
                                       int n_layers)
    : input_(name + ".input", d_in, d_model), final_norm_(name + ".final_norm", d_model) {
  const int d_ff = kFeedForwardMultiplier * d_model;
  for (int l = 0; l < n_layers; ++l) {
    const std::string p = name + ".block" + std::to_string(l);
    blocks_.push_back(Block{LayerNorm(p + ".ln1", d_model), Linear(p + ".value", d_model, d_model),
                            Linear(p + ".output", d_model, d_model), LayerNorm(p + ".ln2", d_model),
                            Linear(p + ".ff1", d_model, d_ff), Linear(p + ".ff2", d_ff, d_model)});
  }
}

void SpecificityEncoder::Init(Rng &rng) {
  input_.Init(rng);
  for (auto &b : blocks_) {
    b.value.Init(rng);
    b.output.Init(rng);
    b.ff1.Init(rng);
    b.ff2.Init(rng);
  }
}

Matrix SpecificityEncoder::Forward(const Matrix &x, Mode mode, double dropout, Rng *rng,
                                   Cache *cache) const {
  const bool drop = mode == Mode::kTrain && dropout > 0.0;
  if (drop && rng == nullptr) throw ContractError("train-mode dropout needs an rng");
  Matrix h = input_.Forward(x);
  if (cache != nullptr) {
    cache->input = x;
    cache->blocks.assign(blocks_.size(), {});
  }
  for (std::size_t l = 0; l < blocks_.size(); ++l) {
    const Block &b = blocks_[l];
    BlockCache local;
    BlockCache &bc = cache != nullptr ? cache->blocks[l] : local;

    Matrix attn_in = b.ln1.Forward(h, &bc.ln1);
    Matrix value = b.value.Forward(attn_in);
    Matrix attn = b.output.Forward(value);
    if (drop) {
      bc.drop1 = DropoutMask(attn.rows(), attn.cols(), dropout, *rng);
      attn.array() *= bc.drop1.array();
    }
    h += attn;

    Matrix ff_in = b.ln2.Forward(h, &bc.ln2);
    Matrix ff_pre = b.ff1.Forward(ff_in);
    Matrix ff_act = Gelu(ff_pre);
    Matrix ff = b.ff2.Forward(ff_act);
    if (drop) {
      bc.drop2 = DropoutMask(ff.rows(), ff.cols(), dropout, *rng);
      ff.array() *= bc.drop2.array();
    }
    h += ff;

    if (cache != nullptr) {
      bc.attn_in = std::move(attn_in);
      bc.value = std::move(value);
      bc.ff_in = std::move(ff_in);
      bc.ff_pre = std::move(ff_pre);
      bc.ff_act = std::move(ff_act);
    }
  }
  LayerNorm::Cache unused;
  return final_norm_.Forward(h, cache != nullptr ? &cache->final_norm : &unused);
}

void SpecificityEncoder::Backward(const Cache &cache, const Matrix &dy) {
  Matrix dh = final_norm_.Backward(cache.final_norm, dy);
  for (std::size_t l = blocks_.size(); l-- > 0;) {
    Block &b = blocks_[l];
    const BlockCache &bc = cache.blocks[l];

    Matrix dff = dh;
    if (bc.drop2.size() != 0) dff.array() *= bc.drop2.array();
    Matrix dact = b.ff2.Backward(bc.ff_act, dff);
    Matrix dpre = GeluBackward(bc.ff_pre, dact);
    dh += b.ln2.Backward(bc.ln2, b.ff1.Backward(bc.ff_in, dpre));

    Matrix dattn = dh;
    if (bc.drop1.size() != 0) dattn.array() *= bc.drop1.array();
    Matrix dvalue = b.output.Backward(bc.value, dattn);
    dh += b.ln1.Backward(bc.ln1, b.value.Backward(bc.attn_in, dvalue));
  }
  input_.Backward(cache.input, dh, /*need_input_grad=*/false);
}

void SpecificityEncoder::Collect(ParameterList &out) {
  input_.Collect(out);
  for (auto &b : blocks_) {
    b.ln1.Collect(out);
    b.value.Collect(out);
    b.output.Collect(out);
    b.ln2.Collect(out);
    b.ff1.Collect(out);
    b.ff2.Collect(out);
  }
  final_norm_.Collect(out);
}

void SpecificityEncoder::Collect(ConstParameterList &out) const {
  input_.Collect(out);
  for (const auto &b : blocks_) {
    b.ln1.Collect(out);
    b.value.Collect(out);
    b.output.Collect(out);
    b.ln2.Collect(out);
    b.ff1.Collect(out);
    b.ff2.Collect(out);
  }
  final_norm_.Collect(out);
}

// ---------------------------------------------------------------------------
// Invariant encoder

InvariantEncoder::InvariantEncoder(int d_spec, int d_inv)
    : first_("inv.first", d_spec, d_inv), second_("inv.second", d_inv, d_inv) {}

void InvariantEncoder::Init(Rng &rng) {
  first_.Init(rng);
  second_.Init(rng);
}

Matrix InvariantEncoder::Forward(const Matrix &x, Cache *cache) const {
  Matrix pre = first_.Forward(x);
  Matrix hidden = Gelu(pre);
  Matrix out = second_.Forward(hidden);
  if (cache != nullptr) {
    cache->input = x;
    cache->hidden_pre = std::move(pre);
    cache->hidden = std::move(hidden);
  }
  return out;
}

Matrix InvariantEncoder::Backward(const Cache &cache, const Matrix &dy) {
  Matrix dhidden = second_.Backward(cache.hidden, dy);
  return first_.Backward(cache.input, GeluBackward(cache.hidden_pre, dhidden));
}

void InvariantEncoder::Collect(ParameterList &out) {
  first_.Collect(out);
  second_.Collect(out);
}

void InvariantEncoder::Collect(ConstParameterList &out) const {
  first_.Collect(out);
  second_.Collect(out);
}

// ---------------------------------------------------------------------------
// Classifier head

ClassifierHead::ClassifierHead(const std::string &name, int d_in, int n_classes)
    : linear_(name, d_in, n_classes) {}

void ClassifierHead::Init(Rng &rng) { linear_.Init(rng); }

Matrix ClassifierHead::Forward(const Matrix &x, Mode mode, double dropout, Rng *rng,
                               Cache *cache) const {
  if (mode == Mode::kTrain && dropout > 0.0) {
    if (rng == nullptr) throw ContractError("train-mode dropout needs an rng");
    Matrix mask = DropoutMask(x.rows(), x.cols(), dropout, *rng);
    Matrix dropped = x.cwiseProduct(mask);
    Matrix logits = linear_.Forward(dropped);
    if (cache != nullptr) {
      cache->input = std::move(dropped);
      cache->mask = std::move(mask);
    }
    return logits;
  }
  if (cache != nullptr) {
    cache->input = x;
    cache->mask.resize(0, 0);
  }
  return linear_.Forward(x);
}

Matrix ClassifierHead::Backward(const Cache &cache, const Matrix &dy) {
  Matrix dx = linear_.Backward(cache.input, dy);
  if (cache.mask.size() != 0) dx.array() *= cache.mask.array();
  return dx;
}

void ClassifierHead::Collect(ParameterList &out) { linear_.Collect(out); }
void ClassifierHead::Collect(ConstParameterList &out) const { linear_.Collect(out); }

// ---------------------------------------------------------------------------
// Bundle

EncoderBundle EncoderBundle::Init(const NetworkConfig &cfg) {
  cfg.Validate();
  EncoderBundle b;
  b.cfg_ = cfg;
  for (Modality m : kAllModalities) {
    const std::string name = "spec." + std::string(ModalityKey(m));
    auto &enc = b.spec_[static_cast<std::size_t>(Index(m))];
    enc = SpecificityEncoder(name, cfg.d_in[m], cfg.d_spec, cfg.n_spec_layers);
    Rng rng(SubSeed(cfg.init_seed, name));
    enc.Init(rng);
  }
  b.inv_ = InvariantEncoder(cfg.d_spec, cfg.d_inv);
  {
    Rng rng(SubSeed(cfg.init_seed, "inv"));
    b.inv_.Init(rng);
  }
  b.pair_ = Linear("pair", 2 * cfg.d_inv, cfg.d_inv);
  {
    Rng rng(SubSeed(cfg.init_seed, "pair"));
    b.pair_.Init(rng);
  }
  b.ResetHeads(SubSeed(cfg.init_seed, "heads"));
  return b;
}

void EncoderBundle::ResetHeads(std::uint64_t seed) {
  const int fusion_in = 3 * cfg_.d_spec + (cfg_.fusion_uses_inv ? 3 * cfg_.d_inv : 0);
  for (Head h : kAllHeads) {
    const int d_in = h == Head::kF ? fusion_in : cfg_.d_spec;
    auto &head = heads_[static_cast<std::size_t>(Index(h))];
    head = ClassifierHead("head." + std::string(HeadName(h)), d_in, cfg_.n_classes);
    Rng rng(SubSeed(seed, Index(h)));
    head.Init(rng);
  }
}

ForwardOutput EncoderBundle::Forward(const BatchInput &batch, Mode mode, ForwardParts parts,
                                     Rng *rng, ForwardCache *cache) const {
  for (Modality m : kAllModalities) {
    const auto i = static_cast<std::size_t>(Index(m));
    if (batch.x[i].cols() != cfg_.d_in[m] || batch.x[i].rows() != batch.size())
      throw ContractError("forward: modality " + std::string(ModalityKey(m)) +
                          " batch has width " + std::to_string(batch.x[i].cols()) +
                          ", expected " + std::to_string(cfg_.d_in[m]));
    if (batch.noised && ((*batch.noised)[i].cols() != cfg_.d_in[m] ||
                         (*batch.noised)[i].rows() != batch.size()))
      throw ContractError("forward: noised batch shape mismatch");
  }
  const double p = cfg_.dropout;
  ForwardOutput out;
  if (cache != nullptr) {
    cache->has_noised = batch.noised.has_value();
    cache->has_contrastive = parts.contrastive;
    cache->has_logits = parts.logits;
  }
  for (int m = 0; m < kNumModalities; ++m) {
    const auto i = static_cast<std::size_t>(m);
    out.spec[i] = spec_[i].Forward(batch.x[i], mode, p, rng, cache ? &cache->spec[i] : nullptr);
  }
  if (batch.noised) {
    out.spec_noised.emplace();
    for (int m = 0; m < kNumModalities; ++m) {
      const auto i = static_cast<std::size_t>(m);
      (*out.spec_noised)[i] = spec_[i].Forward((*batch.noised)[i], mode, p, rng,
                                               cache ? &cache->spec_noised[i] : nullptr);
    }
  }
  const bool need_inv = parts.contrastive || (parts.logits && cfg_.fusion_uses_inv);
  if (need_inv) {
    for (int m = 0; m < kNumModalities; ++m) {
      const auto i = static_cast<std::size_t>(m);
      out.inv[i] = inv_.Forward(out.spec[i], cache ? &cache->inv[i] : nullptr);
    }
  }
  if (parts.contrastive) {
    for (int m = 0; m < kNumModalities; ++m) {
      const auto [x, y] = Complement(m);
      Matrix joint = ConcatCols({&out.inv[static_cast<std::size_t>(x)],
                                 &out.inv[static_cast<std::size_t>(y)]});
      out.pair[static_cast<std::size_t>(m)] = pair_.Forward(joint);
      if (cache != nullptr) cache->pair_input[static_cast<std::size_t>(m)] = std::move(joint);
    }
  }
  if (parts.logits) {
    for (Head h : kAllHeads) {
      const auto hi = static_cast<std::size_t>(Index(h));
      auto *head_cache = cache ? &cache->heads[hi] : nullptr;
      if (h == Head::kF) {
        Matrix joint = cfg_.fusion_uses_inv
                           ? ConcatCols({&out.spec[0], &out.spec[1], &out.spec[2], &out.inv[0],
                                         &out.inv[1], &out.inv[2]})
                           : ConcatCols({&out.spec[0], &out.spec[1], &out.spec[2]});
        out.logits[hi] = heads_[hi].Forward(joint, mode, p, rng, head_cache);
      } else {
        const auto src = static_cast<std::size_t>(Index(HeadModality(h)));
        out.logits[hi] = heads_[hi].Forward(out.spec[src], mode, p, rng, head_cache);
      }
    }
  }
  return out;
}

ForwardOutput EncoderBundle::Forward(const FeatureRecord &record,
                                     const std::optional<PerModality<std::vector<double>>> &noised,
                                     Mode mode, Rng *rng) const {
  BatchInput batch;
  for (Modality m : kAllModalities) {
    const auto &f = record.Features(m);
    const auto i = static_cast<std::size_t>(Index(m));
    batch.x[i] = Eigen::Map<const Eigen::RowVectorXf>(f.data(), static_cast<Eigen::Index>(f.size()))
                     .cast<double>();
  }
  if (noised) {
    batch.noised.emplace();
    for (int m = 0; m < kNumModalities; ++m) {
      const auto i = static_cast<std::size_t>(m);
      const auto &v = (*noised)[i];
      (*batch.noised)[i] =
          Eigen::Map<const Eigen::RowVectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
  }
  return Forward(batch, mode, ForwardParts{}, rng, nullptr);
}

void EncoderBundle::Backward(const ForwardCache &cache, const OutputGrads &grads) {
  PerModality<Matrix> dspec = grads.spec;
  PerModality<Matrix> dinv = grads.inv;

  if (cache.has_contrastive) {
    for (int m = 0; m < kNumModalities; ++m) {
      const auto i = static_cast<std::size_t>(m);
      if (grads.pair[i].size() == 0) continue;
      const Matrix djoint = pair_.Backward(cache.pair_input[i], grads.pair[i]);
      const auto [x, y] = Complement(m);
      AddTo(dinv[static_cast<std::size_t>(x)], djoint.leftCols(cfg_.d_inv));
      AddTo(dinv[static_cast<std::size_t>(y)], djoint.rightCols(cfg_.d_inv));
    }
  }
  if (cache.has_logits) {
    for (Head h : kAllHeads) {
      const auto hi = static_cast<std::size_t>(Index(h));
      if (grads.logits[hi].size() == 0) continue;
      const Matrix dx = heads_[hi].Backward(cache.heads[hi], grads.logits[hi]);
      if (h == Head::kF) {
        for (int m = 0; m < kNumModalities; ++m) {
          AddTo(dspec[static_cast<std::size_t>(m)], dx.middleCols(m * cfg_.d_spec, cfg_.d_spec));
          if (cfg_.fusion_uses_inv)
            AddTo(dinv[static_cast<std::size_t>(m)],
                  dx.middleCols(3 * cfg_.d_spec + m * cfg_.d_inv, cfg_.d_inv));
        }
      } else {
        AddTo(dspec[static_cast<std::size_t>(Index(HeadModality(h)))], dx);
      }
    }
  }
  for (int m = 0; m < kNumModalities; ++m) {
    const auto i = static_cast<std::size_t>(m);
    if (dinv[i].size() != 0) AddTo(dspec[i], inv_.Backward(cache.inv[i], dinv[i]));
    if (dspec[i].size() != 0) spec_[i].Backward(cache.spec[i], dspec[i]);
    if (cache.has_noised && grads.spec_noised[i].size() != 0)
      spec_[i].Backward(cache.spec_noised[i], grads.spec_noised[i]);
  }
}

ParameterList EncoderBundle::Parameters() {
  ParameterList out;
  for (auto &s : spec_) s.Collect(out);
  inv_.Collect(out);
  pair_.Collect(out);
  for (auto &h : heads_) h.Collect(out);
  return out;
}

ConstParameterList EncoderBundle::Parameters() const {
  ConstParameterList out;
  for (const auto &s : spec_) s.Collect(out);
  inv_.Collect(out);
  pair_.Collect(out);
  for (const auto &h : heads_) h.Collect(out);
  return out;
}

void EncoderBundle::ZeroGrad() {
  for (Parameter *p : Parameters()) p->ZeroGrad();
}

std::vector<ParameterShape> EncoderBundle::ExpectedShapes(const NetworkConfig &cfg) {
  std::vector<ParameterShape> shapes;
  auto linear = [&](const std::string &name, Eigen::Index in, Eigen::Index out) {
    shapes.push_back({name + ".weight", in, out});
    shapes.push_back({name + ".bias", 1, out});
  };
  auto norm = [&](const std::string &name, Eigen::Index width) {
    shapes.push_back({name + ".gain", 1, width});
    shapes.push_back({name + ".shift", 1, width});
  };
  const Eigen::Index d = cfg.d_spec;
  for (Modality m : kAllModalities) {
    const std::string s = "spec." + std::string(ModalityKey(m));
    linear(s + ".input", cfg.d_in[m], d);
    for (int l = 0; l < cfg.n_spec_layers; ++l) {
      const std::string b = s + ".block" + std::to_string(l);
      norm(b + ".ln1", d);
      linear(b + ".value", d, d);
      linear(b + ".output", d, d);
      norm(b + ".ln2", d);
      linear(b + ".ff1", d, kFeedForwardMultiplier * d);
      linear(b + ".ff2", kFeedForwardMultiplier * d, d);
    }
    norm(s + ".final_norm", d);
  }
  linear("inv.first", d, cfg.d_inv);
  linear("inv.second", cfg.d_inv, cfg.d_inv);
  linear("pair", 2 * cfg.d_inv, cfg.d_inv);
  for (Head h : kAllHeads) {
    const Eigen::Index in =
        h == Head::kF ? 3 * d + (cfg.fusion_uses_inv ? 3 * cfg.d_inv : 0) : d;
    linear("head." + std::string(HeadName(h)), in, cfg.n_classes);
  }
  return shapes;
}

void EncoderBundle::AuditShapes() const {
  const auto expected = ExpectedShapes(cfg_);
  const auto actual = Parameters();
  if (expected.size() != actual.size())
    throw ContractError("shape audit: expected " + std::to_string(expected.size()) +
                        " parameters, found " + std::to_string(actual.size()));
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const Parameter &p = *actual[i];
    if (p.name != expected[i].name || p.value.rows() != expected[i].rows ||
        p.value.cols() != expected[i].cols || p.grad.rows() != p.value.rows() ||
        p.grad.cols() != p.value.cols())
      throw ContractError("shape audit: parameter '" + p.name + "' does not match '" +
                          expected[i].name + "' " + std::to_string(expected[i].rows) + "x" +
                          std::to_string(expected[i].cols));
  }
}

// ---------------------------------------------------------------------------
// Baseline

BaselineClassifier BaselineClassifier::Init(const NetworkConfig &cfg) {
  cfg.Validate();
  BaselineClassifier model;
  model.cfg_ = cfg;
  model.hidden_ = Linear("baseline.hidden", cfg.d_in.Total(), cfg.baseline_hidden);
  model.output_ = Linear("baseline.output", cfg.baseline_hidden, cfg.n_classes);
  Rng rng(SubSeed(cfg.init_seed, "baseline"));
  model.hidden_.Init(rng);
  model.output_.Init(rng);
  return model;
}

Matrix BaselineClassifier::Forward(const BatchInput &batch, Mode mode, Rng *rng,
                                   Cache *cache) const {
  Matrix input = ConcatCols({&batch.x[0], &batch.x[1], &batch.x[2]});
  Matrix pre = hidden_.Forward(input);
  Matrix hidden = Gelu(pre);
  Matrix mask;
  if (mode == Mode::kTrain && cfg_.dropout > 0.0) {
    if (rng == nullptr) throw ContractError("train-mode dropout needs an rng");
    mask = DropoutMask(hidden.rows(), hidden.cols(), cfg_.dropout, *rng);
    hidden.array() *= mask.array();
  }
  Matrix logits = output_.Forward(hidden);
  if (cache != nullptr) {
    cache->input = std::move(input);
    cache->hidden_pre = std::move(pre);
    cache->hidden = std::move(hidden);
    cache->mask = std::move(mask);
  }
  return logits;
}

void BaselineClassifier::Backward(const Cache &cache, const Matrix &dlogits) {
  Matrix dhidden = output_.Backward(cache.hidden, dlogits);
  if (cache.mask.size() != 0) dhidden.array() *= cache.mask.array();
  hidden_.Backward(cache.input, GeluBackward(cache.hidden_pre, dhidden), false);
}

ParameterList BaselineClassifier::Parameters() {
  ParameterList out;
  hidden_.Collect(out);
  output_.Collect(out);
  return out;
}

ConstParameterList BaselineClassifier::Parameters() const {
  ConstParameterList out;
  hidden_.Collect(out);
  output_.Collect(out);
  return out;
}

void BaselineClassifier::ZeroGrad() {
  for (Parameter *p : Parameters()) p->ZeroGrad();
}

// ---------------------------------------------------------------------------
// Batches

FeatureMatrix ToFeatureMatrix(std::span<const FeatureRecord> records, const Dims &dims) {
  FeatureMatrix data;
  const auto n = static_cast<Eigen::Index>(records.size());
  for (Modality m : kAllModalities) data.x[static_cast<std::size_t>(Index(m))].resize(n, dims[m]);
  data.labels.reserve(records.size());
  data.ids.reserve(records.size());
  for (Eigen::Index r = 0; r < n; ++r) {
    const FeatureRecord &rec = records[static_cast<std::size_t>(r)];
    ValidateRecord(rec, dims);
    for (Modality m : kAllModalities) {
      const auto &f = rec.Features(m);
      data.x[static_cast<std::size_t>(Index(m))].row(r) =
          Eigen::Map<const Eigen::RowVectorXf>(f.data(), dims[m]).cast<double>();
    }
    data.labels.push_back(rec.label ? Index(*rec.label) : -1);
    data.ids.push_back(rec.sample_id);
  }
  return data;
}

BatchInput Gather(const FeatureMatrix &data, std::span<const Eigen::Index> rows) {
  BatchInput batch;
  for (int m = 0; m < kNumModalities; ++m) {
    const auto i = static_cast<std::size_t>(m);
    batch.x[i].resize(static_cast<Eigen::Index>(rows.size()), data.x[i].cols());
    for (std::size_t r = 0; r < rows.size(); ++r)
      batch.x[i].row(static_cast<Eigen::Index>(r)) = data.x[i].row(rows[r]);
  }
  return batch;
}

std::vector<int> GatherLabels(const FeatureMatrix &data, std::span<const Eigen::Index> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (Eigen::Index r : rows) out.push_back(data.labels[static_cast<std::size_t>(r)]);
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

std::vector<unsigned char> TensorBytes(const Matrix &m) {
  std::vector<unsigned char> bytes(static_cast<std::size_t>(m.size()) * sizeof(double));
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(m.data()[i]);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    std::memcpy(bytes.data() + static_cast<std::size_t>(i) * sizeof(double), &bits, sizeof(bits));
  }
  return bytes;
}

void WriteCheckpoint(const fs::path &dir, const json &config, const ConstParameterList &params) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "config.json", std::ios::trunc);
    out << config.dump(2) << '\n';
  }
  json tensors = json::array();
  std::string all_hashes;
  for (const Parameter *p : params) {
    const auto bytes = TensorBytes(p->value);
    const std::string file = p->name + ".bin";
    std::ofstream out(dir / file, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("cannot write checkpoint tensor " + (dir / file).string());
    const std::string hash = Sha256Hex(std::span<const unsigned char>(bytes));
    all_hashes += hash;
    tensors.push_back({{"name", p->name},
                       {"file", file},
                       {"rows", p->value.rows()},
                       {"cols", p->value.cols()},
                       {"sha256", hash}});
  }
  json manifest = {{"format", "float64-le-colmajor"},
                   {"tensors", tensors},
                   {"content_hash", Sha256Hex(all_hashes)}};
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  out << manifest.dump(2) << '\n';
}

json ReadJson(const fs::path &path) {
  std::ifstream in(path);
  if (!in) throw DataError("missing " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception &e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void ReadCheckpointInto(const fs::path &dir, const ParameterList &params) {
  const json manifest = ReadJson(dir / "manifest.json");
  const auto &tensors = manifest.at("tensors");
  if (tensors.size() != params.size())
    throw DataError("checkpoint " + dir.string() + " lists " + std::to_string(tensors.size()) +
                    " tensors, model has " + std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter &p = *params[i];
    const auto &t = tensors[i];
    if (t.at("name").get<std::string>() != p.name || t.at("rows").get<Eigen::Index>() != p.value.rows() ||
        t.at("cols").get<Eigen::Index>() != p.value.cols())
      throw DataError("checkpoint tensor " + t.at("name").get<std::string>() +
                      " does not match parameter " + p.name);
    const fs::path file = dir / t.at("file").get<std::string>();
    std::ifstream in(file, std::ios::binary);
    std::vector<unsigned char> bytes(static_cast<std::size_t>(p.value.size()) * sizeof(double));
    in.read(reinterpret_cast<char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!in || in.peek() != std::char_traits<char>::eof())
      throw DataError("checkpoint tensor file has the wrong size: " + file.string());
    if (Sha256Hex(std::span<const unsigned char>(bytes)) != t.at("sha256").get<std::string>())
      throw DataError("checkpoint tensor hash mismatch: " + file.string());
    for (Eigen::Index k = 0; k < p.value.size(); ++k) {
      std::uint64_t bits;
      std::memcpy(&bits, bytes.data() + static_cast<std::size_t>(k) * sizeof(double), sizeof(bits));
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
      p.value.data()[k] = std::bit_cast<double>(bits);
    }
    p.ZeroGrad();
  }
}

}  // namespace

void SaveCheckpoint(const EncoderBundle &bundle, const fs::path &dir) {
  WriteCheckpoint(dir, {{"kind", "bundle"}, {"network", ToJson(bundle.config())}},
                  bundle.Parameters());
}

EncoderBundle LoadEncoderBundle(const fs::path &dir) {
  const json config = ReadJson(dir / "config.json");
  if (config.value("kind", "") != "bundle")
    throw DataError(dir.string() + " is not an encoder bundle checkpoint");
  EncoderBundle bundle = EncoderBundle::Init(NetworkConfigFromJson(config.at("network")));
  ReadCheckpointInto(dir, bundle.Parameters());
  return bundle;
}

void SaveCheckpoint(const BaselineClassifier &model, const fs::path &dir) {
  WriteCheckpoint(dir, {{"kind", "baseline"}, {"network", ToJson(model.config())}},
                  model.Parameters());
}

BaselineClassifier LoadBaseline(const fs::path &dir) {
  const json config = ReadJson(dir / "config.json");
  if (config.value("kind", "") != "baseline")
    throw DataError(dir.string() + " is not a baseline checkpoint");
  BaselineClassifier model = BaselineClassifier::Init(NetworkConfigFromJson(config.at("network")));
  ReadCheckpointInto(dir, model.Parameters());
  return model;
}

std::string CheckpointKind(const fs::path &dir) {
  return ReadJson(dir / "config.json").value("kind", "");
}

}  // namespace semer
