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

// Per-utterance feature records, dataset splits, the on-disk feature store
// and the synthetic class-conditional feature generator.

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semer/common.hpp"

namespace semer {

/// Feature widths of the visual, acoustic and text modalities.
struct Dims {
  int v = 64;
  int a = 96;
  int t = 128;

  int operator[](Modality m) const;
  int Total() const { return v + a + t; }
  bool operator==(const Dims &) const = default;
};

/// Full-scale extractor widths (CLIP-Large, HuBERT-Large, Baichuan2-13B).
inline constexpr Dims kExtractorDims{768, 1024, 5120};

/// Where a training record came from.
enum class Origin { kGold, kPseudo, kDuplicate };
std::string_view RenderOrigin(Origin origin);
Origin ParseOrigin(std::string_view text);

struct FeatureRecord {
  std::string sample_id;
  std::vector<float> visual;
  std::vector<float> acoustic;
  std::vector<float> text;
  std::optional<EmotionLabel> label;
  Origin origin = Origin::kGold;

  const std::vector<float> &Features(Modality m) const;
  std::vector<float> &Features(Modality m);
  bool operator==(const FeatureRecord &) const = default;
};

/// Throws DataError naming the record if a vector has the wrong length or
/// holds a non-finite value.
void ValidateRecord(const FeatureRecord &record, const Dims &dims);

struct DatasetSplit {
  Dims dims;
  std::vector<FeatureRecord> labeled_train;
  std::vector<FeatureRecord> validation;
  std::vector<FeatureRecord> unlabeled;
  std::uint64_t seed = 0;
  /// Gold labels of unlabeled records, kept only for auditing synthetic runs.
  /// Never consulted by training.
  std::map<std::string, EmotionLabel> hidden_gold;

  std::size_t NumLabeled() const { return labeled_train.size() + validation.size(); }
  std::size_t NumUnlabeled() const { return unlabeled.size(); }
};

/// Checks the split invariants: labels present/absent per pool, disjoint ids,
/// widths and finiteness. Throws DataError.
void ValidateSplit(const DatasetSplit &split);

/// Reads `manifest.json` plus the three jsonl pools from `dir`.
DatasetSplit LoadFeatureStore(const std::filesystem::path &dir);
/// Writes the store; floats are printed in shortest round-trip form so
/// LoadFeatureStore(SaveFeatureStore(x)) == x.
void SaveFeatureStore(const DatasetSplit &split, const std::filesystem::path &dir);

/// Parses one jsonl record line. Exposed for the pseudo-label and prediction
/// tools that stream records.
FeatureRecord ParseRecordLine(std::string_view line);
std::string RenderRecordLine(const FeatureRecord &record);

struct SyntheticSpec {
  /// Labeled counts per class (neutral, angry, happy, sad, worried, surprise).
  PerClass<int> class_priors{1248, 1208, 1038, 730, 616, 190};
  double means_scale = 2.0;
  double noise_scale = 1.0;
  double cross_modal_coupling = 0.7;
  Dims dims{};
  int unlabeled_count = 10000;
  /// Width of the latent space shared by the three modalities.
  int latent_dim = 16;
  /// Scale of the per-sample latent offset shared by the three modalities.
  double sample_latent_scale = 0.3;
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;

  bool operator==(const SyntheticSpec &) const = default;
};

/// Class-conditional Gaussian mixture over the three modalities.
///
/// Each class owns a latent direction shared by all modalities (weighted by
/// cross_modal_coupling) plus a private direction per modality. Every sample
/// also carries a per-sample latent offset projected identically into all
/// three modalities, so matched modalities of one utterance are more similar
/// than modalities of different utterances of the same class.
DatasetSplit GenerateSynthetic(const SyntheticSpec &spec);

/// Stratified split of `records` into (train, validation); per class the
/// validation count is round(fraction * n).
std::pair<std::vector<FeatureRecord>, std::vector<FeatureRecord>> StratifiedSplit(
    std::vector<FeatureRecord> records, double validation_fraction, std::uint64_t seed);

/// Counts labels. Throws ContractError on an unlabeled record.
PerClass<int> ClassHistogram(std::span<const FeatureRecord> records);

}  // namespace semer
