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

// Experiment configuration: every tunable of every stage in one value, with
// a flat `section.key = value` text form.
//
//   # comment
//   seed = 1
//   train.lr_step1 = 1e-4
//   train.oversample_step1 = sad=850,worried=850,surprise=850
//
// Unknown keys are errors. Environment variables named
// SEMER_CFG_<SECTION>__<KEY> (upper case, '.' written as "__") override the
// file, e.g. SEMER_CFG_TRAIN__BATCH_SIZE=32.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "semer/datamodel.hpp"
#include "semer/ensemble.hpp"
#include "semer/losses.hpp"
#include "semer/network.hpp"
#include "semer/noise.hpp"
#include "semer/selftrain.hpp"
#include "semer/trainer.hpp"

namespace semer {

inline constexpr std::string_view kEnvPrefix = "SEMER_CFG_";

struct DataConfig {
  /// "synthetic" generates the split; "store" loads `dir`.
  std::string source = "synthetic";
  std::filesystem::path dir;
  /// Generator settings; its seed is derived from the root seed.
  SyntheticSpec synthetic;

  bool operator==(const DataConfig &) const = default;
};

struct PathsConfig {
  std::filesystem::path run_dir = "runs/default";
  bool operator==(const PathsConfig &) const = default;
};

struct ExperimentConfig {
  DataConfig data;
  NeeConfig nee;
  /// d_in and init_seed are filled in by Resolve*(); they are not keys.
  NetworkConfig network = DeskNetwork();
  ContrastiveConfig loss;
  TrainConfig train;
  ThresholdPolicy selftrain;
  VotingConfig voting;
  PathsConfig paths;
  std::uint64_t seed = 1;

  /// Reduced widths used by default so a full run fits a single CPU core.
  static NetworkConfig DeskNetwork();

  /// Throws ConfigError naming the first offending key.
  void Validate() const;

  // Per-stage views with their derived seeds.
  SyntheticSpec ResolvedSynthetic() const;
  NetworkConfig ResolvedNetwork(const Dims &dims) const;
  TrainConfig ResolvedTrain() const;

  bool operator==(const ExperimentConfig &) const = default;
};

/// All keys in rendering order.
std::vector<std::string> ConfigKeys();

/// Sets one key from its text form. Throws ConfigError on an unknown key or
/// a malformed value.
void SetConfigValue(ExperimentConfig &cfg, std::string_view key, std::string_view value);
std::string GetConfigValue(const ExperimentConfig &cfg, std::string_view key);

ExperimentConfig ParseConfig(std::string_view text);
std::string RenderConfig(const ExperimentConfig &cfg);

/// Reads `file` (defaults when empty), then applies SEMER_CFG_* overrides
/// from the environment, then validates.
ExperimentConfig LoadConfig(const std::filesystem::path &file);
void SaveConfig(const ExperimentConfig &cfg, const std::filesystem::path &file);

/// Applies overrides found in `env` (a null-terminated environ-style array).
void ApplyEnvOverrides(ExperimentConfig &cfg, char **env);

/// SHA-256 of the rendered config.
std::string ConfigHash(const ExperimentConfig &cfg);

}  // namespace semer
