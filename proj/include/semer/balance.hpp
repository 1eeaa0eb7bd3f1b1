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

#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "semer/datamodel.hpp"

namespace semer {

struct OversampleConfig {
  /// Target count per class; classes without an entry are left alone.
  std::map<EmotionLabel, int> targets;
  std::uint64_t seed = 0;

  bool operator==(const OversampleConfig &) const = default;
};

/// Parses "sad=850,worried=850,surprise=850". An empty string means no targets.
std::map<EmotionLabel, int> ParseOversampleTargets(std::string_view text);
std::string RenderOversampleTargets(const std::map<EmotionLabel, int> &targets);

/// Random oversampling with replacement.
///
/// For every class with target t and n originals, appends max(0, t - n)
/// duplicates drawn uniformly from that class's originals. Duplicates carry
/// origin=duplicate and id "<source>#dup<K>" (K counts per source record).
/// Originals keep their position at the front of the output.
std::vector<FeatureRecord> Oversample(std::span<const FeatureRecord> records,
                                      const OversampleConfig &cfg);

}  // namespace semer
