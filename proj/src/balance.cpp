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

#include "semer/balance.hpp"

#include <charconv>
#include <unordered_map>

namespace semer {

std::map<EmotionLabel, int> ParseOversampleTargets(std::string_view text) {
  std::map<EmotionLabel, int> targets;
  while (!text.empty()) {
    const auto comma = text.find(',');
    std::string_view item = text.substr(0, comma);
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("oversample target '" + std::string(item) + "' is not class=count");
    const auto label = ParseLabel(item.substr(0, eq));
    if (!label) throw ConfigError("unknown class in oversample target '" + std::string(item) + "'");
    const auto count_text = item.substr(eq + 1);
    int count = 0;
    auto [ptr, ec] = std::from_chars(count_text.data(), count_text.data() + count_text.size(), count);
    if (ec != std::errc() || ptr != count_text.data() + count_text.size() || count < 0)
      throw ConfigError("bad oversample count in '" + std::string(item) + "'");
    targets[*label] = count;
  }
  return targets;
}

std::string RenderOversampleTargets(const std::map<EmotionLabel, int> &targets) {
  std::string out;
  for (const auto &[label, count] : targets) {
    if (!out.empty()) out += ',';
    out += RenderLabel(label);
    out += '=';
    out += std::to_string(count);
  }
  return out;
}

std::vector<FeatureRecord> Oversample(std::span<const FeatureRecord> records,
                                      const OversampleConfig &cfg) {
  PerClass<std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].label)
      throw ContractError("oversampling needs labeled records; '" + records[i].sample_id +
                          "' has none");
    members[static_cast<std::size_t>(Index(*records[i].label))].push_back(i);
  }

  std::vector<FeatureRecord> out(records.begin(), records.end());
  Rng rng(SubSeed(cfg.seed, "oversample"));
  std::unordered_map<std::size_t, int> dup_count;
  for (const auto &[label, target] : cfg.targets) {
    if (target < 0) throw ConfigError("oversample targets must be non-negative");
    const auto &pool = members[static_cast<std::size_t>(Index(label))];
    const int have = static_cast<int>(pool.size());
    if (have == 0 || target <= have) continue;
    for (int k = 0; k < target - have; ++k) {
      const std::size_t src = pool[rng.UniformIndex(pool.size())];
      FeatureRecord dup = records[src];
      dup.sample_id += "#dup" + std::to_string(++dup_count[src]);
      dup.origin = Origin::kDuplicate;
      out.push_back(std::move(dup));
    }
  }
  return out;
}

}  // namespace semer
