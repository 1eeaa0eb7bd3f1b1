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

#include <span>

#include "json.hpp"
#include "semer/common.hpp"

namespace semer {

/// Weighted average F-score and the confusion matrix it was computed from.
struct EvalReport {
  double waf = 0.0;
  double accuracy = 0.0;
  std::size_t n = 0;
  PerClass<double> precision{};
  PerClass<double> recall{};
  PerClass<double> f1{};
  PerClass<int> support{};
  /// confusion[true][predicted]
  PerClass<PerClass<int>> confusion{};
};

/// Per-class F1 = 2PR/(P+R) (0 when P+R = 0), averaged with weights
/// support_c / N. Classes absent from y_true get weight 0.
/// Throws ContractError on a length mismatch or empty input.
EvalReport ComputeWaf(std::span<const EmotionLabel> y_true, std::span<const EmotionLabel> y_pred);
EvalReport ComputeWaf(std::span<const int> y_true, std::span<const int> y_pred);

nlohmann::json ToJson(const EvalReport &report);
/// Inverse of ToJson. Throws DataError on a malformed document.
EvalReport EvalReportFromJson(const nlohmann::json &j);

}  // namespace semer
