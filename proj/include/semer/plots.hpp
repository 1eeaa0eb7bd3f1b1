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

// Self-contained SVG charts for run reports.

#pragma once

#include <string>

#include "semer/metrics.hpp"
#include "semer/trainer.hpp"

namespace semer {

/// Per-epoch training loss and selection score of one stage, side by side.
std::string LossCurveSvg(const TrainReport &report);

/// Row-normalized heat map of confusion[true][predicted] with raw counts.
std::string ConfusionSvg(const EvalReport &report);

/// Stacked per-class bars: gold, pseudo-labeled and oversampled duplicates.
std::string ClassDistributionSvg(const PerClass<int> &gold, const PerClass<int> &pseudo,
                                 const PerClass<int> &duplicates);

}  // namespace semer
