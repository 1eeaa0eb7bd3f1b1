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

// Noise embedding enhancement: a diffusion-style forward noising of feature
// vectors, N = sqrt(abar_T) * F + sqrt(1 - abar_T) * eps with eps ~ N(0, I)
// and abar_T the cumulative product of (1 - beta_t).

#pragma once

#include <optional>
#include <span>
#include <vector>

#include "semer/common.hpp"

namespace semer {

struct NeeConfig {
  bool enabled = true;
  int steps = 100;
  double beta1 = 0.001;
  double betaT = 0.1;
  /// Draw the step uniformly from [1, T] per sample instead of always T.
  bool random_step = false;

  bool operator==(const NeeConfig &) const = default;
};

class NoiseSchedule {
 public:
  /// Linear betas from beta1 to betaT over `steps` steps.
  /// Requires steps >= 1 and 0 < beta1 <= betaT < 1 (ConfigError otherwise).
  static NoiseSchedule Linear(int steps, double beta1, double betaT);
  /// Arbitrary betas in [0, 1) without the positivity check; test hook for
  /// degenerate schedules such as all-zero betas.
  static NoiseSchedule FromBetasUnchecked(std::vector<double> betas);

  int steps() const { return static_cast<int>(betas_.size()); }
  const std::vector<double> &betas() const { return betas_; }
  const std::vector<double> &alpha_bars() const { return alpha_bars_; }
  /// abar_t for 1-based step t.
  double AlphaBar(int step) const;
  double TerminalAlphaBar() const { return alpha_bars_.back(); }

 private:
  explicit NoiseSchedule(std::vector<double> betas);

  std::vector<double> betas_;
  std::vector<double> alpha_bars_;
};

/// BuildSchedule(T, beta1, betaT) with the validated linear interpolation.
inline NoiseSchedule BuildSchedule(int steps, double beta1, double betaT) {
  return NoiseSchedule::Linear(steps, beta1, betaT);
}

struct NoisedEmbedding {
  Modality modality = Modality::kVisual;
  std::vector<double> vector;
  int step_used = 0;
};

/// Noises one feature vector at `step` (default: the terminal step T).
/// Deterministic in `seed`.
NoisedEmbedding NoiseEmbed(std::span<const double> feature, const NoiseSchedule &schedule,
                           std::uint64_t seed, Modality modality = Modality::kVisual,
                           std::optional<int> step = std::nullopt);

/// In-place kernel shared by the single-vector and batched paths:
/// out[i] = sqrt(abar) * in[i] + sqrt(1 - abar) * eps_i.
void NoiseInto(std::span<const double> in, std::span<double> out, double alpha_bar, Rng &rng);

}  // namespace semer
