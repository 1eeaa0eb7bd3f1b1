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

#include "semer/noise.hpp"

#include <cmath>

namespace semer {

NoiseSchedule::NoiseSchedule(std::vector<double> betas) : betas_(std::move(betas)) {
  alpha_bars_.reserve(betas_.size());
  double product = 1.0;
  for (double beta : betas_) {
    product *= 1.0 - beta;
    alpha_bars_.push_back(product);
  }
}

NoiseSchedule NoiseSchedule::Linear(int steps, double beta1, double betaT) {
  if (steps < 1) throw ConfigError("noise schedule needs at least one step");
  if (!(beta1 > 0.0) || !(beta1 <= betaT) || !(betaT < 1.0))
    throw ConfigError("noise schedule needs 0 < beta1 <= betaT < 1");
  std::vector<double> betas(static_cast<std::size_t>(steps));
  if (steps == 1) {
    betas[0] = beta1;
  } else {
    for (int t = 0; t < steps; ++t) {
      const double frac = static_cast<double>(t) / static_cast<double>(steps - 1);
      betas[static_cast<std::size_t>(t)] = beta1 + frac * (betaT - beta1);
    }
  }
  return NoiseSchedule(std::move(betas));
}

NoiseSchedule NoiseSchedule::FromBetasUnchecked(std::vector<double> betas) {
  if (betas.empty()) throw ConfigError("noise schedule needs at least one step");
  for (double b : betas)
    if (!(b >= 0.0 && b < 1.0)) throw ConfigError("betas must lie in [0, 1)");
  return NoiseSchedule(std::move(betas));
}

double NoiseSchedule::AlphaBar(int step) const {
  if (step < 1 || step > steps())
    throw ContractError("noise step " + std::to_string(step) + " outside [1, T]");
  return alpha_bars_[static_cast<std::size_t>(step - 1)];
}

void NoiseInto(std::span<const double> in, std::span<double> out, double alpha_bar, Rng &rng) {
  if (in.size() != out.size()) throw ContractError("noise buffers differ in length");
  const double signal = std::sqrt(alpha_bar);
  const double noise = std::sqrt(1.0 - alpha_bar);
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = signal * in[i] + noise * rng.Normal();
}

NoisedEmbedding NoiseEmbed(std::span<const double> feature, const NoiseSchedule &schedule,
                           std::uint64_t seed, Modality modality, std::optional<int> step) {
  NoisedEmbedding out;
  out.modality = modality;
  out.step_used = step.value_or(schedule.steps());
  out.vector.resize(feature.size());
  Rng rng(seed);
  NoiseInto(feature, out.vector, schedule.AlphaBar(out.step_used), rng);
  return out;
}

}  // namespace semer
