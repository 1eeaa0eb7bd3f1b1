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

#include <vector>

#include "semer/layers.hpp"

namespace semer {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool operator==(const AdamConfig &) const = default;
};

/// Adam with bias correction. Holds moment estimates for a fixed parameter
/// list; the parameters must outlive the optimizer.
class Adam {
 public:
  Adam(ParameterList params, AdamConfig cfg = {});

  /// Applies one update from the accumulated grads, then zeroes them.
  void Step(double lr);
  long steps() const { return step_; }

 private:
  ParameterList params_;
  AdamConfig cfg_;
  std::vector<Matrix> first_;
  std::vector<Matrix> second_;
  long step_ = 0;
};

}  // namespace semer
