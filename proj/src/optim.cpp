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

#include "semer/optim.hpp"

#include <cmath>

namespace semer {

Adam::Adam(ParameterList params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
  first_.reserve(params_.size());
  second_.reserve(params_.size());
  for (const Parameter *p : params_) {
    first_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    second_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

void Adam::Step(double lr) {
  ++step_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  const double step_size = lr / c1;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter &p = *params_[i];
    first_[i] = cfg_.beta1 * first_[i] + (1.0 - cfg_.beta1) * p.grad;
    second_[i] = cfg_.beta2 * second_[i] + (1.0 - cfg_.beta2) * p.grad.cwiseAbs2();
    p.value.array() -=
        step_size * first_[i].array() / ((second_[i].array() / c2).sqrt() + cfg_.eps);
    p.grad.setZero();
  }
}

}  // namespace semer
