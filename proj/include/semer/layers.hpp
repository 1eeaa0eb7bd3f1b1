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

// Dense building blocks with explicit forward/backward passes.
//
// Batches are row-major in the sense of one sample per matrix row. Forward
// calls never mutate parameters; backward calls take the cache written by the
// matching forward and accumulate into Parameter::grad.

#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "semer/common.hpp"

namespace semer {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  void Resize(Eigen::Index rows, Eigen::Index cols) {
    value = Matrix::Zero(rows, cols);
    grad = Matrix::Zero(rows, cols);
  }
  void ZeroGrad() { grad.setZero(); }
};

/// Named, ordered parameter view used by optimizers, checkpoints and audits.
using ParameterList = std::vector<Parameter *>;
using ConstParameterList = std::vector<const Parameter *>;

class Linear {
 public:
  Linear() = default;
  Linear(std::string name, int in, int out);

  /// Gaussian weights with variance 1/in; zero bias.
  void Init(Rng &rng);
  Matrix Forward(const Matrix &x) const;
  /// `x` is the forward input. Returns dL/dx, or an empty matrix when
  /// `need_input_grad` is false.
  Matrix Backward(const Matrix &x, const Matrix &dy, bool need_input_grad = true);
  void Collect(ParameterList &out);
  void Collect(ConstParameterList &out) const;

  int in() const { return static_cast<int>(weight_.value.rows()); }
  int out() const { return static_cast<int>(weight_.value.cols()); }

 private:
  Parameter weight_;
  Parameter bias_;
};

class LayerNorm {
 public:
  struct Cache {
    Matrix normalized;
    Eigen::VectorXd inv_std;
  };

  LayerNorm() = default;
  LayerNorm(std::string name, int width);

  Matrix Forward(const Matrix &x, Cache *cache) const;
  Matrix Backward(const Cache &cache, const Matrix &dy);
  void Collect(ParameterList &out);
  void Collect(ConstParameterList &out) const;

 private:
  static constexpr double kEps = 1e-5;
  Parameter gain_;
  Parameter shift_;
};

/// GELU, tanh approximation. Smooth, which keeps finite-difference checks
/// free of kinks.
Matrix Gelu(const Matrix &x);
Matrix GeluBackward(const Matrix &x, const Matrix &dy);

/// Inverted dropout mask (entries 0 or 1/(1-p)); all ones when p == 0.
Matrix DropoutMask(Eigen::Index rows, Eigen::Index cols, double p, Rng &rng);

/// Row-wise concatenation [a | b | ...].
Matrix ConcatCols(std::initializer_list<const Matrix *> parts);

}  // namespace semer
