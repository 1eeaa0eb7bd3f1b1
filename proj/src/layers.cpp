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

#include "semer/layers.hpp"

#include <cmath>
#include <numbers>

namespace semer {

Linear::Linear(std::string name, int in, int out) {
  weight_.name = name + ".weight";
  bias_.name = name + ".bias";
  weight_.Resize(in, out);
  bias_.Resize(1, out);
}

void Linear::Init(Rng &rng) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(weight_.value.rows()));
  for (Eigen::Index j = 0; j < weight_.value.cols(); ++j)
    for (Eigen::Index i = 0; i < weight_.value.rows(); ++i)
      weight_.value(i, j) = rng.Normal() * scale;
  bias_.value.setZero();
}

Matrix Linear::Forward(const Matrix &x) const {
  if (x.cols() != weight_.value.rows())
    throw ContractError(weight_.name + ": input width " + std::to_string(x.cols()) +
                        ", expected " + std::to_string(weight_.value.rows()));
  Matrix y = x * weight_.value;
  y.rowwise() += bias_.value.row(0);
  return y;
}

Matrix Linear::Backward(const Matrix &x, const Matrix &dy, bool need_input_grad) {
  weight_.grad.noalias() += x.transpose() * dy;
  bias_.grad += dy.colwise().sum();
  if (!need_input_grad) return {};
  return dy * weight_.value.transpose();
}

void Linear::Collect(ParameterList &out) {
  out.push_back(&weight_);
  out.push_back(&bias_);
}

void Linear::Collect(ConstParameterList &out) const {
  out.push_back(&weight_);
  out.push_back(&bias_);
}

LayerNorm::LayerNorm(std::string name, int width) {
  gain_.name = name + ".gain";
  shift_.name = name + ".shift";
  gain_.Resize(1, width);
  gain_.value.setOnes();
  shift_.Resize(1, width);
}

Matrix LayerNorm::Forward(const Matrix &x, Cache *cache) const {
  const auto n = static_cast<double>(x.cols());
  Matrix normalized(x.rows(), x.cols());
  Eigen::VectorXd inv_std(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).sum() / n;
    const auto centered = x.row(r).array() - mean;
    const double var = centered.square().sum() / n;
    inv_std(r) = 1.0 / std::sqrt(var + kEps);
    normalized.row(r) = centered * inv_std(r);
  }
  Matrix y = normalized.array().rowwise() * gain_.value.row(0).array();
  y.rowwise() += shift_.value.row(0);
  if (cache != nullptr) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

Matrix LayerNorm::Backward(const Cache &cache, const Matrix &dy) {
  gain_.grad += (dy.array() * cache.normalized.array()).colwise().sum().matrix();
  shift_.grad += dy.colwise().sum();
  const Matrix dxhat = dy.array().rowwise() * gain_.value.row(0).array();
  const auto n = static_cast<double>(dy.cols());
  Matrix dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const double mean_d = dxhat.row(r).sum() / n;
    const double mean_dx = dxhat.row(r).dot(cache.normalized.row(r)) / n;
    dx.row(r) = cache.inv_std(r) *
                (dxhat.row(r).array() - mean_d - cache.normalized.row(r).array() * mean_dx);
  }
  return dx;
}

void LayerNorm::Collect(ParameterList &out) {
  out.push_back(&gain_);
  out.push_back(&shift_);
}

void LayerNorm::Collect(ConstParameterList &out) const {
  out.push_back(&gain_);
  out.push_back(&shift_);
}

namespace {
constexpr double kGeluK = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluC = 0.044715;
}  // namespace

Matrix Gelu(const Matrix &x) {
  return x.unaryExpr([](double v) {
    return 0.5 * v * (1.0 + std::tanh(kGeluK * (v + kGeluC * v * v * v)));
  });
}

Matrix GeluBackward(const Matrix &x, const Matrix &dy) {
  const Matrix slope = x.unaryExpr([](double v) {
    const double t = std::tanh(kGeluK * (v + kGeluC * v * v * v));
    return 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * kGeluK * (1.0 + 3.0 * kGeluC * v * v);
  });
  return dy.cwiseProduct(slope);
}

Matrix DropoutMask(Eigen::Index rows, Eigen::Index cols, double p, Rng &rng) {
  if (p <= 0.0) return Matrix::Ones(rows, cols);
  const double keep_scale = 1.0 / (1.0 - p);
  Matrix mask(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) mask(i, j) = rng.Uniform() < p ? 0.0 : keep_scale;
  return mask;
}

Matrix ConcatCols(std::initializer_list<const Matrix *> parts) {
  Eigen::Index rows = (*parts.begin())->rows();
  Eigen::Index cols = 0;
  for (const Matrix *p : parts) {
    if (p->rows() != rows) throw ContractError("concat of batches with different sizes");
    cols += p->cols();
  }
  Matrix out(rows, cols);
  Eigen::Index offset = 0;
  for (const Matrix *p : parts) {
    out.middleCols(offset, p->cols()) = *p;
    offset += p->cols();
  }
  return out;
}

}  // namespace semer
