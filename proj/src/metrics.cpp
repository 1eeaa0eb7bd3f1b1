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

#include "semer/metrics.hpp"

#include <vector>

namespace semer {

EvalReport ComputeWaf(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size())
    throw ContractError("WAF: " + std::to_string(y_true.size()) + " gold labels but " +
                        std::to_string(y_pred.size()) + " predictions");
  if (y_true.empty()) throw ContractError("WAF over an empty label set");

  EvalReport r;
  r.n = y_true.size();
  int correct = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i];
    const int p = y_pred[i];
    if (t < 0 || t >= kNumClasses || p < 0 || p >= kNumClasses)
      throw ContractError("WAF: class index out of range");
    ++r.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
    ++r.support[static_cast<std::size_t>(t)];
    if (t == p) ++correct;
  }
  const double n = static_cast<double>(r.n);
  r.accuracy = correct / n;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const double tp = r.confusion[c][c];
    int predicted = 0;
    for (std::size_t t = 0; t < kNumClasses; ++t) predicted += r.confusion[t][c];
    r.precision[c] = predicted > 0 ? tp / predicted : 0.0;
    r.recall[c] = r.support[c] > 0 ? tp / r.support[c] : 0.0;
    const double denom = r.precision[c] + r.recall[c];
    r.f1[c] = denom > 0.0 ? 2.0 * r.precision[c] * r.recall[c] / denom : 0.0;
    r.waf += r.support[c] * r.f1[c];
  }
  // Dividing once keeps a perfect score at exactly 1.
  r.waf /= n;
  return r;
}

EvalReport ComputeWaf(std::span<const EmotionLabel> y_true, std::span<const EmotionLabel> y_pred) {
  std::vector<int> t, p;
  t.reserve(y_true.size());
  p.reserve(y_pred.size());
  for (EmotionLabel l : y_true) t.push_back(Index(l));
  for (EmotionLabel l : y_pred) p.push_back(Index(l));
  return ComputeWaf(std::span<const int>(t), std::span<const int>(p));
}

nlohmann::json ToJson(const EvalReport &report) {
  nlohmann::json per_class = nlohmann::json::object();
  for (EmotionLabel l : kAllLabels) {
    const auto c = static_cast<std::size_t>(Index(l));
    per_class[std::string(RenderLabel(l))] = {{"precision", report.precision[c]},
                                              {"recall", report.recall[c]},
                                              {"f1", report.f1[c]},
                                              {"support", report.support[c]}};
  }
  nlohmann::json confusion = nlohmann::json::array();
  for (const auto &row : report.confusion) confusion.push_back(row);
  nlohmann::json order = nlohmann::json::array();
  for (EmotionLabel l : kAllLabels) order.push_back(std::string(RenderLabel(l)));
  return {{"waf", report.waf},   {"accuracy", report.accuracy}, {"n", report.n},
          {"label_order", order}, {"per_class", per_class},     {"confusion", confusion}};
}

EvalReport EvalReportFromJson(const nlohmann::json &j) {
  try {
    EvalReport r;
    r.waf = j.at("waf").get<double>();
    r.accuracy = j.at("accuracy").get<double>();
    r.n = j.at("n").get<std::size_t>();
    const auto &per_class = j.at("per_class");
    for (EmotionLabel l : kAllLabels) {
      const auto c = static_cast<std::size_t>(Index(l));
      const auto &e = per_class.at(std::string(RenderLabel(l)));
      r.precision[c] = e.at("precision").get<double>();
      r.recall[c] = e.at("recall").get<double>();
      r.f1[c] = e.at("f1").get<double>();
      r.support[c] = e.at("support").get<int>();
    }
    const auto &confusion = j.at("confusion");
    if (confusion.size() != kNumClasses) throw DataError("confusion matrix must be 6x6");
    for (std::size_t t = 0; t < kNumClasses; ++t) {
      if (confusion[t].size() != kNumClasses) throw DataError("confusion matrix must be 6x6");
      for (std::size_t p = 0; p < kNumClasses; ++p) r.confusion[t][p] = confusion[t][p].get<int>();
    }
    return r;
  } catch (const nlohmann::json::exception &e) {
    throw DataError(std::string("malformed evaluation report: ") + e.what());
  }
}

}  // namespace semer
