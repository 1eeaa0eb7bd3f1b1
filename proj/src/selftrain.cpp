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

#include "semer/selftrain.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>

#include "json.hpp"
#include "semer/trainer.hpp"

namespace semer {

void ThresholdPolicy::Validate() const {
  for (EmotionLabel label : kAllLabels) {
    const double t = (*this)[label];
    if (!(t > 0.0 && t <= 1.0))
      throw ConfigError("threshold for " + std::string(RenderLabel(label)) + " must lie in (0, 1]");
  }
}

ThresholdPolicy ParseThresholdPolicy(std::string_view text) {
  ThresholdPolicy policy;
  if (text.empty() || text == "default") return policy;
  while (!text.empty()) {
    const auto comma = text.find(',');
    std::string_view item = text.substr(0, comma);
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("threshold '" + std::string(item) + "' is not class=value");
    const auto label = ParseLabel(item.substr(0, eq));
    if (!label) throw ConfigError("unknown class in threshold '" + std::string(item) + "'");
    const auto value = item.substr(eq + 1);
    double t = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), t);
    if (ec != std::errc() || ptr != value.data() + value.size())
      throw ConfigError("bad threshold value in '" + std::string(item) + "'");
    policy.thresholds[static_cast<std::size_t>(Index(*label))] = t;
  }
  policy.Validate();
  return policy;
}

std::string RenderThresholdPolicy(const ThresholdPolicy &policy) {
  std::string out;
  for (EmotionLabel label : kAllLabels) {
    if (!out.empty()) out += ',';
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, policy[label]);
    out += RenderLabel(label);
    out += '=';
    out.append(buf, res.ptr);
  }
  return out;
}

std::string_view RenderDecision(Decision d) {
  return d == Decision::kAccepted ? "accepted" : "rejected";
}

std::string_view RenderReason(RejectReason r) {
  switch (r) {
    case RejectReason::kAccepted: return "accepted";
    case RejectReason::kAgreementFailed: return "agreement-failed";
    case RejectReason::kBelowThreshold: return "below-threshold";
  }
  return "?";
}

PseudoLabelRecord DecidePseudoLabel(std::string sample_id,
                                    const Eigen::Ref<const Eigen::RowVectorXd> &main_probs,
                                    const Eigen::Ref<const Eigen::RowVectorXd> &baseline_probs,
                                    const ThresholdPolicy &policy) {
  if (main_probs.size() != kNumClasses || baseline_probs.size() != kNumClasses)
    throw ContractError("pseudo-labeling expects " + std::to_string(kNumClasses) + " classes");
  PseudoLabelRecord r;
  r.sample_id = std::move(sample_id);
  const int main_c = ArgMax(main_probs);
  const int base_c = ArgMax(baseline_probs);
  r.main_label = LabelFromIndex(main_c);
  r.baseline_label = LabelFromIndex(base_c);
  r.conf_main = main_probs(main_c);
  r.conf_baseline = baseline_probs(base_c);
  if (main_c != base_c) {
    r.decision = Decision::kRejected;
    r.reason = RejectReason::kAgreementFailed;
    return r;
  }
  r.agreed_label = r.main_label;
  if (std::min(r.conf_main, r.conf_baseline) >= policy[*r.agreed_label]) {
    r.decision = Decision::kAccepted;
    r.reason = RejectReason::kAccepted;
  } else {
    r.decision = Decision::kRejected;
    r.reason = RejectReason::kBelowThreshold;
  }
  return r;
}

std::vector<PseudoLabelRecord> GeneratePseudoLabels(const EncoderBundle &main,
                                                    const BaselineClassifier &baseline,
                                                    std::span<const FeatureRecord> pool,
                                                    const VotingConfig &voting,
                                                    const ThresholdPolicy &policy) {
  policy.Validate();
  std::vector<PseudoLabelRecord> out;
  if (pool.empty()) return out;
  const FeatureMatrix data = ToFeatureMatrix(pool, main.config().d_in);
  const Matrix main_probs = VoteProbabilities(main, data, voting);
  const Matrix base_probs = BaselineProbabilities(baseline, data);
  out.reserve(pool.size());
  for (Eigen::Index i = 0; i < data.size(); ++i)
    out.push_back(DecidePseudoLabel(data.ids[static_cast<std::size_t>(i)], main_probs.row(i),
                                    base_probs.row(i), policy));
  return out;
}

PerClass<int> PseudoLabelSummary(std::span<const PseudoLabelRecord> records) {
  PerClass<int> counts{};
  for (const auto &r : records)
    if (r.decision == Decision::kAccepted && r.agreed_label)
      ++counts[static_cast<std::size_t>(Index(*r.agreed_label))];
  return counts;
}

std::vector<FeatureRecord> AcceptedAsTraining(std::span<const PseudoLabelRecord> records,
                                              std::span<const FeatureRecord> pool,
                                              const std::set<std::string> &forbidden_ids) {
  std::map<std::string_view, const FeatureRecord *> by_id;
  for (const auto &r : pool) by_id.emplace(r.sample_id, &r);
  std::vector<FeatureRecord> out;
  for (const auto &p : records) {
    if (p.decision != Decision::kAccepted) continue;
    if (!p.agreed_label) throw ContractError("accepted record '" + p.sample_id + "' has no label");
    if (forbidden_ids.contains(p.sample_id))
      throw ContractError("accepted pseudo label '" + p.sample_id + "' is a validation record");
    const auto it = by_id.find(p.sample_id);
    if (it == by_id.end())
      throw ContractError("accepted pseudo label '" + p.sample_id + "' is not in the pool");
    FeatureRecord rec = *it->second;
    rec.label = p.agreed_label;
    rec.origin = Origin::kPseudo;
    out.push_back(std::move(rec));
  }
  return out;
}

std::string RenderPseudoLabelLine(const PseudoLabelRecord &r) {
  nlohmann::ordered_json j;
  j["id"] = r.sample_id;
  j["agreed_label"] = r.agreed_label ? nlohmann::ordered_json(RenderLabel(*r.agreed_label))
                                     : nlohmann::ordered_json(nullptr);
  j["main_label"] = RenderLabel(r.main_label);
  j["baseline_label"] = RenderLabel(r.baseline_label);
  j["conf_main"] = r.conf_main;
  j["conf_baseline"] = r.conf_baseline;
  j["decision"] = RenderDecision(r.decision);
  j["reason"] = RenderReason(r.reason);
  return j.dump();
}

PseudoLabelRecord ParsePseudoLabelLine(std::string_view line) {
  const auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw DataError("pseudo-label line is not a JSON object");
  try {
    PseudoLabelRecord r;
    r.sample_id = j.at("id").get<std::string>();
    if (!j.at("agreed_label").is_null())
      r.agreed_label = ParseLabelOrThrow(j.at("agreed_label").get<std::string>());
    r.main_label = ParseLabelOrThrow(j.at("main_label").get<std::string>());
    r.baseline_label = ParseLabelOrThrow(j.at("baseline_label").get<std::string>());
    r.conf_main = j.at("conf_main").get<double>();
    r.conf_baseline = j.at("conf_baseline").get<double>();
    const auto decision = j.at("decision").get<std::string>();
    const auto reason = j.at("reason").get<std::string>();
    if (decision == "accepted")
      r.decision = Decision::kAccepted;
    else if (decision == "rejected")
      r.decision = Decision::kRejected;
    else
      throw DataError("unknown decision '" + decision + "'");
    if (reason == "accepted")
      r.reason = RejectReason::kAccepted;
    else if (reason == "agreement-failed")
      r.reason = RejectReason::kAgreementFailed;
    else if (reason == "below-threshold")
      r.reason = RejectReason::kBelowThreshold;
    else
      throw DataError("unknown reason '" + reason + "'");
    if ((r.decision == Decision::kAccepted) != (r.reason == RejectReason::kAccepted))
      throw DataError("decision and reason disagree for '" + r.sample_id + "'");
    return r;
  } catch (const nlohmann::json::exception &e) {
    throw DataError(std::string("pseudo-label line: ") + e.what());
  } catch (const ConfigError &e) {
    throw DataError(std::string("pseudo-label line: ") + e.what());
  }
}

void SavePseudoLabels(std::span<const PseudoLabelRecord> records, const std::filesystem::path &file) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + file.string());
  for (const auto &r : records) out << RenderPseudoLabelLine(r) << '\n';
  if (!out) throw DataError("write failed for " + file.string());
}

std::vector<PseudoLabelRecord> LoadPseudoLabels(const std::filesystem::path &file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("cannot read " + file.string());
  std::vector<PseudoLabelRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(ParsePseudoLabelLine(line));
  }
  return out;
}

}  // namespace semer
