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

#include "semer/datamodel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace semer {

namespace fs = std::filesystem;
using nlohmann::json;

int Dims::operator[](Modality m) const {
  switch (m) {
    case Modality::kVisual:
      return v;
    case Modality::kAcoustic:
      return a;
    default:
      return t;
  }
}

std::string_view RenderOrigin(Origin origin) {
  switch (origin) {
    case Origin::kGold:
      return "gold";
    case Origin::kPseudo:
      return "pseudo";
    default:
      return "duplicate";
  }
}

Origin ParseOrigin(std::string_view text) {
  if (text == "gold") return Origin::kGold;
  if (text == "pseudo") return Origin::kPseudo;
  if (text == "duplicate") return Origin::kDuplicate;
  throw DataError("unknown record origin '" + std::string(text) + "'");
}

const std::vector<float> &FeatureRecord::Features(Modality m) const {
  switch (m) {
    case Modality::kVisual:
      return visual;
    case Modality::kAcoustic:
      return acoustic;
    default:
      return text;
  }
}

std::vector<float> &FeatureRecord::Features(Modality m) {
  return const_cast<std::vector<float> &>(std::as_const(*this).Features(m));
}

void ValidateRecord(const FeatureRecord &record, const Dims &dims) {
  for (Modality m : kAllModalities) {
    const auto &x = record.Features(m);
    if (static_cast<int>(x.size()) != dims[m]) {
      throw DataError("record '" + record.sample_id + "': modality " +
                      std::string(ModalityKey(m)) + " has " + std::to_string(x.size()) +
                      " values, manifest declares " + std::to_string(dims[m]));
    }
    for (float value : x) {
      if (!std::isfinite(value))
        throw DataError("record '" + record.sample_id + "': non-finite feature value");
    }
  }
}

void ValidateSplit(const DatasetSplit &split) {
  std::set<std::string> ids;
  auto check_pool = [&](const std::vector<FeatureRecord> &pool, std::string_view name,
                        bool labeled) {
    for (const auto &r : pool) {
      ValidateRecord(r, split.dims);
      if (labeled && !r.label)
        throw DataError("record '" + r.sample_id + "' in " + std::string(name) + " has no label");
      if (!labeled && r.label)
        throw DataError("record '" + r.sample_id + "' in unlabeled pool carries a label");
      if (!ids.insert(r.sample_id).second)
        throw DataError("duplicate sample_id '" + r.sample_id + "'");
    }
  };
  check_pool(split.labeled_train, "labeled", true);
  check_pool(split.validation, "validation", true);
  check_pool(split.unlabeled, "unlabeled", false);
  for (const auto &r : split.validation) {
    if (r.origin != Origin::kGold)
      throw DataError("validation record '" + r.sample_id + "' is not gold-labeled");
  }
}

// ---------------------------------------------------------------------------
// jsonl records

namespace {

void AppendFloats(std::string &out, const std::vector<float> &values) {
  out.push_back('[');
  char buf[32];
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out.push_back(',');
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), values[i]);
    out.append(buf, end);
  }
  out.push_back(']');
}

/// SAX handler for one record line. Numbers are converted from their source
/// text straight to float so no double rounding happens on the way in.
class RecordSax {
 public:
  explicit RecordSax(FeatureRecord &out) : out_(out) {}

  bool null() {
    if (depth_ == 1 && key_ == "label") {
      out_.label.reset();
      return true;
    }
    return Fail("unexpected null");
  }
  bool boolean(bool) { return Fail("unexpected boolean"); }
  bool number_integer(json::number_integer_t v) { return Push(static_cast<float>(v)); }
  bool number_unsigned(json::number_unsigned_t v) { return Push(static_cast<float>(v)); }
  bool number_float(json::number_float_t, const std::string &text) {
    float value = 0.0f;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() && ec != std::errc::result_out_of_range)
      return Fail("bad number '" + text + "'");
    return Push(value);
  }
  bool string(std::string &s) {
    if (depth_ != 1) return Fail("unexpected string");
    if (key_ == "id") {
      out_.sample_id = s;
      seen_id_ = true;
    } else if (key_ == "label") {
      auto label = ParseLabel(s);
      if (!label) return Fail("unknown label '" + s + "'");
      out_.label = *label;
    } else if (key_ == "origin") {
      out_.origin = ParseOrigin(s);
    } else {
      return Fail("unknown key '" + key_ + "'");
    }
    return true;
  }
  bool binary(json::binary_t &) { return Fail("unexpected binary"); }
  bool start_object(std::size_t) {
    if (depth_ != 0) return Fail("nested object");
    ++depth_;
    return true;
  }
  bool key(std::string &k) {
    key_ = k;
    return true;
  }
  bool end_object() {
    --depth_;
    return true;
  }
  bool start_array(std::size_t) {
    if (depth_ != 1) return Fail("unexpected array");
    if (key_ == "v")
      target_ = &out_.visual;
    else if (key_ == "a")
      target_ = &out_.acoustic;
    else if (key_ == "t")
      target_ = &out_.text;
    else
      return Fail("unknown array key '" + key_ + "'");
    target_->clear();
    ++depth_;
    return true;
  }
  bool end_array() {
    target_ = nullptr;
    --depth_;
    return true;
  }
  bool parse_error(std::size_t, const std::string &, const nlohmann::detail::exception &e) {
    error_ = e.what();
    return false;
  }

  const std::string &error() const { return error_; }
  bool seen_id() const { return seen_id_; }

 private:
  bool Push(float value) {
    if (target_ == nullptr) return Fail("number outside a feature array");
    target_->push_back(value);
    return true;
  }
  bool Fail(std::string message) {
    error_ = std::move(message);
    return false;
  }

  FeatureRecord &out_;
  std::vector<float> *target_ = nullptr;
  std::string key_;
  std::string error_;
  int depth_ = 0;
  bool seen_id_ = false;
};

std::vector<FeatureRecord> ReadPool(const fs::path &file) {
  std::vector<FeatureRecord> records;
  if (!fs::exists(file)) return records;
  std::ifstream in(file);
  if (!in) throw DataError("cannot open " + file.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(ParseRecordLine(line));
    } catch (const DataError &e) {
      throw DataError(file.filename().string() + ":" + std::to_string(line_no) + ": " +
                      e.what());
    }
  }
  return records;
}

void WritePool(const fs::path &file, const std::vector<FeatureRecord> &records) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + file.string());
  for (const auto &r : records) out << RenderRecordLine(r) << '\n';
  if (!out) throw DataError("write failed for " + file.string());
}

}  // namespace

FeatureRecord ParseRecordLine(std::string_view line) {
  FeatureRecord record;
  RecordSax sax(record);
  const bool ok = json::sax_parse(line.begin(), line.end(), &sax);
  if (!ok) throw DataError("malformed record: " + sax.error());
  if (!sax.seen_id()) throw DataError("record without an id");
  return record;
}

std::string RenderRecordLine(const FeatureRecord &record) {
  std::string out;
  out.reserve(16 * (record.visual.size() + record.acoustic.size() + record.text.size()) + 96);
  out += "{\"id\":";
  out += json(record.sample_id).dump();
  out += ",\"v\":";
  AppendFloats(out, record.visual);
  out += ",\"a\":";
  AppendFloats(out, record.acoustic);
  out += ",\"t\":";
  AppendFloats(out, record.text);
  out += ",\"label\":";
  if (record.label) {
    out += '"';
    out += RenderLabel(*record.label);
    out += '"';
  } else {
    out += "null";
  }
  out += ",\"origin\":\"";
  out += RenderOrigin(record.origin);
  out += "\"}";
  return out;
}

// ---------------------------------------------------------------------------
// Feature store

DatasetSplit LoadFeatureStore(const fs::path &dir) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path))
    throw DataError("format error: no manifest.json in " + dir.string());

  json manifest;
  try {
    std::ifstream in(manifest_path);
    manifest = json::parse(in);
  } catch (const json::exception &e) {
    throw DataError(std::string("format error: manifest.json: ") + e.what());
  }

  DatasetSplit split;
  try {
    split.dims.v = manifest.at("dims").at("v").get<int>();
    split.dims.a = manifest.at("dims").at("a").get<int>();
    split.dims.t = manifest.at("dims").at("t").get<int>();
    split.seed = manifest.value("seed", std::uint64_t{0});
    if (manifest.contains("label_order")) {
      const auto order = manifest.at("label_order").get<std::vector<std::string>>();
      if (order.size() != kNumClasses)
        throw DataError("format error: label_order must list 6 classes");
      for (int i = 0; i < kNumClasses; ++i) {
        if (ParseLabelOrThrow(order[static_cast<std::size_t>(i)]) != LabelFromIndex(i))
          throw DataError("format error: label_order differs from the fixed class order");
      }
    }
  } catch (const json::exception &e) {
    throw DataError(std::string("format error: manifest.json: ") + e.what());
  }
  if (split.dims.v < 1 || split.dims.a < 1 || split.dims.t < 1)
    throw DataError("format error: manifest dims must be positive");

  split.labeled_train = ReadPool(dir / "labeled.jsonl");
  split.validation = ReadPool(dir / "validation.jsonl");
  split.unlabeled = ReadPool(dir / "unlabeled.jsonl");

  const fs::path gold_path = dir / "hidden_gold.csv";
  if (fs::exists(gold_path)) {
    std::ifstream in(gold_path);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto comma = line.rfind(',');
      if (comma == std::string::npos) throw DataError("hidden_gold.csv: malformed line");
      split.hidden_gold[line.substr(0, comma)] =
          ParseLabelOrThrow(std::string_view(line).substr(comma + 1));
    }
  }

  ValidateSplit(split);
  return split;
}

void SaveFeatureStore(const DatasetSplit &split, const fs::path &dir) {
  fs::create_directories(dir);
  json manifest;
  manifest["dims"] = {{"v", split.dims.v}, {"a", split.dims.a}, {"t", split.dims.t}};
  json order = json::array();
  for (EmotionLabel l : kAllLabels) order.push_back(std::string(RenderLabel(l)));
  manifest["label_order"] = order;
  manifest["counts"] = {{"labeled", split.labeled_train.size()},
                        {"validation", split.validation.size()},
                        {"unlabeled", split.unlabeled.size()}};
  manifest["seed"] = split.seed;
  if (!split.hidden_gold.empty()) manifest["hidden_gold"] = "hidden_gold.csv";

  {
    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    out << manifest.dump(2) << '\n';
  }
  WritePool(dir / "labeled.jsonl", split.labeled_train);
  WritePool(dir / "validation.jsonl", split.validation);
  WritePool(dir / "unlabeled.jsonl", split.unlabeled);
  if (!split.hidden_gold.empty()) {
    std::ofstream out(dir / "hidden_gold.csv", std::ios::trunc);
    out << "name,discrete\n";
    // Pool order keeps the file aligned with unlabeled.jsonl.
    for (const auto &r : split.unlabeled) {
      auto it = split.hidden_gold.find(r.sample_id);
      if (it != split.hidden_gold.end())
        out << r.sample_id << ',' << RenderLabel(it->second) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Synthetic generator

namespace {

struct ClassGeometry {
  // means[c][m] and projections[m] are dense row vectors / matrices.
  std::vector<std::array<std::vector<double>, kNumModalities>> means;
  std::array<std::vector<double>, kNumModalities> projections;  // d_m x k, row-major
};

ClassGeometry DrawGeometry(const SyntheticSpec &spec, Rng &rng) {
  const int k = spec.latent_dim;
  ClassGeometry g;
  for (Modality m : kAllModalities) {
    const int d = spec.dims[m];
    auto &p = g.projections[static_cast<std::size_t>(Index(m))];
    p.resize(static_cast<std::size_t>(d) * static_cast<std::size_t>(k));
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (double &x : p) x = rng.Normal() * scale;
  }
  const double rho = spec.cross_modal_coupling;
  const double private_weight = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  g.means.resize(kNumClasses);
  for (int c = 0; c < kNumClasses; ++c) {
    std::vector<double> shared(static_cast<std::size_t>(k));
    for (double &x : shared) x = rng.Normal() / std::sqrt(static_cast<double>(k));
    for (Modality m : kAllModalities) {
      const int d = spec.dims[m];
      const auto &p = g.projections[static_cast<std::size_t>(Index(m))];
      auto &mean = g.means[static_cast<std::size_t>(c)][static_cast<std::size_t>(Index(m))];
      mean.assign(static_cast<std::size_t>(d), 0.0);
      for (int i = 0; i < d; ++i) {
        double projected = 0.0;
        for (int j = 0; j < k; ++j)
          projected += p[static_cast<std::size_t>(i * k + j)] * shared[static_cast<std::size_t>(j)];
        const double priv = rng.Normal() / std::sqrt(static_cast<double>(d));
        mean[static_cast<std::size_t>(i)] =
            spec.means_scale * (rho * projected + private_weight * priv);
      }
    }
  }
  return g;
}

FeatureRecord DrawRecord(const SyntheticSpec &spec, const ClassGeometry &g, int cls,
                         std::string id, Rng &rng) {
  const int k = spec.latent_dim;
  std::vector<double> latent(static_cast<std::size_t>(k));
  for (double &x : latent) x = spec.sample_latent_scale * rng.Normal();
  FeatureRecord r;
  r.sample_id = std::move(id);
  for (Modality m : kAllModalities) {
    const int d = spec.dims[m];
    const auto &p = g.projections[static_cast<std::size_t>(Index(m))];
    const auto &mean = g.means[static_cast<std::size_t>(cls)][static_cast<std::size_t>(Index(m))];
    auto &out = r.Features(m);
    out.resize(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      double shared = 0.0;
      for (int j = 0; j < k; ++j)
        shared += p[static_cast<std::size_t>(i * k + j)] * latent[static_cast<std::size_t>(j)];
      const double value = mean[static_cast<std::size_t>(i)] +
                           spec.noise_scale * (shared + rng.Normal());
      out[static_cast<std::size_t>(i)] = static_cast<float>(value);
    }
  }
  return r;
}

std::string PaddedId(std::string_view prefix, std::size_t n) {
  std::string digits = std::to_string(n);
  if (digits.size() < 6) digits.insert(0, 6 - digits.size(), '0');
  return std::string(prefix) + digits;
}

template <typename T>
void Shuffle(std::vector<T> &v, Rng &rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.UniformIndex(i)]);
}

}  // namespace

std::pair<std::vector<FeatureRecord>, std::vector<FeatureRecord>> StratifiedSplit(
    std::vector<FeatureRecord> records, double validation_fraction, std::uint64_t seed) {
  if (validation_fraction < 0.0 || validation_fraction >= 1.0)
    throw ConfigError("validation fraction must lie in [0, 1)");
  Rng rng(seed);
  PerClass<std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].label) throw ContractError("stratified split needs labeled records");
    by_class[static_cast<std::size_t>(Index(*records[i].label))].push_back(i);
  }
  std::vector<bool> to_validation(records.size(), false);
  for (auto &members : by_class) {
    Shuffle(members, rng);
    const auto n_val = static_cast<std::size_t>(
        std::llround(validation_fraction * static_cast<double>(members.size())));
    for (std::size_t j = 0; j < n_val; ++j) to_validation[members[j]] = true;
  }
  std::vector<FeatureRecord> train, validation;
  for (std::size_t i = 0; i < records.size(); ++i)
    (to_validation[i] ? validation : train).push_back(std::move(records[i]));
  return {std::move(train), std::move(validation)};
}

DatasetSplit GenerateSynthetic(const SyntheticSpec &spec) {
  int total = 0;
  for (int n : spec.class_priors) {
    if (n < 0) throw ConfigError("class counts must be non-negative");
    total += n;
  }
  if (total == 0) throw ConfigError("empty dataset: every class count is zero");
  if (spec.dims.v < 1 || spec.dims.a < 1 || spec.dims.t < 1)
    throw ConfigError("feature dims must be positive");
  if (spec.unlabeled_count < 0) throw ConfigError("unlabeled count must be non-negative");
  if (spec.latent_dim < 1) throw ConfigError("latent_dim must be positive");
  if (spec.sample_latent_scale < 0.0) throw ConfigError("sample_latent_scale must be non-negative");
  if (spec.means_scale <= 0.0 || spec.noise_scale <= 0.0)
    throw ConfigError("means_scale and noise_scale must be positive");
  if (spec.cross_modal_coupling < 0.0 || spec.cross_modal_coupling > 1.0)
    throw ConfigError("cross_modal_coupling must lie in [0, 1]");

  Rng rng(SubSeed(spec.seed, "synthetic"));
  const ClassGeometry geometry = DrawGeometry(spec, rng);

  std::vector<int> classes;
  for (int c = 0; c < kNumClasses; ++c)
    classes.insert(classes.end(), static_cast<std::size_t>(spec.class_priors[static_cast<std::size_t>(c)]), c);
  Shuffle(classes, rng);

  std::vector<FeatureRecord> labeled;
  labeled.reserve(classes.size());
  for (std::size_t i = 0; i < classes.size(); ++i) {
    auto r = DrawRecord(spec, geometry, classes[i], PaddedId("lab_", i), rng);
    r.label = LabelFromIndex(classes[i]);
    labeled.push_back(std::move(r));
  }

  DatasetSplit split;
  split.dims = spec.dims;
  split.seed = spec.seed;
  auto [train, validation] =
      StratifiedSplit(std::move(labeled), spec.validation_fraction, SubSeed(spec.seed, "split"));
  split.labeled_train = std::move(train);
  split.validation = std::move(validation);

  // The unlabeled pool follows the same class mixture.
  std::vector<double> cumulative(kNumClasses);
  double acc = 0.0;
  for (int c = 0; c < kNumClasses; ++c) {
    acc += static_cast<double>(spec.class_priors[static_cast<std::size_t>(c)]) / total;
    cumulative[static_cast<std::size_t>(c)] = acc;
  }
  split.unlabeled.reserve(static_cast<std::size_t>(spec.unlabeled_count));
  for (int i = 0; i < spec.unlabeled_count; ++i) {
    const double u = rng.Uniform();
    int cls = 0;
    while (cls < kNumClasses - 1 && (u >= cumulative[static_cast<std::size_t>(cls)] ||
                                     spec.class_priors[static_cast<std::size_t>(cls)] == 0))
      ++cls;
    auto r = DrawRecord(spec, geometry, cls, PaddedId("unl_", static_cast<std::size_t>(i)), rng);
    split.hidden_gold[r.sample_id] = LabelFromIndex(cls);
    split.unlabeled.push_back(std::move(r));
  }
  return split;
}

PerClass<int> ClassHistogram(std::span<const FeatureRecord> records) {
  PerClass<int> counts{};
  for (const auto &r : records) {
    if (!r.label) throw ContractError("class histogram over unlabeled record '" + r.sample_id + "'");
    ++counts[static_cast<std::size_t>(Index(*r.label))];
  }
  return counts;
}

}  // namespace semer
