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

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "semer/datamodel.hpp"
#include "test_util.hpp"

namespace semer {
namespace {

using testing::MakeLabeled;
using testing::MakeRecord;
using testing::TempDir;
using testing::TinySpec;

std::string ReadFile(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

DatasetSplit SmallStore(int labeled, int unlabeled) {
  DatasetSplit split;
  split.dims = Dims{4, 3, 5};
  Rng rng(1);
  for (int i = 0; i < labeled; ++i)
    split.labeled_train.push_back(
        MakeRecord("l" + std::to_string(i), LabelFromIndex(i % kNumClasses), split.dims, rng));
  for (int i = 0; i < unlabeled; ++i)
    split.unlabeled.push_back(MakeRecord("u" + std::to_string(i), std::nullopt, split.dims, rng));
  return split;
}

TEST(FeatureStore, LoadsCounts) {
  TempDir dir;
  SaveFeatureStore(SmallStore(10, 5), dir.path());
  const DatasetSplit split = LoadFeatureStore(dir.path());
  EXPECT_EQ(split.NumLabeled(), 10u);
  EXPECT_EQ(split.NumUnlabeled(), 5u);
}

TEST(FeatureStore, EmptyUnlabeledPool) {
  TempDir dir;
  SaveFeatureStore(SmallStore(4, 0), dir.path());
  EXPECT_EQ(LoadFeatureStore(dir.path()).NumUnlabeled(), 0u);
  std::filesystem::remove(dir / "unlabeled.jsonl");
  EXPECT_EQ(LoadFeatureStore(dir.path()).NumUnlabeled(), 0u);
}

TEST(FeatureStore, RoundTripIsExact) {
  TempDir dir;
  const DatasetSplit original = GenerateSynthetic(TinySpec());
  SaveFeatureStore(original, dir.path());
  const DatasetSplit loaded = LoadFeatureStore(dir.path());
  EXPECT_EQ(loaded.dims, original.dims);
  EXPECT_EQ(loaded.labeled_train, original.labeled_train);
  EXPECT_EQ(loaded.validation, original.validation);
  EXPECT_EQ(loaded.unlabeled, original.unlabeled);
  EXPECT_EQ(loaded.hidden_gold, original.hidden_gold);
  EXPECT_EQ(loaded.seed, original.seed);
}

TEST(FeatureStore, RoundTripKeepsExtremeFloats) {
  TempDir dir;
  DatasetSplit split = SmallStore(2, 1);
  split.labeled_train[0].visual = {std::numeric_limits<float>::min(), -0.0f,
                                   std::numeric_limits<float>::max(), 1.0f / 3.0f};
  split.unlabeled[0].text[0] = std::numeric_limits<float>::denorm_min();
  SaveFeatureStore(split, dir.path());
  const DatasetSplit loaded = LoadFeatureStore(dir.path());
  EXPECT_EQ(loaded.labeled_train, split.labeled_train);
  EXPECT_EQ(loaded.unlabeled, split.unlabeled);
}

TEST(FeatureStore, MissingManifest) {
  TempDir dir;
  EXPECT_THROW(LoadFeatureStore(dir.path()), DataError);
}

TEST(FeatureStore, WidthMismatchNamesTheRecord) {
  TempDir dir;
  DatasetSplit split = SmallStore(3, 0);
  split.labeled_train[1].visual.pop_back();
  SaveFeatureStore(split, dir.path());
  try {
    LoadFeatureStore(dir.path());
    FAIL() << "expected a DataError";
  } catch (const DataError &e) {
    EXPECT_NE(std::string(e.what()).find("l1"), std::string::npos) << e.what();
  }
}

TEST(FeatureStore, DuplicateIds) {
  TempDir dir;
  DatasetSplit split = SmallStore(3, 0);
  split.labeled_train[2].sample_id = "l0";
  SaveFeatureStore(split, dir.path());
  EXPECT_THROW(LoadFeatureStore(dir.path()), DataError);
}

TEST(FeatureStore, MalformedLineReportsPosition) {
  TempDir dir;
  SaveFeatureStore(SmallStore(2, 0), dir.path());
  std::ofstream(dir / "labeled.jsonl", std::ios::app) << "{\"id\": \"x\", \"v\": [1,\n";
  try {
    LoadFeatureStore(dir.path());
    FAIL() << "expected a DataError";
  } catch (const DataError &e) {
    EXPECT_NE(std::string(e.what()).find("labeled.jsonl:3"), std::string::npos) << e.what();
  }
}

TEST(Records, ValidationRejectsNonFinite) {
  Rng rng(2);
  FeatureRecord r = MakeRecord("x", EmotionLabel::kSad, Dims{2, 2, 2}, rng);
  EXPECT_NO_THROW(ValidateRecord(r, Dims{2, 2, 2}));
  r.acoustic[1] = std::nanf("");
  EXPECT_THROW(ValidateRecord(r, Dims{2, 2, 2}), DataError);
}

TEST(Records, LineRoundTrip) {
  Rng rng(3);
  FeatureRecord r = MakeRecord("id \"quoted\"", EmotionLabel::kWorried, Dims{3, 1, 2}, rng);
  r.origin = Origin::kPseudo;
  EXPECT_EQ(ParseRecordLine(RenderRecordLine(r)), r);
  r.label.reset();
  r.origin = Origin::kGold;
  EXPECT_EQ(ParseRecordLine(RenderRecordLine(r)), r);
}

TEST(Synthetic, TrainingProfileGivesFullSizeLabeledSet) {
  SyntheticSpec spec;
  spec.dims = kExtractorDims;
  spec.unlabeled_count = 0;
  const DatasetSplit split = GenerateSynthetic(spec);
  EXPECT_EQ(split.NumLabeled(), 5030u);
  std::vector<FeatureRecord> all = split.labeled_train;
  all.insert(all.end(), split.validation.begin(), split.validation.end());
  EXPECT_EQ(ClassHistogram(all), (PerClass<int>{1248, 1208, 1038, 730, 616, 190}));
  EXPECT_EQ(static_cast<int>(all.front().text.size()), 5120);
}

TEST(Synthetic, SingleRecord) {
  SyntheticSpec spec;
  spec.class_priors = {1, 0, 0, 0, 0, 0};
  spec.unlabeled_count = 0;
  const DatasetSplit split = GenerateSynthetic(spec);
  ASSERT_EQ(split.NumLabeled(), 1u);
  const auto &r = split.labeled_train.empty() ? split.validation[0] : split.labeled_train[0];
  EXPECT_EQ(r.label, EmotionLabel::kNeutral);
}

TEST(Synthetic, AllZeroPriorsIsAnError) {
  SyntheticSpec spec;
  spec.class_priors = {};
  EXPECT_THROW(GenerateSynthetic(spec), ConfigError);
}

TEST(Synthetic, ByteIdenticalFilesForSameSeed) {
  TempDir a, b;
  SaveFeatureStore(GenerateSynthetic(TinySpec(5)), a.path());
  SaveFeatureStore(GenerateSynthetic(TinySpec(5)), b.path());
  for (const char *f : {"manifest.json", "labeled.jsonl", "validation.jsonl", "unlabeled.jsonl",
                        "hidden_gold.csv"})
    EXPECT_EQ(ReadFile(a / f), ReadFile(b / f)) << f;
}

TEST(Synthetic, DifferentSeedsDiffer) {
  const DatasetSplit a = GenerateSynthetic(TinySpec(5));
  const DatasetSplit b = GenerateSynthetic(TinySpec(6));
  EXPECT_NE(a.labeled_train[0].visual, b.labeled_train[0].visual);
}

TEST(Synthetic, SplitInvariantsAndHiddenGold) {
  const SyntheticSpec spec = TinySpec();
  const DatasetSplit split = GenerateSynthetic(spec);
  EXPECT_NO_THROW(ValidateSplit(split));
  EXPECT_EQ(split.NumUnlabeled(), static_cast<std::size_t>(spec.unlabeled_count));
  EXPECT_EQ(split.hidden_gold.size(), split.unlabeled.size());
  for (const auto &r : split.unlabeled) {
    EXPECT_FALSE(r.label.has_value());
    EXPECT_TRUE(split.hidden_gold.contains(r.sample_id));
  }
  for (const auto &r : split.validation) EXPECT_EQ(r.origin, Origin::kGold);
}

TEST(StratifiedSplit, FractionWithinOneRecordPerClass) {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    PerClass<int> counts{};
    for (auto &c : counts) c = static_cast<int>(rng.UniformIndex(40));
    counts[0] += 1;
    const auto records = MakeLabeled(counts, Dims{1, 1, 1}, 50 + trial);
    const auto [train, val] = StratifiedSplit(records, 0.2, rng.NextU64());
    EXPECT_EQ(train.size() + val.size(), records.size());
    const PerClass<int> v = ClassHistogram(val);
    for (int c = 0; c < kNumClasses; ++c) {
      if (counts[c] == 0) continue;
      const double frac = static_cast<double>(v[c]) / counts[c];
      EXPECT_GE(frac, 0.2 - 1.0 / counts[c] - 1e-12);
      EXPECT_LE(frac, 0.2 + 1.0 / counts[c] + 1e-12);
    }
  }
}

TEST(ClassHistogram, Basics) {
  EXPECT_EQ(ClassHistogram(std::vector<FeatureRecord>{}), PerClass<int>{});
  const auto sad = MakeLabeled({0, 0, 0, 3, 0, 0}, Dims{1, 1, 1}, 1);
  EXPECT_EQ(ClassHistogram(sad), (PerClass<int>{0, 0, 0, 3, 0, 0}));
  auto mixed = sad;
  mixed[0].label.reset();
  EXPECT_THROW(ClassHistogram(mixed), ContractError);
}

TEST(Labels, NamesRoundTrip) {
  for (EmotionLabel l : kAllLabels) EXPECT_EQ(ParseLabel(RenderLabel(l)), l);
  EXPECT_EQ(ParseLabel("surprised"), EmotionLabel::kSurprise);
  EXPECT_FALSE(ParseLabel("bored").has_value());
}

}  // namespace
}  // namespace semer
