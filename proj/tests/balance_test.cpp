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

#include <algorithm>
#include <map>

#include "semer/balance.hpp"
#include "test_util.hpp"

namespace semer {
namespace {

using testing::MakeLabeled;

constexpr Dims kSmall{2, 2, 2};
constexpr PerClass<int> kTrainCounts{1248, 1208, 1038, 730, 616, 190};

std::map<EmotionLabel, int> Minority(int target) {
  return {{EmotionLabel::kSad, target}, {EmotionLabel::kWorried, target},
          {EmotionLabel::kSurprise, target}};
}

PerClass<int> Added(const std::vector<FeatureRecord> &out) {
  PerClass<int> added{};
  for (const auto &r : out)
    if (r.origin == Origin::kDuplicate) ++added[Index(*r.label)];
  return added;
}

TEST(Oversample, MinorityTargetsOf850) {
  const auto records = MakeLabeled(kTrainCounts, kSmall, 1);
  const auto out = Oversample(records, {Minority(850), 11});
  const PerClass<int> added = Added(out);
  EXPECT_EQ(added[Index(EmotionLabel::kSad)], 120);
  EXPECT_EQ(added[Index(EmotionLabel::kWorried)], 234);
  EXPECT_EQ(added[Index(EmotionLabel::kSurprise)], 660);
  EXPECT_EQ(added[Index(EmotionLabel::kNeutral)], 0);
  EXPECT_EQ(ClassHistogram(out)[Index(EmotionLabel::kSurprise)], 850);
}

TEST(Oversample, MinorityTargetsOf1000MatchArithmetic) {
  const auto records = MakeLabeled(kTrainCounts, kSmall, 2);
  const auto out = Oversample(records, {Minority(1000), 12});
  const PerClass<int> added = Added(out);
  const PerClass<int> after = ClassHistogram(out);
  for (int c = 0; c < kNumClasses; ++c) {
    const int n = kTrainCounts[c];
    const int target = c >= Index(EmotionLabel::kSad) ? 1000 : n;
    EXPECT_EQ(added[c], std::max(n, target) - n) << c;
    EXPECT_EQ(after[c], std::max(n, target)) << c;
  }
  EXPECT_EQ(added[Index(EmotionLabel::kSad)], 270);
  EXPECT_EQ(added[Index(EmotionLabel::kWorried)], 384);
  EXPECT_EQ(added[Index(EmotionLabel::kSurprise)], 810);
}

TEST(Oversample, DeterministicUnderSeed) {
  const auto records = MakeLabeled({30, 20, 10, 5, 3, 1}, kSmall, 3);
  const OversampleConfig cfg{Minority(40), 77};
  EXPECT_EQ(Oversample(records, cfg), Oversample(records, cfg));
  const auto other = Oversample(records, {Minority(40), 78});
  EXPECT_NE(Oversample(records, cfg), other);
}

TEST(Oversample, OriginalsPreservedAndDuplicatesAreExactCopies) {
  Rng rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    PerClass<int> counts{};
    for (auto &c : counts) c = 1 + static_cast<int>(rng.UniformIndex(15));
    const auto records = MakeLabeled(counts, kSmall, 100 + trial);
    std::map<EmotionLabel, int> targets;
    for (EmotionLabel l : kAllLabels)
      if (rng.Uniform() < 0.7) targets[l] = static_cast<int>(rng.UniformIndex(30));
    const auto out = Oversample(records, {targets, rng.NextU64()});

    // Originals lead the output unchanged.
    ASSERT_GE(out.size(), records.size());
    for (std::size_t i = 0; i < records.size(); ++i) ASSERT_EQ(out[i], records[i]);

    std::map<std::string, const FeatureRecord *> by_id;
    for (const auto &r : records) by_id[r.sample_id] = &r;
    std::set<std::string> ids;
    for (const auto &r : out) {
      ASSERT_TRUE(ids.insert(r.sample_id).second) << "duplicate id " << r.sample_id;
      if (r.origin != Origin::kDuplicate) continue;
      const auto hash = r.sample_id.find("#dup");
      ASSERT_NE(hash, std::string::npos);
      const FeatureRecord *source = by_id.at(r.sample_id.substr(0, hash));
      EXPECT_EQ(r.label, source->label);
      EXPECT_EQ(r.visual, source->visual);
      EXPECT_EQ(r.acoustic, source->acoustic);
      EXPECT_EQ(r.text, source->text);
    }

    // Never downsamples; reaches every target above the current count.
    const PerClass<int> before = ClassHistogram(records), after = ClassHistogram(out);
    for (EmotionLabel l : kAllLabels) {
      const int c = Index(l);
      EXPECT_GE(after[c], before[c]);
      const auto it = targets.find(l);
      EXPECT_EQ(after[c], it == targets.end() ? before[c] : std::max(before[c], it->second));
    }
  }
}

TEST(Oversample, EmptyTargetsAreIdentity) {
  const auto records = MakeLabeled({3, 2, 1, 0, 0, 4}, kSmall, 5);
  EXPECT_EQ(Oversample(records, {}), records);
}

TEST(Oversample, RejectsUnlabeledRecords) {
  auto records = MakeLabeled({2, 0, 0, 0, 0, 0}, kSmall, 6);
  records[1].label.reset();
  EXPECT_THROW(Oversample(records, {Minority(5), 1}), ContractError);
}

TEST(OversampleTargets, ParseAndRender) {
  const auto targets = ParseOversampleTargets("sad=850,worried=850,surprise=850");
  EXPECT_EQ(targets, Minority(850));
  EXPECT_EQ(ParseOversampleTargets(RenderOversampleTargets(targets)), targets);
  EXPECT_TRUE(ParseOversampleTargets("").empty());
  EXPECT_THROW(ParseOversampleTargets("sad"), ConfigError);
  EXPECT_THROW(ParseOversampleTargets("bored=3"), ConfigError);
  EXPECT_THROW(ParseOversampleTargets("sad=x"), ConfigError);
}

}  // namespace
}  // namespace semer
