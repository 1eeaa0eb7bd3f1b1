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

#include <map>
#include <vector>

#include "semer/ensemble.hpp"

namespace semer {
namespace {

std::map<Head, std::vector<double>> Heads(std::vector<double> a, std::vector<double> v,
                                          std::vector<double> t, std::vector<double> f) {
  return {{Head::kA, std::move(a)}, {Head::kV, std::move(v)}, {Head::kT, std::move(t)},
          {Head::kF, std::move(f)}};
}

std::vector<double> OneHot(int k, int n) {
  std::vector<double> v(static_cast<std::size_t>(n), 0.0);
  v[static_cast<std::size_t>(k)] = 1.0;
  return v;
}

std::vector<double> RandomSimplex(int n, Rng &rng) {
  std::vector<double> v(static_cast<std::size_t>(n));
  double sum = 0.0;
  for (auto &x : v) sum += x = rng.Uniform() + 1e-3;
  for (auto &x : v) x /= sum;
  return v;
}

TEST(SoftVote, ThreeClassWorkedExample) {
  const VoteResult r = SoftVote(Heads({0.6, 0.3, 0.1}, {0.2, 0.7, 0.1}, {0.1, 0.8, 0.1},
                                      {0.5, 0.4, 0.1}),
                                VotingConfig{});
  // Independent sums: 0.7*0.6 + 0.5*0.2 + 0.4*0.1 + 0.7*0.5 etc.
  ASSERT_EQ(r.aggregate.size(), 3u);
  EXPECT_NEAR(r.aggregate[0], 0.91, 1e-12);
  EXPECT_NEAR(r.aggregate[1], 1.16, 1e-12);
  EXPECT_NEAR(r.aggregate[2], 0.23, 1e-12);
  EXPECT_EQ(r.winner, 1);
  EXPECT_NEAR(r.margin, 0.25, 1e-12);
}

TEST(SoftVote, UnanimousOneHotMarginIsWeightSum) {
  for (int k = 0; k < kNumClasses; ++k) {
    const auto h = OneHot(k, kNumClasses);
    const VoteResult r = SoftVote(Heads(h, h, h, h), VotingConfig{});
    EXPECT_EQ(r.winner, k);
    EXPECT_EQ(r.label(), LabelFromIndex(k));
    EXPECT_NEAR(r.margin, 0.7 + 0.5 + 0.4 + 0.7, 1e-12);
  }
}

// Every 3-class confidence vector with entries in {0, 1/4, ..., 1}, every
// combination over the four heads, checked against integer arithmetic.
TEST(SoftVote, ExhaustiveRationalEquivalence) {
  std::vector<std::array<int, 3>> simplex;
  for (int a = 0; a <= 4; ++a)
    for (int b = 0; a + b <= 4; ++b) simplex.push_back({a, b, 4 - a - b});
  const std::array<int, 4> w10{7, 5, 4, 7};  // weights times 10
  long checked = 0;
  for (const auto &a : simplex)
    for (const auto &v : simplex)
      for (const auto &t : simplex)
        for (const auto &f : simplex) {
          std::array<long, 3> exact{};
          for (int c = 0; c < 3; ++c)
            exact[c] = w10[0] * a[c] + w10[1] * v[c] + w10[2] * t[c] + w10[3] * f[c];
          int best = 0;
          for (int c = 1; c < 3; ++c)
            if (exact[c] > exact[best]) best = c;
          auto frac = [](const std::array<int, 3> &x) {
            return std::vector<double>{x[0] / 4.0, x[1] / 4.0, x[2] / 4.0};
          };
          const VoteResult r = SoftVote(Heads(frac(a), frac(v), frac(t), frac(f)), VotingConfig{});
          for (int c = 0; c < 3; ++c)
            ASSERT_NEAR(r.aggregate[c], exact[c] / 40.0, 1e-12);
          ASSERT_EQ(r.winner, best);
          ++checked;
        }
  EXPECT_EQ(checked, 15L * 15 * 15 * 15);
}

TEST(SoftVote, ArgmaxInvariantUnderUniformWeightScaling) {
  Rng rng(3);
  VotingConfig base;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto heads = Heads(RandomSimplex(6, rng), RandomSimplex(6, rng), RandomSimplex(6, rng),
                             RandomSimplex(6, rng));
    const double s = trial % 2 ? 10.0 : 0.01 + 5.0 * rng.Uniform();
    VotingConfig scaled;
    for (int h = 0; h < kNumHeads; ++h) scaled.weights[h] = base.weights[h] * s;
    const VoteResult r1 = SoftVote(heads, base);
    const VoteResult r2 = SoftVote(heads, scaled);
    ASSERT_EQ(r1.winner, r2.winner);
    std::vector<int> o1(6), o2(6);
    for (int c = 0; c < 6; ++c) o1[c] = o2[c] = c;
    std::stable_sort(o1.begin(), o1.end(), [&](int x, int y) { return r1.aggregate[x] > r1.aggregate[y]; });
    std::stable_sort(o2.begin(), o2.end(), [&](int x, int y) { return r2.aggregate[x] > r2.aggregate[y]; });
    ASSERT_EQ(o1, o2);
  }
}

TEST(SoftVote, UnanimityOnRandomInputs) {
  Rng rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    const int c = static_cast<int>(rng.UniformIndex(kNumClasses));
    auto unanimous = [&] {
      // Random simplex point whose unique argmax is c.
      auto v = RandomSimplex(kNumClasses, rng);
      const auto top = std::max_element(v.begin(), v.end());
      std::swap(*top, v[static_cast<std::size_t>(c)]);
      v[static_cast<std::size_t>(c)] += 1e-3;
      double sum = 0.0;
      for (double x : v) sum += x;
      for (auto &x : v) x /= sum;
      return v;
    };
    VotingConfig cfg;
    for (auto &w : cfg.weights) w = 0.01 + rng.Uniform();
    const VoteResult r = SoftVote(Heads(unanimous(), unanimous(), unanimous(), unanimous()), cfg);
    ASSERT_EQ(r.winner, c) << trial;
    ASSERT_GE(r.margin, 0.0);
  }
}

TEST(SoftVote, TiesGoToLowestIndex) {
  const std::vector<double> u(6, 1.0 / 6.0);
  const VoteResult r = SoftVote(Heads(u, u, u, u), VotingConfig{});
  EXPECT_EQ(r.winner, 0);
  EXPECT_NEAR(r.margin, 0.0, 1e-15);
}

TEST(SoftVote, Errors) {
  const auto h = OneHot(0, 6);
  std::map<Head, std::vector<double>> missing{{Head::kA, h}, {Head::kV, h}, {Head::kT, h}};
  EXPECT_THROW(SoftVote(missing, VotingConfig{}), ContractError);
  EXPECT_THROW(SoftVote(Heads(h, h, h, {0.5, 0.1, 0, 0, 0, 0}), VotingConfig{}), ContractError);
  VotingConfig zero;
  zero.weights = {0, 0, 0, 0};
  EXPECT_THROW(SoftVote(Heads(h, h, h, h), zero), ConfigError);
  VotingConfig negative;
  negative.weights = {0.7, -0.1, 0.4, 0.7};
  EXPECT_THROW(negative.Validate(), ConfigError);
}

TEST(SoftVote, BatchedScoresMatchPerSampleVotes) {
  Rng rng(8);
  PerHead<Matrix> probs;
  for (auto &m : probs) {
    m.resize(20, kNumClasses);
    for (int i = 0; i < 20; ++i) {
      const auto v = RandomSimplex(kNumClasses, rng);
      for (int c = 0; c < kNumClasses; ++c) m(i, c) = v[c];
    }
  }
  const VotingConfig cfg;
  const Matrix scores = SoftVoteScores(probs, cfg);
  for (int i = 0; i < 20; ++i) {
    std::map<Head, std::vector<double>> heads;
    for (Head h : kAllHeads) {
      const auto &m = probs[Index(h)];
      for (int c = 0; c < kNumClasses; ++c) heads[h].push_back(m(i, c));
    }
    const VoteResult r = SoftVote(heads, cfg);
    for (int c = 0; c < kNumClasses; ++c) EXPECT_NEAR(scores(i, c), r.aggregate[c], 1e-12);
    EXPECT_EQ(ArgMax(scores.row(i)), r.winner);
  }
}

}  // namespace
}  // namespace semer
