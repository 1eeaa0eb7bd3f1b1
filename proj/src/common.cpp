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

#include "semer/common.hpp"

#include <cmath>
#include <numbers>

namespace semer {

namespace {

constexpr std::array<std::string_view, kNumClasses> kLabelNames = {
    "neutral", "angry", "happy", "sad", "worried", "surprise"};

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

EmotionLabel LabelFromIndex(int index) {
  if (index < 0 || index >= kNumClasses)
    throw ContractError("class index out of range: " + std::to_string(index));
  return static_cast<EmotionLabel>(index);
}

std::string_view RenderLabel(EmotionLabel label) {
  return kLabelNames[static_cast<std::size_t>(Index(label))];
}

std::optional<EmotionLabel> ParseLabel(std::string_view text) {
  for (int i = 0; i < kNumClasses; ++i)
    if (kLabelNames[static_cast<std::size_t>(i)] == text)
      return static_cast<EmotionLabel>(i);
  if (text == "surprised") return EmotionLabel::kSurprise;
  if (text == "worry") return EmotionLabel::kWorried;
  if (text == "anger") return EmotionLabel::kAngry;
  if (text == "happiness") return EmotionLabel::kHappy;
  if (text == "sadness") return EmotionLabel::kSad;
  return std::nullopt;
}

EmotionLabel ParseLabelOrThrow(std::string_view text) {
  auto label = ParseLabel(text);
  if (!label) throw DataError("unknown emotion label '" + std::string(text) + "'");
  return *label;
}

std::string_view ModalityKey(Modality m) {
  static constexpr std::array<std::string_view, 3> keys = {"v", "a", "t"};
  return keys[static_cast<std::size_t>(Index(m))];
}

std::string_view HeadName(Head h) {
  static constexpr std::array<std::string_view, 4> names = {"A", "V", "T", "F"};
  return names[static_cast<std::size_t>(Index(h))];
}

std::uint64_t Rng::UniformIndex(std::uint64_t n) {
  if (n == 0) throw ContractError("UniformIndex over an empty range");
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double Rng::Normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1;
  do {
    u1 = Uniform();
  } while (u1 <= 0.0);
  const double u2 = Uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::uint64_t SubSeed(std::uint64_t root, std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return SplitMix64(root ^ SplitMix64(h));
}

std::uint64_t SubSeed(std::uint64_t root, std::uint64_t index) {
  return SplitMix64(root ^ SplitMix64(index + 0x51ed270b27ULL));
}

}  // namespace semer
