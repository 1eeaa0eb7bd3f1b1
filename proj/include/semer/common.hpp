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

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace semer {

// ---------------------------------------------------------------------------
// Errors. Each family maps onto one CLI exit code (see tools/semer_main.cpp).

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration value or combination (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data (exit code 3).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an operation's precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// A pipeline stage failed; carries the stage name.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string &what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string &stage() const { return stage_; }

 private:
  std::string stage_;
};

// ---------------------------------------------------------------------------
// Emotion classes. The order below defines class indices everywhere.

enum class EmotionLabel : int {
  kNeutral = 0,
  kAngry = 1,
  kHappy = 2,
  kSad = 3,
  kWorried = 4,
  kSurprise = 5,
};

inline constexpr int kNumClasses = 6;

inline constexpr std::array<EmotionLabel, kNumClasses> kAllLabels = {
    EmotionLabel::kNeutral, EmotionLabel::kAngry,   EmotionLabel::kHappy,
    EmotionLabel::kSad,     EmotionLabel::kWorried, EmotionLabel::kSurprise};

inline constexpr int Index(EmotionLabel label) { return static_cast<int>(label); }

EmotionLabel LabelFromIndex(int index);
std::string_view RenderLabel(EmotionLabel label);
/// Accepts the canonical lowercase names; also "surprised"/"worry" spellings.
std::optional<EmotionLabel> ParseLabel(std::string_view text);
EmotionLabel ParseLabelOrThrow(std::string_view text);

/// Per-class table indexed by EmotionLabel.
template <typename T>
using PerClass = std::array<T, kNumClasses>;

// ---------------------------------------------------------------------------
// Modalities and classifier heads.

enum class Modality : int { kVisual = 0, kAcoustic = 1, kText = 2 };
inline constexpr int kNumModalities = 3;
inline constexpr std::array<Modality, kNumModalities> kAllModalities = {
    Modality::kVisual, Modality::kAcoustic, Modality::kText};
inline constexpr int Index(Modality m) { return static_cast<int>(m); }
std::string_view ModalityKey(Modality m);  // "v", "a", "t"

/// Classifier heads: three unimodal (A, V, T) and one fusion (F).
enum class Head : int { kA = 0, kV = 1, kT = 2, kF = 3 };
inline constexpr int kNumHeads = 4;
inline constexpr std::array<Head, kNumHeads> kAllHeads = {Head::kA, Head::kV,
                                                          Head::kT, Head::kF};
inline constexpr int Index(Head h) { return static_cast<int>(h); }
std::string_view HeadName(Head h);  // "A", "V", "T", "F"

/// Modality a unimodal head reads from.
inline constexpr Modality HeadModality(Head h) {
  switch (h) {
    case Head::kA:
      return Modality::kAcoustic;
    case Head::kV:
      return Modality::kVisual;
    default:
      return Modality::kText;
  }
}

// ---------------------------------------------------------------------------
// Randomness. mt19937_64 is specified by the standard; the distributions
// below are written out so draws do not depend on the standard library.

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }
  /// Uniform in [0, 1).
  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform integer in [0, n).
  std::uint64_t UniformIndex(std::uint64_t n);
  /// Standard normal (Box-Muller, caches the second draw).
  double Normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Derives a named sub-seed from a root seed; stable across runs and builds.
std::uint64_t SubSeed(std::uint64_t root, std::string_view name);
std::uint64_t SubSeed(std::uint64_t root, std::uint64_t index);

}  // namespace semer
