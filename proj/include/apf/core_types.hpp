// Copyright 2026 The apfusion Authors
// SPDX-License-Identifier: Apache-2.0

// Domain types shared by every apfusion module.
//
// Canonical orderings are fixed throughout the library and in every file
// format and report:
//   traits     O, C, E, A, N
//   emotions   Anger, Disgust, Fear, Happy, Sadness, Surprise, Neutral
//   gender     Female, Male
//   ethnicity  African-American, Asian, Caucasian

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "apf/error.hpp"

namespace apf {

inline constexpr std::size_t kNumTraits = 5;
inline constexpr std::size_t kNumEmotions = 7;
inline constexpr std::size_t kNumGenders = 2;
inline constexpr std::size_t kNumEthnicities = 3;
inline constexpr std::size_t kNumAttributes = 5;
inline constexpr std::size_t kEmbeddingDim = 128;
inline constexpr double kSimplexTolerance = 1e-6;

enum class Trait : std::uint8_t { openness, conscientiousness, extraversion, agreeableness, neuroticism };
enum class Emotion : std::uint8_t { anger, disgust, fear, happy, sadness, surprise, neutral };
enum class Gender : std::uint8_t { female, male };
enum class Ethnicity : std::uint8_t { african_american, asian, caucasian };
enum class Split : std::uint8_t { train, validation, test };
enum class Attribute : std::uint8_t { emotion, attractiveness, age, gender, ethnicity };
enum class AudioSlice : std::uint8_t { none, whole, first_half, second_half };
enum class ConsensusMode : std::uint8_t { orderless, ordered, first_half, second_half };

inline constexpr std::array<std::string_view, kNumTraits> kTraitNames = {
    "openness", "conscientiousness", "extraversion", "agreeableness", "neuroticism"};
inline constexpr std::array<std::string_view, kNumTraits> kTraitLetters = {"O", "C", "E", "A", "N"};
inline constexpr std::array<std::string_view, kNumEmotions> kEmotionNames = {
    "anger", "disgust", "fear", "happy", "sadness", "surprise", "neutral"};
inline constexpr std::array<std::string_view, kNumGenders> kGenderNames = {"female", "male"};
inline constexpr std::array<std::string_view, kNumEthnicities> kEthnicityNames = {
    "african_american", "asian", "caucasian"};
inline constexpr std::array<std::string_view, 3> kSplitNames = {"train", "validation", "test"};
inline constexpr std::array<std::string_view, kNumAttributes> kAttributeNames = {
    "emotion", "attractiveness", "age", "gender", "ethnicity"};
inline constexpr std::array<std::string_view, 4> kAudioSliceNames = {"none", "whole", "first_half",
                                                                     "second_half"};
inline constexpr std::array<std::string_view, 4> kConsensusModeNames = {"orderless", "ordered",
                                                                        "first_half", "second_half"};

namespace detail {

template <class Enum, std::size_t N>
Enum parse_enum(std::string_view text, const std::array<std::string_view, N>& names,
                std::string_view what) {
  for (std::size_t i = 0; i < N; ++i)
    if (names[i] == text) return static_cast<Enum>(i);
  std::string allowed;
  for (auto n : names) {
    if (!allowed.empty()) allowed += ", ";
    allowed += n;
  }
  throw SchemaError("invalid " + std::string(what) + " '" + std::string(text) + "' (expected one of: " +
                    allowed + ")");
}

}  // namespace detail

inline std::string_view to_string(Trait t) { return kTraitNames[static_cast<std::size_t>(t)]; }
inline std::string_view to_string(Emotion e) { return kEmotionNames[static_cast<std::size_t>(e)]; }
inline std::string_view to_string(Gender g) { return kGenderNames[static_cast<std::size_t>(g)]; }
inline std::string_view to_string(Ethnicity e) { return kEthnicityNames[static_cast<std::size_t>(e)]; }
inline std::string_view to_string(Split s) { return kSplitNames[static_cast<std::size_t>(s)]; }
inline std::string_view to_string(Attribute a) { return kAttributeNames[static_cast<std::size_t>(a)]; }
inline std::string_view to_string(AudioSlice a) { return kAudioSliceNames[static_cast<std::size_t>(a)]; }
inline std::string_view to_string(ConsensusMode m) {
  return kConsensusModeNames[static_cast<std::size_t>(m)];
}

inline Emotion parse_emotion(std::string_view s) { return detail::parse_enum<Emotion>(s, kEmotionNames, "emotion"); }
inline Gender parse_gender(std::string_view s) { return detail::parse_enum<Gender>(s, kGenderNames, "gender"); }
inline Ethnicity parse_ethnicity(std::string_view s) {
  return detail::parse_enum<Ethnicity>(s, kEthnicityNames, "ethnicity");
}
inline Split parse_split(std::string_view s) { return detail::parse_enum<Split>(s, kSplitNames, "split"); }
inline Attribute parse_attribute(std::string_view s) {
  return detail::parse_enum<Attribute>(s, kAttributeNames, "attribute");
}
inline AudioSlice parse_audio_slice(std::string_view s) {
  return detail::parse_enum<AudioSlice>(s, kAudioSliceNames, "audio slice");
}
inline ConsensusMode parse_consensus_mode(std::string_view s) {
  return detail::parse_enum<ConsensusMode>(s, kConsensusModeNames, "consensus mode");
}

/// Trait letter (O, C, E, A, N) or full name.
inline Trait parse_trait(std::string_view s) {
  for (std::size_t i = 0; i < kNumTraits; ++i)
    if (kTraitLetters[i] == s) return static_cast<Trait>(i);
  return detail::parse_enum<Trait>(s, kTraitNames, "trait");
}

/// Big-Five scores in [0,1], stored in OCEAN order.
struct TraitVector {
  std::array<double, kNumTraits> values{};

  double& operator[](Trait t) { return values[static_cast<std::size_t>(t)]; }
  double operator[](Trait t) const { return values[static_cast<std::size_t>(t)]; }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  double openness() const { return values[0]; }
  double conscientiousness() const { return values[1]; }
  double extraversion() const { return values[2]; }
  double agreeableness() const { return values[3]; }
  double neuroticism() const { return values[4]; }

  friend bool operator==(const TraitVector&, const TraitVector&) = default;
};

inline const TraitVector& validate_trait_vector(const TraitVector& v) {
  for (std::size_t i = 0; i < kNumTraits; ++i) {
    const double x = v.values[i];
    if (!std::isfinite(x) || x < 0.0 || x > 1.0)
      throw SchemaError("trait " + std::string(kTraitNames[i]) + " out of range [0,1]: " +
                        std::to_string(x));
  }
  return v;
}

/// FI-style labels carry emotional stability in the N slot; this flips it back.
inline TraitVector invert_neuroticism(const TraitVector& v) {
  validate_trait_vector(v);
  TraitVector out = v;
  out[Trait::neuroticism] = 1.0 - v[Trait::neuroticism];
  return out;
}

/// Per-frame outputs of the attribute backbones. Attribute fields are
/// meaningless when `face_detected` is false and consumers skip such frames.
struct FrameAttributeRecord {
  std::uint32_t frame_index = 0;
  bool face_detected = false;
  std::array<double, kNumEmotions> emotion_probs{};
  double attractiveness = 0.0;
  double age = 0.0;
  std::array<double, kNumGenders> gender_probs{};
  std::array<double, kNumEthnicities> ethnicity_probs{};

  friend bool operator==(const FrameAttributeRecord&, const FrameAttributeRecord&) = default;
};

namespace detail {

template <std::size_t N>
void check_simplex(const std::array<double, N>& p, std::string_view field) {
  double sum = 0.0;
  for (double x : p) {
    if (!std::isfinite(x) || x < 0.0 || x > 1.0)
      throw SchemaError(std::string(field) + " has a component outside [0,1]");
    sum += x;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance)
    throw SchemaError(std::string(field) + " does not sum to 1 (sum=" + std::to_string(sum) + ")");
}

}  // namespace detail

inline void validate_frame_record(const FrameAttributeRecord& r) {
  if (!r.face_detected) return;
  detail::check_simplex(r.emotion_probs, "emotion_probs");
  detail::check_simplex(r.gender_probs, "gender_probs");
  detail::check_simplex(r.ethnicity_probs, "ethnicity_probs");
  if (!std::isfinite(r.attractiveness) || r.attractiveness < 0.0 || r.attractiveness > 1.0)
    throw SchemaError("attractiveness outside [0,1]");
  if (!std::isfinite(r.age) || r.age <= 0.0) throw SchemaError("age must be a positive number of years");
}

struct FrameAttributeSeries {
  std::string video_id;
  std::uint32_t frame_count = 0;
  std::vector<FrameAttributeRecord> records;

  friend bool operator==(const FrameAttributeSeries&, const FrameAttributeSeries&) = default;
};

inline void validate_series(const FrameAttributeSeries& s) {
  if (s.frame_count == 0) throw SchemaError(s.video_id + ": frame_count must be positive");
  std::optional<std::uint32_t> prev;
  for (const auto& r : s.records) {
    if (prev && r.frame_index <= *prev)
      throw SchemaError(s.video_id + ": frame_index not strictly increasing at " + std::to_string(r.frame_index));
    if (r.frame_index >= s.frame_count)
      throw SchemaError(s.video_id + ": frame_index " + std::to_string(r.frame_index) + " >= frame_count");
    validate_frame_record(r);
    prev = r.frame_index;
  }
}

using Embedding = std::array<float, kEmbeddingDim>;

/// Scene embeddings per sampled frame plus whole/half audio embeddings.
struct EmbeddingBundle {
  std::string video_id;
  std::map<std::uint32_t, Embedding> visual;
  Embedding audio_whole{};
  Embedding audio_first_half{};
  Embedding audio_second_half{};

  const Embedding& audio(AudioSlice slice) const {
    switch (slice) {
      case AudioSlice::whole: return audio_whole;
      case AudioSlice::first_half: return audio_first_half;
      case AudioSlice::second_half: return audio_second_half;
      case AudioSlice::none: break;
    }
    throw UsageError("no audio embedding for slice 'none'");
  }

  friend bool operator==(const EmbeddingBundle&, const EmbeddingBundle&) = default;
};

inline void validate_embeddings(const EmbeddingBundle& b, std::uint32_t frame_count) {
  auto finite = [&](const Embedding& e, std::string_view what) {
    for (float x : e)
      if (!std::isfinite(x)) throw SchemaError(b.video_id + ": non-finite value in " + std::string(what));
  };
  finite(b.audio_whole, "audio_whole");
  finite(b.audio_first_half, "audio_first_half");
  finite(b.audio_second_half, "audio_second_half");
  for (const auto& [idx, e] : b.visual) {
    if (idx >= frame_count)
      throw SchemaError(b.video_id + ": visual frame " + std::to_string(idx) + " >= frame_count");
    finite(e, "visual");
  }
}

struct VideoRecord {
  std::string video_id;
  std::optional<Split> split;
  TraitVector labels;
  std::optional<Gender> gender;
  std::optional<Ethnicity> ethnicity;

  friend bool operator==(const VideoRecord&, const VideoRecord&) = default;
};

/// Which modalities feed the fusion network and how dynamic attributes are aggregated.
struct ModalityConfig {
  AudioSlice audio = AudioSlice::none;
  std::array<bool, kNumAttributes> attributes{};
  ConsensusMode emotion_consensus = ConsensusMode::ordered;
  ConsensusMode attractiveness_consensus = ConsensusMode::ordered;
  int m_train = 10;
  int m_test = 50;

  bool has(Attribute a) const { return attributes[static_cast<std::size_t>(a)]; }
  ModalityConfig& with(Attribute a) {
    attributes[static_cast<std::size_t>(a)] = true;
    return *this;
  }
  std::size_t attribute_count() const {
    std::size_t n = 0;
    for (bool b : attributes) n += b ? 1 : 0;
    return n;
  }

  friend bool operator==(const ModalityConfig&, const ModalityConfig&) = default;
};

inline void validate_config(const ModalityConfig& c) {
  if (c.m_train < 1) throw SchemaError("m_train must be >= 1");
  if (c.m_test < 1) throw SchemaError("m_test must be >= 1");
  auto in_range = [](auto e, std::size_t n) { return static_cast<std::size_t>(e) < n; };
  if (!in_range(c.audio, 4) || !in_range(c.emotion_consensus, 4) || !in_range(c.attractiveness_consensus, 4))
    throw SchemaError("modality config holds an invalid enumeration value");
}

/// Short label in the style of the ablation tables, e.g. "V+1A+Em+Att+Age".
inline std::string describe(const ModalityConfig& c) {
  std::string s = "V";
  switch (c.audio) {
    case AudioSlice::whole: s += "+A"; break;
    case AudioSlice::first_half: s += "+1A"; break;
    case AudioSlice::second_half: s += "+2A"; break;
    case AudioSlice::none: break;
  }
  static constexpr std::array<std::string_view, kNumAttributes> kShort = {"Em", "Att", "Age", "Gender", "Ethn"};
  for (std::size_t i = 0; i < kNumAttributes; ++i)
    if (c.attributes[i]) s += "+" + std::string(kShort[i]);
  return s;
}

}  // namespace apf
