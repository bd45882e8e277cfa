// Copyright 2026 The apfusion Authors
// SPDX-License-Identifier: Apache-2.0

// Synthetic stand-in for a first-impressions corpus, with known couplings
// between labels and every feature stream so the pipeline can be validated
// end to end.
//
// Per video i, all randomness comes from the sub-stream derive_seed(seed, i),
// consumed in a fixed order: group draws, label draws, then features. Labels
// can therefore be produced without the (much larger) feature payloads and
// still match the full generator exactly.
//
// Labels: clip(Normal(label_mean, label_std) + offsets[gender] + offsets[ethnicity], 0, 1).
// With u the standardized label and s = signal_strength, each stream carries
// a mixture c*u + sqrt(1-c^2)*r with independent nuisance r:
//
//   stream              coupling c   driven by
//   visual embedding    0.6 s        all traits
//   audio, first half   s            all traits
//   audio, second half  s / 3        all traits
//   audio, whole        mean of the two half embeddings
//   age                 0.7 s        C
//   attractiveness      0.6 s        (O + C + E - N) / 2
//   emotion logits      s            Happy <- E, A; Anger/Disgust <- -A; Sadness/Fear <- N
//
// At s = 0 nothing but the group offsets links features to labels.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "apf/consensus.hpp"
#include "apf/core_types.hpp"
#include "apf/error.hpp"
#include "apf/io.hpp"
#include "apf/rng.hpp"

namespace apf {

/// Additive label offsets; unlike TraitVector these may be negative.
using TraitOffsets = std::array<double, kNumTraits>;

inline constexpr std::array<std::string_view, 5> kGroupNames = {"female", "male", "african_american", "asian",
                                                                 "caucasian"};

struct SynthConfig {
  std::size_t n_videos = 100;
  std::uint32_t frames_per_video = 450;
  std::uint64_t seed = 0;
  double label_mean = 0.5;
  double label_std = 0.15;
  double gender_proportion_female = 0.55;
  std::array<double, kNumEthnicities> ethnicity_proportions{0.11, 0.03, 0.86};
  std::map<std::string, TraitOffsets> bias_offsets;
  double signal_strength = 0.9;
  double noise_std = 0.5;
  double face_miss_rate = 0.05;
  // Visual embeddings are emitted at the union of these equidistant grids.
  std::vector<int> visual_sample_counts{10, 50};
};

inline void validate_synth_config(const SynthConfig& c) {
  if (c.n_videos == 0) throw SchemaError("synth: n_videos must be positive");
  if (c.frames_per_video == 0) throw SchemaError("synth: frames_per_video must be positive");
  if (!(c.noise_std >= 0.0)) throw SchemaError("synth: noise_std must be >= 0");
  if (!(c.label_std >= 0.0)) throw SchemaError("synth: label_std must be >= 0");
  if (!(c.label_mean >= 0.0 && c.label_mean <= 1.0)) throw SchemaError("synth: label_mean must lie in [0,1]");
  if (!(c.signal_strength >= 0.0 && c.signal_strength <= 1.0))
    throw SchemaError("synth: signal_strength must lie in [0,1]");
  if (!(c.gender_proportion_female >= 0.0 && c.gender_proportion_female <= 1.0))
    throw SchemaError("synth: gender proportion must lie in [0,1]");
  if (!(c.face_miss_rate >= 0.0 && c.face_miss_rate < 1.0)) throw SchemaError("synth: face_miss_rate must lie in [0,1)");
  double sum = 0.0;
  for (double p : c.ethnicity_proportions) {
    if (!(p >= 0.0 && p <= 1.0)) throw SchemaError("synth: ethnicity proportions must lie in [0,1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw SchemaError("synth: ethnicity proportions must sum to 1");
  for (const auto& [group, offsets] : c.bias_offsets) {
    if (std::find(kGroupNames.begin(), kGroupNames.end(), group) == kGroupNames.end())
      throw SchemaError("synth: unknown bias group '" + group + "'");
    for (double x : offsets)
      if (!std::isfinite(x)) throw SchemaError("synth: non-finite bias offset");
  }
  for (int m : c.visual_sample_counts)
    if (m < 1) throw SchemaError("synth: visual sample counts must be >= 1");
  if (c.visual_sample_counts.empty()) throw SchemaError("synth: need at least one visual sample grid");
}

namespace detail {

inline constexpr std::uint64_t kSplitStream = 0xffff'0001ULL;
inline constexpr std::uint64_t kProjectionStream = 0xffff'0002ULL;
inline constexpr std::size_t kVisualLatent = 8;  // 5 label mix, age, attractiveness, gender
inline constexpr std::size_t kAudioLatent = 6;   // 5 label mix, gender

struct VideoDraw {
  VideoRecord record;
  std::array<double, kNumTraits> standardized{};
};

inline std::string video_id(std::size_t i) {
  std::string digits = std::to_string(i);
  return "v" + std::string(digits.size() < 6 ? 6 - digits.size() : 0, '0') + digits;
}

// Consumes exactly the group and label draws from the video's stream.
inline VideoDraw draw_video(const SynthConfig& c, std::size_t index, Rng& rng) {
  VideoDraw d;
  d.record.video_id = video_id(index);
  d.record.gender = rng.uniform() < c.gender_proportion_female ? Gender::female : Gender::male;
  d.record.ethnicity = static_cast<Ethnicity>(rng.categorical(c.ethnicity_proportions));
  TraitOffsets offset{};
  auto add = [&](std::string_view group) {
    if (auto it = c.bias_offsets.find(std::string(group)); it != c.bias_offsets.end())
      for (std::size_t t = 0; t < kNumTraits; ++t) offset[t] += it->second[t];
  };
  add(to_string(*d.record.gender));
  add(to_string(*d.record.ethnicity));
  for (std::size_t t = 0; t < kNumTraits; ++t) {
    const double raw = rng.normal(c.label_mean, c.label_std) + offset[t];
    d.record.labels.values[t] = std::clamp(raw, 0.0, 1.0);
    d.standardized[t] = c.label_std > 0.0 ? (d.record.labels.values[t] - c.label_mean) / c.label_std : 0.0;
  }
  return d;
}

struct Projections {
  std::vector<double> visual;  // kEmbeddingDim x kVisualLatent
  std::vector<double> audio;   // kEmbeddingDim x kAudioLatent
};

inline Projections make_projections(std::uint64_t seed) {
  Rng rng(derive_seed(seed, kProjectionStream));
  Projections p;
  p.visual.resize(kEmbeddingDim * kVisualLatent);
  p.audio.resize(kEmbeddingDim * kAudioLatent);
  for (auto& x : p.visual) x = rng.normal() / std::sqrt(static_cast<double>(kVisualLatent));
  for (auto& x : p.audio) x = rng.normal() / std::sqrt(static_cast<double>(kAudioLatent));
  return p;
}

inline std::array<double, kNumTraits> mix(const std::array<double, kNumTraits>& u, double coupling, Rng& rng) {
  const double keep = std::sqrt(std::max(0.0, 1.0 - coupling * coupling));
  std::array<double, kNumTraits> out{};
  for (std::size_t t = 0; t < kNumTraits; ++t) out[t] = coupling * u[t] + keep * rng.normal();
  return out;
}

template <std::size_t L>
std::array<double, kEmbeddingDim> project(const std::vector<double>& matrix, const std::array<double, L>& latent,
                                          double noise_std, Rng& rng) {
  std::array<double, kEmbeddingDim> out{};
  for (std::size_t r = 0; r < kEmbeddingDim; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < L; ++c) acc += matrix[r * L + c] * latent[c];
    out[r] = acc + noise_std * rng.normal();
  }
  return out;
}

inline Embedding to_float(const std::array<double, kEmbeddingDim>& v) {
  Embedding e;
  for (std::size_t i = 0; i < kEmbeddingDim; ++i) e[i] = static_cast<float>(v[i]);
  return e;
}

// Random segment boundaries [0 = b0 < b1 < ... < bk = T) for piecewise-constant streams.
inline std::vector<std::uint32_t> segment_starts(std::uint32_t frames, int min_segments, int max_segments, Rng& rng) {
  const int k = min_segments + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_segments - min_segments + 1)));
  std::vector<std::uint32_t> starts{0};
  for (int i = 1; i < k; ++i) starts.push_back(static_cast<std::uint32_t>(rng.below(frames)));
  std::sort(starts.begin(), starts.end());
  starts.erase(std::unique(starts.begin(), starts.end()), starts.end());
  return starts;
}

inline std::size_t segment_of(const std::vector<std::uint32_t>& starts, std::uint32_t frame) {
  return static_cast<std::size_t>(std::upper_bound(starts.begin(), starts.end(), frame) - starts.begin()) - 1;
}

// Probability vector peaked on `winner`, remainder split by random weights.
template <std::size_t N>
std::array<double, N> peaked(std::size_t winner, double peak, Rng& rng) {
  std::array<double, N> p{};
  double rest = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    if (i == winner) continue;
    p[i] = rng.uniform() + 1e-3;
    rest += p[i];
  }
  for (std::size_t i = 0; i < N; ++i) p[i] = i == winner ? peak : (1.0 - peak) * p[i] / rest;
  double sum = 0.0;
  for (double x : p) sum += x;
  for (auto& x : p) x /= sum;
  return p;
}

inline void generate_features(const SynthConfig& c, const Projections& proj, const VideoDraw& draw, Rng& rng,
                              FrameAttributeSeries& series, EmbeddingBundle& bundle) {
  const double s = c.signal_strength;
  const auto& u = draw.standardized;
  const std::uint32_t T = c.frames_per_video;
  const bool female = draw.record.gender == Gender::female;
  const auto eth = static_cast<std::size_t>(*draw.record.ethnicity);

  // Video-level latents.
  const double c_age = 0.7 * s;
  const double age_latent = c_age * u[1] + std::sqrt(1.0 - c_age * c_age) * rng.normal();
  const double age = std::clamp(30.0 + 9.0 * age_latent, 12.0, 80.0);

  const double c_att = 0.6 * s;
  const double att_signal = (u[0] + u[1] + u[2] - u[4]) / 2.0;
  const double att_latent = c_att * att_signal + std::sqrt(1.0 - c_att * c_att) * rng.normal();
  const double att_level = std::clamp(0.5 + 0.15 * att_latent, 0.02, 0.98);

  std::array<double, kNumEmotions> logits{-1.2, -1.6, -1.6, -0.3, -1.2, -1.4, 0.8};
  logits[3] += s * (1.2 * u[2] + 0.4 * u[3]);
  logits[0] -= s * 0.5 * u[3];
  logits[1] -= s * 0.3 * u[3];
  logits[4] += s * 0.5 * u[4];
  logits[2] += s * 0.4 * u[4];
  for (auto& l : logits) l += 0.3 * rng.normal();
  std::array<double, kNumEmotions> weights{};
  for (std::size_t e = 0; e < kNumEmotions; ++e) weights[e] = std::exp(logits[e]);

  // Piecewise-constant dynamic attributes.
  const auto emo_starts = segment_starts(T, 3, 8, rng);
  std::vector<std::size_t> emo_winner;
  std::vector<double> emo_peak;
  for (std::size_t k = 0; k < emo_starts.size(); ++k) {
    emo_winner.push_back(rng.categorical(weights));
    emo_peak.push_back(rng.uniform(0.55, 0.95));
  }
  const auto att_starts = segment_starts(T, 2, 6, rng);
  std::vector<double> att_offset;
  for (std::size_t k = 0; k < att_starts.size(); ++k) att_offset.push_back(0.06 * rng.normal());

  series.video_id = draw.record.video_id;
  series.frame_count = T;
  series.records.clear();
  series.records.reserve(T);
  for (std::uint32_t f = 0; f < T; ++f) {
    FrameAttributeRecord r;
    r.frame_index = f;
    r.face_detected = !rng.bernoulli(c.face_miss_rate);
    if (r.face_detected) {
      const std::size_t es = segment_of(emo_starts, f);
      const double peak = std::clamp(emo_peak[es] + 0.03 * rng.normal(), 0.3, 0.99);
      r.emotion_probs = peaked<kNumEmotions>(emo_winner[es], peak, rng);
      r.attractiveness =
          std::clamp(att_level + att_offset[segment_of(att_starts, f)] + 0.02 * rng.normal(), 0.0, 1.0);
      r.age = std::max(1.0, age + 2.0 * rng.normal());
      const bool flip = rng.bernoulli(0.05);
      const std::size_t g = (female ? 0 : 1) ^ (flip ? 1 : 0);
      r.gender_probs = peaked<kNumGenders>(g, rng.uniform(0.6, 0.99), rng);
      std::size_t e = eth;
      if (rng.bernoulli(0.05)) e = (eth + 1 + rng.below(2)) % kNumEthnicities;
      r.ethnicity_probs = peaked<kNumEthnicities>(e, rng.uniform(0.6, 0.98), rng);
    }
    series.records.push_back(r);
  }

  // Embeddings.
  const double gender_sign = female ? 1.0 : -1.0;
  const auto visual_mix = mix(u, 0.6 * s, rng);
  std::array<double, kVisualLatent> visual_latent{};
  std::copy(visual_mix.begin(), visual_mix.end(), visual_latent.begin());
  visual_latent[5] = age_latent;
  visual_latent[6] = att_latent;
  visual_latent[7] = gender_sign;

  auto audio_latent = [&](double coupling) {
    const auto m = mix(u, coupling, rng);
    std::array<double, kAudioLatent> l{};
    std::copy(m.begin(), m.end(), l.begin());
    l[5] = gender_sign;
    return l;
  };
  const auto first = project(proj.audio, audio_latent(s), c.noise_std, rng);
  const auto second = project(proj.audio, audio_latent(s / 3.0), c.noise_std, rng);
  std::array<double, kEmbeddingDim> whole{};
  for (std::size_t i = 0; i < kEmbeddingDim; ++i) whole[i] = 0.5 * (first[i] + second[i]);

  bundle.video_id = draw.record.video_id;
  bundle.audio_first_half = to_float(first);
  bundle.audio_second_half = to_float(second);
  bundle.audio_whole = to_float(whole);
  bundle.visual.clear();

  std::vector<std::uint32_t> all(T);
  for (std::uint32_t f = 0; f < T; ++f) all[f] = f;
  std::vector<std::uint32_t> frames;
  for (int m : c.visual_sample_counts) {
    const auto sel = select_equidistant_frames(T, all, m);
    frames.insert(frames.end(), sel.begin(), sel.end());
  }
  std::sort(frames.begin(), frames.end());
  frames.erase(std::unique(frames.begin(), frames.end()), frames.end());
  for (std::uint32_t f : frames) bundle.visual.emplace(f, to_float(project(proj.visual, visual_latent, c.noise_std, rng)));
}

}  // namespace detail

/// Ground-truth records only (with splits), identical to those of generate_synthetic.
inline std::vector<VideoRecord> generate_records(const SynthConfig& config) {
  validate_synth_config(config);
  std::vector<VideoRecord> records;
  records.reserve(config.n_videos);
  for (std::size_t i = 0; i < config.n_videos; ++i) {
    Rng rng(derive_seed(config.seed, i));
    records.push_back(detail::draw_video(config, i, rng).record);
  }
  if (records.size() >= 5) records = split_dataset(std::move(records), {3, 1, 1}, derive_seed(config.seed, detail::kSplitStream));
  return records;
}

inline Dataset generate_synthetic(const SynthConfig& config) {
  validate_synth_config(config);
  const auto proj = detail::make_projections(config.seed);
  Dataset d;
  d.records.reserve(config.n_videos);
  d.series.resize(config.n_videos);
  d.embeddings.resize(config.n_videos);
  for (std::size_t i = 0; i < config.n_videos; ++i) {
    Rng rng(derive_seed(config.seed, i));
    const auto draw = detail::draw_video(config, i, rng);
    detail::generate_features(config, proj, draw, rng, d.series[i], d.embeddings[i]);
    d.records.push_back(draw.record);
  }
  if (d.records.size() >= 5)
    d.records = split_dataset(std::move(d.records), {3, 1, 1}, derive_seed(config.seed, detail::kSplitStream));
  return d;
}

}  // namespace apf
