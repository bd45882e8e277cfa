// Copyright 2026 The apfusion Authors
// SPDX-License-Identifier: Apache-2.0

// Temporal consensus: turns per-frame attribute predictions into one
// video-level descriptor.
//
//   attribute        aggregation                          raw size
//   emotion          5-bin histogram per emotion          35 / 70 (ordered)
//   attractiveness   5-bin histogram                      5 / 10 (ordered)
//   age              median                               1
//   gender           majority vote, one-hot               2
//   ethnicity        majority vote, one-hot               3
//
// Only face-detected frames contribute. Ordered consensus splits the video at
// ceil(T/2): frames [0, ceil(T/2)) form the first segment and the rest the
// second, so the first segment receives the extra frame when T is odd.

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <iterator>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "apf/core_types.hpp"

namespace apf {

inline constexpr std::size_t kHistogramBins = 5;

/// Raised when a block needs at least one face-detected frame and the video has none.
class MissingAttributeError : public SchemaError {
 public:
  MissingAttributeError(const std::string& video_id, Attribute attribute)
      : SchemaError("video " + video_id + ": no face-detected frames for attribute " +
                    std::string(to_string(attribute))),
        video_id_(video_id),
        attribute_(attribute) {}

  const std::string& video_id() const noexcept { return video_id_; }
  Attribute attribute() const noexcept { return attribute_; }

 private:
  std::string video_id_;
  Attribute attribute_;
};

/// Median; even counts average the two middle values.
template <class Range>
double median(const Range& values) {
  std::vector<double> v(std::begin(values), std::end(values));
  if (v.empty()) throw SchemaError("median of an empty set");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

/// First frame index of the second segment.
inline std::uint32_t segment_boundary(std::uint32_t frame_count) { return (frame_count + 1) / 2; }

/// M frame indices spread evenly over [0, T), each snapped to the nearest
/// available index (ties go to the smaller index).
inline std::vector<std::uint32_t> select_equidistant_frames(std::uint32_t frame_count,
                                                            std::span<const std::uint32_t> available, int m) {
  if (frame_count < 1) throw SchemaError("frame selection needs T >= 1");
  if (m < 1) throw SchemaError("frame selection needs M >= 1");
  if (available.empty()) throw SchemaError("frame selection: no available frames");

  std::vector<std::uint32_t> pool(available.begin(), available.end());
  if (!std::is_sorted(pool.begin(), pool.end())) std::sort(pool.begin(), pool.end());

  auto snap = [&](std::uint64_t target) {
    auto it = std::lower_bound(pool.begin(), pool.end(), target);
    if (it == pool.end()) return pool.back();
    if (*it == target || it == pool.begin()) return *it;
    const std::uint32_t above = *it;
    const std::uint32_t below = *(it - 1);
    return (target - below <= above - target) ? below : above;
  };

  std::vector<std::uint32_t> out;
  out.reserve(static_cast<std::size_t>(m));
  if (m == 1) {
    out.push_back(snap(frame_count / 2));
    return out;
  }
  const std::uint64_t span_len = frame_count - 1;
  const std::uint64_t denom = static_cast<std::uint64_t>(m - 1);
  for (std::uint64_t k = 0; k < static_cast<std::uint64_t>(m); ++k) {
    // round(k * (T-1) / (M-1)), halves rounded up, in exact integer arithmetic
    const std::uint64_t target = (2 * k * span_len + denom) / (2 * denom);
    out.push_back(snap(target));
  }
  return out;
}

struct Histogram5 {
  std::array<double, kHistogramBins> bins{};
  bool empty = true;
};

/// Normalized histogram over [0,0.2), [0.2,0.4), [0.4,0.6), [0.6,0.8), [0.8,1.0].
inline Histogram5 histogram_5bin(std::span<const double> scores) {
  Histogram5 h;
  if (scores.empty()) return h;
  std::array<std::size_t, kHistogramBins> counts{};
  for (double x : scores) {
    if (!(x >= 0.0 && x <= 1.0)) throw SchemaError("histogram score outside [0,1]: " + std::to_string(x));
    std::size_t bin = 4;
    if (x < 0.2) bin = 0;
    else if (x < 0.4) bin = 1;
    else if (x < 0.6) bin = 2;
    else if (x < 0.8) bin = 3;
    ++counts[bin];
  }
  const double n = static_cast<double>(scores.size());
  for (std::size_t i = 0; i < kHistogramBins; ++i) h.bins[i] = static_cast<double>(counts[i]) / n;
  h.empty = false;
  return h;
}

/// One aggregated dynamic-attribute block with the mode that produced it.
struct DynamicBlock {
  std::vector<double> values;
  ConsensusMode mode = ConsensusMode::orderless;
  std::vector<bool> empty_segments;  // one flag per aggregated segment

  friend bool operator==(const DynamicBlock&, const DynamicBlock&) = default;
};

namespace detail {

// Face-frame score streams for each segment the mode aggregates over.
inline std::vector<std::vector<const FrameAttributeRecord*>> segment_frames(const FrameAttributeSeries& series,
                                                                            ConsensusMode mode) {
  const std::uint32_t boundary = segment_boundary(series.frame_count);
  std::vector<const FrameAttributeRecord*> first, second, all;
  for (const auto& r : series.records) {
    if (!r.face_detected) continue;
    all.push_back(&r);
    (r.frame_index < boundary ? first : second).push_back(&r);
  }
  switch (mode) {
    case ConsensusMode::orderless: return {all};
    case ConsensusMode::ordered: return {first, second};
    case ConsensusMode::first_half: return {first};
    case ConsensusMode::second_half: return {second};
  }
  return {all};
}

}  // namespace detail

/// Per emotion, a 5-bin histogram of that emotion's per-frame probability.
/// Layout is segment-major then emotion-major: [seg][emotion][bin].
inline DynamicBlock emotion_consensus(const FrameAttributeSeries& series, ConsensusMode mode) {
  DynamicBlock block;
  block.mode = mode;
  std::vector<double> scores;
  for (const auto& segment : detail::segment_frames(series, mode)) {
    block.empty_segments.push_back(segment.empty());
    for (std::size_t e = 0; e < kNumEmotions; ++e) {
      scores.clear();
      for (const auto* r : segment) scores.push_back(r->emotion_probs[e]);
      const auto h = histogram_5bin(scores);
      block.values.insert(block.values.end(), h.bins.begin(), h.bins.end());
    }
  }
  return block;
}

inline DynamicBlock attractiveness_consensus(const FrameAttributeSeries& series, ConsensusMode mode) {
  DynamicBlock block;
  block.mode = mode;
  std::vector<double> scores;
  for (const auto& segment : detail::segment_frames(series, mode)) {
    block.empty_segments.push_back(segment.empty());
    scores.clear();
    for (const auto* r : segment) scores.push_back(r->attractiveness);
    const auto h = histogram_5bin(scores);
    block.values.insert(block.values.end(), h.bins.begin(), h.bins.end());
  }
  return block;
}

inline double age_consensus(const FrameAttributeSeries& series) {
  std::vector<double> ages;
  for (const auto& r : series.records)
    if (r.face_detected) ages.push_back(r.age);
  if (ages.empty()) throw MissingAttributeError(series.video_id, Attribute::age);
  return median(ages);
}

namespace detail {

template <std::size_t N>
std::size_t argmax_lowest(const std::array<double, N>& p) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < N; ++i)
    if (p[i] > p[best]) best = i;
  return best;
}

template <std::size_t N, class Getter>
std::array<double, N> vote(const FrameAttributeSeries& series, Attribute attribute, Getter get) {
  std::array<std::size_t, N> votes{};
  std::size_t cast = 0;
  for (const auto& r : series.records) {
    if (!r.face_detected) continue;
    ++votes[argmax_lowest(get(r))];
    ++cast;
  }
  if (cast == 0) throw MissingAttributeError(series.video_id, attribute);
  std::size_t winner = 0;
  for (std::size_t i = 1; i < N; ++i)
    if (votes[i] > votes[winner]) winner = i;
  std::array<double, N> one_hot{};
  one_hot[winner] = 1.0;
  return one_hot;
}

}  // namespace detail

inline std::array<double, kNumGenders> gender_consensus(const FrameAttributeSeries& series) {
  return detail::vote<kNumGenders>(series, Attribute::gender,
                                   [](const FrameAttributeRecord& r) { return r.gender_probs; });
}

inline std::array<double, kNumEthnicities> ethnicity_consensus(const FrameAttributeSeries& series) {
  return detail::vote<kNumEthnicities>(series, Attribute::ethnicity,
                                       [](const FrameAttributeRecord& r) { return r.ethnicity_probs; });
}

/// Video-level attribute descriptor. Unconfigured blocks are left empty.
struct ConsensusVector {
  std::optional<DynamicBlock> emotion;
  std::optional<DynamicBlock> attractiveness;
  std::optional<double> age;
  std::optional<std::array<double, kNumGenders>> gender;
  std::optional<std::array<double, kNumEthnicities>> ethnicity;

  /// Raw concatenation in canonical attribute order.
  std::vector<double> flatten() const {
    std::vector<double> out;
    if (emotion) out.insert(out.end(), emotion->values.begin(), emotion->values.end());
    if (attractiveness) out.insert(out.end(), attractiveness->values.begin(), attractiveness->values.end());
    if (age) out.push_back(*age);
    if (gender) out.insert(out.end(), gender->begin(), gender->end());
    if (ethnicity) out.insert(out.end(), ethnicity->begin(), ethnicity->end());
    return out;
  }

  friend bool operator==(const ConsensusVector&, const ConsensusVector&) = default;
};

inline std::size_t dynamic_block_size(ConsensusMode mode, std::size_t per_segment) {
  return mode == ConsensusMode::ordered ? 2 * per_segment : per_segment;
}

inline ConsensusVector build_consensus(const FrameAttributeSeries& series, const ModalityConfig& config) {
  ConsensusVector cv;
  if (config.has(Attribute::emotion)) cv.emotion = emotion_consensus(series, config.emotion_consensus);
  if (config.has(Attribute::attractiveness))
    cv.attractiveness = attractiveness_consensus(series, config.attractiveness_consensus);
  if (config.has(Attribute::age)) cv.age = age_consensus(series);
  if (config.has(Attribute::gender)) cv.gender = gender_consensus(series);
  if (config.has(Attribute::ethnicity)) cv.ethnicity = ethnicity_consensus(series);
  return cv;
}

}  // namespace apf
