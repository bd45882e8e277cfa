// Copyright 2026 The apfusion Authors
// SPDX-License-Identifier: Apache-2.0

// Observed-subject bias analyses over ground-truth labels: grouped trait
// statistics, age-range trends, attractiveness histograms of the trait
// extremes, and high-confidence emotion frequencies of the trait extremes.
//
// Extremes are the ceil(fraction * N) videos with the highest and lowest
// label for a trait. Videos are ranked by (label descending, video id
// ascending); the top extreme is the head of that ranking and the bottom
// extreme its tail, listed from the lowest label up.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "apf/consensus.hpp"
#include "apf/core_types.hpp"
#include "apf/error.hpp"
#include "apf/io.hpp"

namespace apf::audit {

enum class GroupSource : std::uint8_t { metadata, predicted };

inline GroupSource parse_group_source(std::string_view s) {
  static constexpr std::array<std::string_view, 2> kNames = {"metadata", "predicted"};
  return apf::detail::parse_enum<GroupSource>(s, kNames, "group source");
}

/// A video's demographic group as resolved from some source.
struct GroupLabel {
  std::optional<Gender> gender;
  std::optional<Ethnicity> ethnicity;
};

/// Group labels from majority votes over per-frame predictions.
inline std::vector<GroupLabel> predicted_groups(const Dataset& d, std::span<const std::size_t> indices) {
  std::vector<GroupLabel> out;
  for (std::size_t i : indices) {
    GroupLabel g;
    try {
      const auto oh = gender_consensus(d.series[i]);
      g.gender = oh[0] == 1.0 ? Gender::female : Gender::male;
      const auto eh = ethnicity_consensus(d.series[i]);
      g.ethnicity = static_cast<Ethnicity>(std::find(eh.begin(), eh.end(), 1.0) - eh.begin());
    } catch (const MissingAttributeError&) {
    }
    out.push_back(g);
  }
  return out;
}

/// Median face-frame age per video; unset where no face was detected.
inline std::vector<std::optional<double>> predicted_ages(const Dataset& d, std::span<const std::size_t> indices) {
  std::vector<std::optional<double>> out;
  for (std::size_t i : indices) {
    try {
      out.emplace_back(age_consensus(d.series[i]));
    } catch (const MissingAttributeError&) {
      out.emplace_back(std::nullopt);
    }
  }
  return out;
}

/// Orderless attractiveness histogram per video (empty where no face was detected).
inline std::vector<Histogram5> attractiveness_histograms(const Dataset& d, std::span<const std::size_t> indices) {
  std::vector<Histogram5> out;
  std::vector<double> scores;
  for (std::size_t i : indices) {
    scores.clear();
    for (const auto& r : d.series[i].records)
      if (r.face_detected) scores.push_back(r.attractiveness);
    out.push_back(histogram_5bin(scores));
  }
  return out;
}

struct TraitStats {
  std::array<double, kNumTraits> mean{};
  std::array<double, kNumTraits> stddev{};  // population standard deviation
};

inline TraitStats trait_stats(std::span<const TraitVector> labels) {
  TraitStats s;
  if (labels.empty()) return s;
  const double n = static_cast<double>(labels.size());
  for (const auto& l : labels)
    for (std::size_t t = 0; t < kNumTraits; ++t) s.mean[t] += l[t];
  for (auto& m : s.mean) m /= n;
  for (const auto& l : labels)
    for (std::size_t t = 0; t < kNumTraits; ++t) s.stddev[t] += (l[t] - s.mean[t]) * (l[t] - s.mean[t]);
  for (auto& v : s.stddev) v = std::sqrt(v / n);
  return s;
}

struct GroupRow {
  std::optional<Ethnicity> ethnicity;  // unset: all ethnicities
  std::optional<Gender> gender;        // unset: all genders
  std::size_t count = 0;
  double percent_of_population = 0.0;
  double percent_of_parent = 0.0;  // gender rows inside an ethnicity: share of that ethnicity
  TraitStats stats;

  std::string label() const {
    std::string s = ethnicity ? std::string(to_string(*ethnicity)) : "all";
    s += "/";
    s += gender ? std::string(to_string(*gender)) : "all";
    return s;
  }
};

struct GroupStatsTable {
  std::vector<GroupRow> rows;
  std::size_t population = 0;  // records with a resolved group
  std::size_t excluded = 0;    // records whose group could not be resolved

  const GroupRow* find(std::optional<Ethnicity> e, std::optional<Gender> g) const {
    for (const auto& r : rows)
      if (r.ethnicity == e && r.gender == g) return &r;
    return nullptr;
  }
};

/// Table cell in the "0.60±0.15" style.
inline std::string format_cell(double mean, double stddev) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f±%.2f", mean, stddev);
  return buf;
}

/// Ground-truth trait statistics per group. Rows: everyone, each gender, each
/// ethnicity, then each (ethnicity, gender) pair. Groups come from the
/// records' metadata or from `predicted` (aligned with `records`).
inline GroupStatsTable group_stats(std::span<const VideoRecord> records, std::span<const GroupLabel> predicted,
                                   GroupSource source) {
  if (source == GroupSource::predicted && predicted.size() != records.size())
    throw SchemaError("group_stats: predicted groups are not aligned with records");
  struct Entry {
    Gender gender;
    Ethnicity ethnicity;
    const TraitVector* labels;
  };
  std::vector<Entry> entries;
  GroupStatsTable table;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const GroupLabel g = source == GroupSource::metadata ? GroupLabel{records[i].gender, records[i].ethnicity}
                                                         : predicted[i];
    if (!g.gender || !g.ethnicity) {
      ++table.excluded;
      continue;
    }
    entries.push_back({*g.gender, *g.ethnicity, &records[i].labels});
  }
  table.population = entries.size();
  if (entries.empty()) return table;

  auto make_row = [&](std::optional<Ethnicity> e, std::optional<Gender> g, std::size_t parent_count) {
    std::vector<TraitVector> labels;
    for (const auto& x : entries)
      if ((!e || x.ethnicity == *e) && (!g || x.gender == *g)) labels.push_back(*x.labels);
    GroupRow row;
    row.ethnicity = e;
    row.gender = g;
    row.count = labels.size();
    row.percent_of_population = 100.0 * static_cast<double>(row.count) / static_cast<double>(entries.size());
    row.percent_of_parent =
        parent_count ? 100.0 * static_cast<double>(row.count) / static_cast<double>(parent_count) : 0.0;
    row.stats = trait_stats(labels);
    table.rows.push_back(row);
    return row.count;
  };
  make_row(std::nullopt, std::nullopt, entries.size());
  for (std::size_t g = 0; g < kNumGenders; ++g) make_row(std::nullopt, static_cast<Gender>(g), entries.size());
  for (std::size_t e = 0; e < kNumEthnicities; ++e) {
    const auto eth = static_cast<Ethnicity>(e);
    const std::size_t n_eth = make_row(eth, std::nullopt, entries.size());
    for (std::size_t g = 0; g < kNumGenders; ++g) make_row(eth, static_cast<Gender>(g), n_eth);
  }
  return table;
}

// ---------------------------------------------------------------------------

inline constexpr std::array<std::string_view, 6> kAgeBinLabels = {"<19", "19-24", "25-32", "33-45", "46-60", ">60"};

/// Bin of floor(age): <19 is age <= 18, >60 is age >= 61, inner ranges closed.
inline std::size_t age_bin(double age) {
  const double a = std::floor(age);
  if (a <= 18) return 0;
  if (a <= 24) return 1;
  if (a <= 32) return 2;
  if (a <= 45) return 3;
  if (a <= 60) return 4;
  return 5;
}

struct AgeBinReport {
  std::array<std::size_t, 6> count{};
  std::array<std::array<double, kNumTraits>, 6> mean{};
  std::size_t missing_age = 0;
};

inline AgeBinReport age_trend(std::span<const VideoRecord> records, std::span<const std::optional<double>> ages) {
  if (ages.size() != records.size()) throw SchemaError("age_trend: ages are not aligned with records");
  AgeBinReport r;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!ages[i]) {
      ++r.missing_age;
      continue;
    }
    const std::size_t b = age_bin(*ages[i]);
    ++r.count[b];
    for (std::size_t t = 0; t < kNumTraits; ++t) r.mean[b][t] += records[i].labels[t];
  }
  for (std::size_t b = 0; b < 6; ++b)
    if (r.count[b])
      for (auto& m : r.mean[b]) m /= static_cast<double>(r.count[b]);
  return r;
}

// ---------------------------------------------------------------------------

inline std::size_t extreme_count(double fraction, std::size_t n) {
  // The epsilon keeps e.g. 0.1 * 30 from rounding up to 4.
  return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
}

struct Extremes {
  std::vector<std::size_t> top;
  std::vector<std::size_t> bottom;
};

/// Indices (into `records`) of the highest and lowest labelled videos for `trait`.
inline Extremes select_extremes(std::span<const VideoRecord> records, std::span<const std::size_t> pool, Trait trait,
                                double fraction) {
  if (!(fraction > 0.0 && fraction <= 0.5)) throw SchemaError("extremes: fraction must lie in (0, 0.5]");
  const std::size_t k = extreme_count(fraction, pool.size());
  if (k == 0 || 2 * k > pool.size())
    throw SchemaError("extremes: " + std::to_string(pool.size()) + " videos are too few for disjoint extremes");
  std::vector<std::size_t> order(pool.begin(), pool.end());
  auto score = [&](std::size_t i) { return records[i].labels[trait]; };
  Extremes ex;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (score(a) != score(b)) return score(a) > score(b);
    return records[a].video_id < records[b].video_id;
  });
  // Both extremes come from one total order, so they stay disjoint under ties.
  ex.top.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  ex.bottom.assign(order.rbegin(), order.rbegin() + static_cast<std::ptrdiff_t>(k));
  return ex;
}

struct ExtremesReport {
  std::size_t per_extreme = 0;
  std::size_t excluded = 0;  // videos without a face-derived histogram
  std::array<std::array<double, kHistogramBins>, kNumTraits> top{};
  std::array<std::array<double, kHistogramBins>, kNumTraits> bottom{};
};

/// Mean of a histogram's bin index (0-based); higher means more attractive.
inline double expected_bin(const std::array<double, kHistogramBins>& h) {
  double e = 0.0;
  for (std::size_t b = 0; b < kHistogramBins; ++b) e += static_cast<double>(b) * h[b];
  return e;
}

/// Mean orderless attractiveness histogram of each trait's top and bottom videos.
inline ExtremesReport attractiveness_extremes(std::span<const VideoRecord> records,
                                              std::span<const Histogram5> histograms, double fraction = 0.10) {
  if (histograms.size() != records.size()) throw SchemaError("attractiveness_extremes: histograms not aligned");
  std::vector<std::size_t> pool;
  ExtremesReport rep;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (histograms[i].empty) ++rep.excluded;
    else pool.push_back(i);
  }
  if (pool.empty()) throw SchemaError("attractiveness_extremes: no videos");
  for (std::size_t t = 0; t < kNumTraits; ++t) {
    const auto ex = select_extremes(records, pool, static_cast<Trait>(t), fraction);
    rep.per_extreme = ex.top.size();
    auto mean_of = [&](const std::vector<std::size_t>& idx) {
      std::array<double, kHistogramBins> m{};
      for (std::size_t i : idx)
        for (std::size_t b = 0; b < kHistogramBins; ++b) m[b] += histograms[i].bins[b];
      for (auto& x : m) x /= static_cast<double>(idx.size());
      return m;
    };
    rep.top[t] = mean_of(ex.top);
    rep.bottom[t] = mean_of(ex.bottom);
  }
  return rep;
}

// ---------------------------------------------------------------------------

struct EmotionFrequencyReport {
  std::size_t per_extreme = 0;
  double threshold = 0.7;
  std::array<std::array<std::size_t, kNumEmotions>, kNumTraits> top{};
  std::array<std::array<std::size_t, kNumEmotions>, kNumTraits> bottom{};
};

/// Face frames whose probability for an emotion reaches `threshold`.
inline std::array<std::size_t, kNumEmotions> confident_emotion_counts(const FrameAttributeSeries& s, double threshold) {
  std::array<std::size_t, kNumEmotions> c{};
  for (const auto& r : s.records) {
    if (!r.face_detected) continue;
    for (std::size_t e = 0; e < kNumEmotions; ++e)
      if (r.emotion_probs[e] >= threshold) ++c[e];
  }
  return c;
}

/// Accumulated confident-emotion frame counts over each trait's top and bottom videos.
inline EmotionFrequencyReport emotion_frequencies(std::span<const VideoRecord> records,
                                                  std::span<const FrameAttributeSeries> series,
                                                  double threshold = 0.7, double fraction = 0.10) {
  if (series.size() != records.size()) throw SchemaError("emotion_frequencies: series not aligned with records");
  if (records.empty()) throw SchemaError("emotion_frequencies: no videos");
  std::vector<std::size_t> pool(records.size());
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  std::vector<std::array<std::size_t, kNumEmotions>> counts;
  for (const auto& s : series) counts.push_back(confident_emotion_counts(s, threshold));
  EmotionFrequencyReport rep;
  rep.threshold = threshold;
  for (std::size_t t = 0; t < kNumTraits; ++t) {
    const auto ex = select_extremes(records, pool, static_cast<Trait>(t), fraction);
    rep.per_extreme = ex.top.size();
    for (std::size_t i : ex.top)
      for (std::size_t e = 0; e < kNumEmotions; ++e) rep.top[t][e] += counts[i][e];
    for (std::size_t i : ex.bottom)
      for (std::size_t e = 0; e < kNumEmotions; ++e) rep.bottom[t][e] += counts[i][e];
  }
  return rep;
}

}  // namespace apf::audit
