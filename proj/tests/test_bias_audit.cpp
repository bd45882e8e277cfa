// Copyright 2026 The apfusion Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "apf/bias_audit.hpp"
#include "apf/synth.hpp"

namespace apf::audit {
namespace {

VideoRecord record(std::string id, double score, Gender g = Gender::female, Ethnicity e = Ethnicity::caucasian) {
  VideoRecord r;
  r.video_id = std::move(id);
  r.labels = TraitVector{{score, score, score, score, score}};
  r.gender = g;
  r.ethnicity = e;
  return r;
}

FrameAttributeRecord face(std::uint32_t f, std::size_t emotion, double p) {
  FrameAttributeRecord r;
  r.frame_index = f;
  r.face_detected = true;
  r.emotion_probs.fill((1.0 - p) / (kNumEmotions - 1));
  r.emotion_probs[emotion] = p;
  r.gender_probs = {0.5, 0.5};
  r.ethnicity_probs = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  r.attractiveness = 0.5;
  r.age = 30;
  return r;
}

// --- group statistics ----------------------------------------------------------

TEST(GroupStats, TwoGroupsHandFixture) {
  const std::vector<VideoRecord> r{record("a", 0.4, Gender::female), record("b", 0.4, Gender::female),
                                   record("c", 0.6, Gender::male), record("d", 0.6, Gender::male)};
  const auto t = group_stats(r, {}, GroupSource::metadata);
  EXPECT_EQ(t.population, 4u);
  const auto* f = t.find(std::nullopt, Gender::female);
  const auto* m = t.find(std::nullopt, Gender::male);
  ASSERT_TRUE(f && m);
  EXPECT_NEAR(f->stats.mean[0], 0.4, 1e-12);
  EXPECT_NEAR(m->stats.mean[0], 0.6, 1e-12);
  EXPECT_NEAR(f->stats.stddev[0], 0.0, 1e-12);
  EXPECT_NEAR(t.rows[0].stats.mean[0], 0.5, 1e-12);
  EXPECT_NEAR(t.rows[0].stats.stddev[0], 0.1, 1e-12);
  EXPECT_NEAR(f->percent_of_population, 50.0, 1e-12);
}

TEST(GroupStats, RowOrderAndParentShares) {
  const std::vector<VideoRecord> r{record("a", 0.1, Gender::female, Ethnicity::asian),
                                   record("b", 0.3, Gender::male, Ethnicity::asian),
                                   record("c", 0.5, Gender::male, Ethnicity::asian),
                                   record("d", 0.7, Gender::male, Ethnicity::caucasian)};
  const auto t = group_stats(r, {}, GroupSource::metadata);
  ASSERT_EQ(t.rows.size(), 3u + 3u * 3u);
  EXPECT_EQ(t.rows[0].label(), "all/all");
  EXPECT_EQ(t.rows[1].label(), "all/female");
  EXPECT_EQ(t.rows[2].label(), "all/male");
  EXPECT_EQ(t.rows[3].label(), "african_american/all");
  EXPECT_EQ(t.rows[3].count, 0u);
  const auto* asian_male = t.find(Ethnicity::asian, Gender::male);
  EXPECT_EQ(asian_male->count, 2u);
  EXPECT_NEAR(asian_male->percent_of_parent, 100.0 * 2 / 3, 1e-12);
  EXPECT_NEAR(asian_male->percent_of_population, 50.0, 1e-12);
  EXPECT_NEAR(asian_male->stats.mean[2], 0.4, 1e-12);
  EXPECT_NEAR(asian_male->stats.stddev[2], 0.1, 1e-12);
}

TEST(GroupStats, SingleInclusiveGroupEqualsGlobalStatistics) {
  SynthConfig c;
  c.n_videos = 300;
  c.seed = 4;
  auto r = generate_records(c);
  for (auto& x : r) {
    x.gender = Gender::male;
    x.ethnicity = Ethnicity::caucasian;
  }
  std::vector<TraitVector> labels;
  for (const auto& x : r) labels.push_back(x.labels);
  const auto global = trait_stats(labels);
  const auto t = group_stats(r, {}, GroupSource::metadata);
  const auto* only = t.find(Ethnicity::caucasian, Gender::male);
  for (std::size_t k = 0; k < kNumTraits; ++k) {
    EXPECT_NEAR(only->stats.mean[k], global.mean[k], 1e-12);
    EXPECT_NEAR(only->stats.stddev[k], global.stddev[k], 1e-12);
    EXPECT_NEAR(t.rows[0].stats.mean[k], global.mean[k], 1e-12);
  }
}

TEST(GroupStats, UnresolvedGroupsAreExcludedAndCounted) {
  auto r = std::vector<VideoRecord>{record("a", 0.5), record("b", 0.5), record("c", 0.5)};
  r[1].gender.reset();
  EXPECT_EQ(group_stats(r, {}, GroupSource::metadata).excluded, 1u);
  const std::vector<GroupLabel> pred{{Gender::male, Ethnicity::asian}, {}, {}};
  const auto t = group_stats(r, pred, GroupSource::predicted);
  EXPECT_EQ(t.excluded, 2u);
  EXPECT_EQ(t.find(Ethnicity::asian, Gender::male)->count, 1u);
  EXPECT_THROW(group_stats(r, std::vector<GroupLabel>{}, GroupSource::predicted), SchemaError);
}

TEST(GroupStats, CellFormat) {
  EXPECT_EQ(format_cell(0.6, 0.15), "0.60±0.15");
  EXPECT_EQ(format_cell(0.456, 0.0), "0.46±0.00");
}

TEST(GroupStats, PredictedGroupsComeFromFrameVotes) {
  SynthConfig c;
  c.n_videos = 200;
  c.frames_per_video = 40;
  c.seed = 6;
  const auto d = generate_synthetic(c);
  std::vector<std::size_t> all(d.records.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto pred = predicted_groups(d, all);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < all.size(); ++i) agree += pred[i].gender == d.records[i].gender;
  EXPECT_GT(agree, 190u);  // per-frame flips are rare and voted away
}

TEST(GroupStats, InjectedOffsetIsRecovered) {
  SynthConfig c;
  c.n_videos = 2000;
  c.seed = 0;
  c.bias_offsets["female"] = {0.05, 0, 0, 0, 0};
  const auto t = group_stats(generate_records(c), {}, GroupSource::metadata);
  const double gap = t.find(std::nullopt, Gender::female)->stats.mean[0] - t.find(std::nullopt, Gender::male)->stats.mean[0];
  EXPECT_NEAR(gap, 0.05, 0.01);
  for (std::size_t k = 1; k < kNumTraits; ++k) {
    const double other = t.find(std::nullopt, Gender::female)->stats.mean[k] - t.find(std::nullopt, Gender::male)->stats.mean[k];
    EXPECT_LT(std::abs(other), 0.02) << "trait " << k;
  }
}

TEST(GroupStats, NoFalsePositivesWithoutOffsets) {
  SynthConfig c;
  c.n_videos = 2000;
  c.seed = 0;
  const auto t = group_stats(generate_records(c), {}, GroupSource::metadata);
  const auto& all = t.rows[0];
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    const auto& g = t.rows[i];
    if (g.count == 0) continue;
    for (std::size_t k = 0; k < kNumTraits; ++k)
      EXPECT_LT(std::abs(g.stats.mean[k] - all.stats.mean[k]), 3 * all.stats.stddev[k] / std::sqrt(static_cast<double>(g.count)))
          << g.label() << " trait " << k;
  }
}

// --- age trend -----------------------------------------------------------------

TEST(AgeTrend, BinBoundariesUseWholeYears) {
  EXPECT_EQ(age_bin(18.9), 0u);
  EXPECT_EQ(age_bin(19.0), 1u);
  EXPECT_EQ(age_bin(24.99), 1u);
  EXPECT_EQ(age_bin(25.0), 2u);
  EXPECT_EQ(age_bin(45.5), 3u);
  EXPECT_EQ(age_bin(60.9), 4u);
  EXPECT_EQ(age_bin(61.0), 5u);
}

TEST(AgeTrend, HandFixture) {
  const std::vector<VideoRecord> r{record("a", 0.2), record("b", 0.4), record("c", 0.6), record("d", 0.8),
                                   record("e", 0.1)};
  const std::vector<std::optional<double>> ages{18, 19, 24, 25, std::nullopt};
  const auto t = age_trend(r, ages);
  EXPECT_EQ(t.count[0], 1u);
  EXPECT_EQ(t.count[1], 2u);
  EXPECT_EQ(t.count[2], 1u);
  EXPECT_EQ(t.missing_age, 1u);
  EXPECT_NEAR(t.mean[1][1], 0.5, 1e-12);
  EXPECT_NEAR(t.mean[2][4], 0.8, 1e-12);
}

TEST(AgeTrend, ConscientiousnessRisesWithAgeOnSyntheticData) {
  SynthConfig c;
  c.n_videos = 2000;
  c.frames_per_video = 30;
  c.seed = 2;
  const auto d = generate_synthetic(c);
  std::vector<std::size_t> all(d.records.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto t = age_trend(d.records, predicted_ages(d, all));
  double previous = -1.0;
  std::size_t populated = 0;
  for (std::size_t b = 0; b < 6; ++b) {
    if (t.count[b] < 50) continue;
    EXPECT_GT(t.mean[b][1], previous) << kAgeBinLabels[b];
    previous = t.mean[b][1];
    ++populated;
  }
  EXPECT_GE(populated, 3u);
}

// --- extremes ------------------------------------------------------------------

TEST(Extremes, CountRounding) {
  EXPECT_EQ(extreme_count(0.1, 10), 1u);
  EXPECT_EQ(extreme_count(0.1, 30), 3u);
  EXPECT_EQ(extreme_count(0.1, 31), 4u);
  EXPECT_EQ(extreme_count(0.1, 5), 1u);
}

TEST(Extremes, TenVideosGiveOnePerExtreme) {
  std::vector<VideoRecord> r;
  for (int i = 0; i < 10; ++i) r.push_back(record("v" + std::to_string(i), 0.05 + 0.1 * i));
  std::vector<std::size_t> pool(10);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  const auto ex = select_extremes(r, pool, Trait::extraversion, 0.1);
  EXPECT_EQ(ex.top, std::vector<std::size_t>{9});
  EXPECT_EQ(ex.bottom, std::vector<std::size_t>{0});
}

TEST(Extremes, TiesBreakByVideoIdAndSetsAreDisjoint) {
  const std::vector<VideoRecord> r{record("d", 0.5), record("b", 0.5), record("c", 0.5), record("a", 0.5)};
  const std::vector<std::size_t> pool{0, 1, 2, 3};
  const auto ex = select_extremes(r, pool, Trait::openness, 0.5);
  EXPECT_EQ(ex.top, (std::vector<std::size_t>{3, 1}));
  EXPECT_EQ(ex.bottom, (std::vector<std::size_t>{0, 2}));  // tail of the same ranking
  const std::vector<VideoRecord> s{record("d", 0.9), record("b", 0.5), record("c", 0.5), record("a", 0.1)};
  const auto ey = select_extremes(s, pool, Trait::openness, 0.5);
  EXPECT_EQ(ey.top, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(ey.bottom, (std::vector<std::size_t>{3, 2}));
}

TEST(Extremes, RejectsBadFractionsAndTinyPools) {
  const std::vector<VideoRecord> r{record("a", 0.1)};
  const std::vector<std::size_t> pool{0};
  EXPECT_THROW(select_extremes(r, pool, Trait::openness, 0.0), SchemaError);
  EXPECT_THROW(select_extremes(r, pool, Trait::openness, 0.6), SchemaError);
  EXPECT_THROW(select_extremes(r, pool, Trait::openness, 0.1), SchemaError);
}

TEST(AttractivenessExtremes, IdenticalHistogramsGiveIdenticalMeans) {
  std::vector<VideoRecord> r;
  std::vector<Histogram5> h;
  for (int i = 0; i < 20; ++i) {
    r.push_back(record("v" + std::to_string(i), i / 20.0));
    h.push_back(histogram_5bin(std::vector<double>{0.1, 0.5, 0.5, 0.9}));
  }
  const auto rep = attractiveness_extremes(r, h);
  EXPECT_EQ(rep.per_extreme, 2u);
  for (std::size_t t = 0; t < kNumTraits; ++t) {
    EXPECT_EQ(rep.top[t], rep.bottom[t]);
    EXPECT_NEAR(rep.top[t][2], 0.5, 1e-12);
  }
}

TEST(AttractivenessExtremes, FacelessVideosAreExcluded) {
  std::vector<VideoRecord> r;
  std::vector<Histogram5> h;
  for (int i = 0; i < 12; ++i) {
    r.push_back(record("v" + std::to_string(i), i / 12.0));
    h.push_back(i < 2 ? histogram_5bin(std::vector<double>{}) : histogram_5bin(std::vector<double>{i / 12.0}));
  }
  const auto rep = attractiveness_extremes(r, h);
  EXPECT_EQ(rep.excluded, 2u);
  EXPECT_EQ(rep.per_extreme, 1u);
  EXPECT_NEAR(rep.top[0][4], 1.0, 1e-12);     // v11: 0.917
  EXPECT_NEAR(rep.bottom[0][0], 1.0, 1e-12);  // v2: 0.167
}

TEST(AttractivenessExtremes, SyntheticTopExtraversionLooksMoreAttractive) {
  SynthConfig c;
  c.n_videos = 1000;
  c.frames_per_video = 30;
  c.seed = 9;
  const auto d = generate_synthetic(c);
  std::vector<std::size_t> all(d.records.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto rep = attractiveness_extremes(d.records, attractiveness_histograms(d, all));
  for (auto t : {Trait::openness, Trait::conscientiousness, Trait::extraversion})
    EXPECT_GT(expected_bin(rep.top[static_cast<std::size_t>(t)]), expected_bin(rep.bottom[static_cast<std::size_t>(t)]));
  EXPECT_LT(expected_bin(rep.top[4]), expected_bin(rep.bottom[4]));
}

// --- emotion frequencies -------------------------------------------------------

TEST(EmotionFrequencies, ThresholdCounting) {
  FrameAttributeSeries s;
  s.video_id = "x";
  s.frame_count = 11;
  for (std::uint32_t f = 0; f < 10; ++f) s.records.push_back(face(f, 3, f < 3 ? 0.8 : 0.5));
  FrameAttributeRecord missing;
  missing.frame_index = 10;
  s.records.push_back(missing);
  const auto c = confident_emotion_counts(s, 0.7);
  EXPECT_EQ(c[3], 3u);
  EXPECT_EQ(std::accumulate(c.begin(), c.end(), std::size_t{0}), 3u);
  const auto all = confident_emotion_counts(s, 0.0);
  for (auto n : all) EXPECT_EQ(n, 10u);  // every face frame, no faceless frame
  EXPECT_EQ(confident_emotion_counts(s, 0.8)[3], 3u);  // the threshold is inclusive
}

TEST(EmotionFrequencies, AccumulatesOverExtremes) {
  std::vector<VideoRecord> r;
  std::vector<FrameAttributeSeries> s(10);
  for (std::size_t i = 0; i < 10; ++i) {
    r.push_back(record("v" + std::to_string(i), 0.05 + 0.1 * static_cast<double>(i)));
    s[i].video_id = r.back().video_id;
    s[i].frame_count = 4;
    for (std::uint32_t f = 0; f < 4; ++f) s[i].records.push_back(face(f, i == 9 ? 3 : 4, 0.9));
  }
  const auto rep = emotion_frequencies(r, s);
  EXPECT_EQ(rep.per_extreme, 1u);
  EXPECT_EQ(rep.top[2][3], 4u);
  EXPECT_EQ(rep.top[2][4], 0u);
  EXPECT_EQ(rep.bottom[2][4], 4u);
  EXPECT_EQ(rep.bottom[2][3], 0u);
}

TEST(EmotionFrequencies, SyntheticHappyFramesTrackExtraversion) {
  SynthConfig c;
  c.n_videos = 1000;
  c.frames_per_video = 60;
  c.seed = 12;
  const auto d = generate_synthetic(c);
  const auto rep = emotion_frequencies(d.records, d.series);
  const auto e = static_cast<std::size_t>(Trait::extraversion);
  const auto happy = static_cast<std::size_t>(Emotion::happy);
  EXPECT_GT(rep.top[e][happy], rep.bottom[e][happy]);
  const auto n = static_cast<std::size_t>(Trait::neuroticism);
  const auto sad = static_cast<std::size_t>(Emotion::sadness);
  EXPECT_GT(rep.top[n][sad], rep.bottom[n][sad]);
}

}  // namespace
}  // namespace apf::audit
