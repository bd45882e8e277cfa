// Copyright 2026 The apfusion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "apf/core_types.hpp"
#include "apf/error.hpp"

namespace apf::metrics {

struct EvaluationResult {
  std::array<double, kNumTraits> accuracy{};
  std::array<double, kNumTraits> mae{};
  double mean_accuracy = 0.0;
  std::size_t n = 0;
};

/// Per-trait accuracy 1 - mean |p - gt| over videos, plus its mean over traits.
inline EvaluationResult accuracy(std::span<const TraitVector> predictions, std::span<const TraitVector> ground_truth) {
  if (predictions.size() != ground_truth.size())
    throw SchemaError("accuracy: " + std::to_string(predictions.size()) + " predictions for " +
                      std::to_string(ground_truth.size()) + " labels");
  if (predictions.empty()) throw SchemaError("accuracy: no videos");
  EvaluationResult r;
  r.n = predictions.size();
  for (std::size_t i = 0; i < r.n; ++i)
    for (std::size_t j = 0; j < kNumTraits; ++j) r.mae[j] += std::abs(predictions[i][j] - ground_truth[i][j]);
  for (std::size_t j = 0; j < kNumTraits; ++j) {
    r.mae[j] /= static_cast<double>(r.n);
    r.accuracy[j] = 1.0 - r.mae[j];
  }
  r.mean_accuracy = std::accumulate(r.accuracy.begin(), r.accuracy.end(), 0.0) / static_cast<double>(kNumTraits);
  return r;
}

/// d_ij = |baseline - gt| - |compared - gt|; positive where the compared model is closer.
inline std::vector<TraitVector> residuals(std::span<const TraitVector> baseline, std::span<const TraitVector> compared,
                                          std::span<const TraitVector> ground_truth) {
  if (baseline.size() != ground_truth.size() || compared.size() != ground_truth.size())
    throw SchemaError("residuals: prediction lists are not aligned with the labels");
  std::vector<TraitVector> d(ground_truth.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = 0; j < kNumTraits; ++j)
      d[i][j] = std::abs(baseline[i][j] - ground_truth[i][j]) - std::abs(compared[i][j] - ground_truth[i][j]);
  return d;
}

/// Fraction of videos whose residual reaches each threshold of a grid over [0,1].
struct ResidualCurve {
  std::vector<double> thresholds;
  std::array<std::vector<double>, kNumTraits> values;
};

inline ResidualCurve residual_curve(std::span<const TraitVector> baseline, std::span<const TraitVector> compared,
                                    std::span<const TraitVector> ground_truth, double grid_step = 0.001) {
  if (!(grid_step > 0.0 && grid_step <= 1.0)) throw SchemaError("residual_curve: grid step must lie in (0,1]");
  const double steps_real = 1.0 / grid_step;
  const auto steps = static_cast<std::size_t>(std::llround(steps_real));
  if (std::abs(steps_real - static_cast<double>(steps)) > 1e-9 * steps_real)
    throw SchemaError("residual_curve: grid step must divide 1 evenly");
  const auto d = residuals(baseline, compared, ground_truth);
  if (d.empty()) throw SchemaError("residual_curve: no videos");

  ResidualCurve curve;
  curve.thresholds.resize(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) curve.thresholds[k] = static_cast<double>(k) / static_cast<double>(steps);
  const double n = static_cast<double>(d.size());
  for (std::size_t j = 0; j < kNumTraits; ++j) {
    std::vector<double> r(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) r[i] = d[i][j];
    std::sort(r.begin(), r.end());
    auto& v = curve.values[j];
    v.resize(curve.thresholds.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
      const auto first_ge = std::lower_bound(r.begin(), r.end(), curve.thresholds[k]);
      v[k] = static_cast<double>(r.end() - first_ge) / n;
    }
  }
  return curve;
}

/// Per trait, the k video ids with the largest residual; ties broken by video id.
inline std::array<std::vector<std::string>, kNumTraits> top_improvers(std::span<const TraitVector> baseline,
                                                                      std::span<const TraitVector> compared,
                                                                      std::span<const TraitVector> ground_truth,
                                                                      std::span<const std::string> video_ids,
                                                                      std::size_t k) {
  if (video_ids.size() != ground_truth.size()) throw SchemaError("top_improvers: ids are not aligned with labels");
  if (k > video_ids.size()) throw SchemaError("top_improvers: k exceeds the number of videos");
  const auto d = residuals(baseline, compared, ground_truth);
  std::array<std::vector<std::string>, kNumTraits> out;
  std::vector<std::size_t> order(d.size());
  for (std::size_t j = 0; j < kNumTraits; ++j) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (d[a][j] != d[b][j]) return d[a][j] > d[b][j];
      return video_ids[a] < video_ids[b];
    });
    for (std::size_t i = 0; i < k; ++i) out[j].push_back(video_ids[order[i]]);
  }
  return out;
}

}  // namespace apf::metrics
