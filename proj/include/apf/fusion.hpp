// Copyright 2026 The apfusion Authors
// SPDX-License-Identifier: Apache-2.0

// Late-fusion regressor over scene, audio and attribute features.
//
//   visual (128) --FC relu--> 128, or 256 without audio --+
//   audio slice (128) -----------------------------------+--> concat --FC sigmoid--> 5 traits
//   emotion (35|70) --FC relu--> 7 --+                    |
//   attractiveness (5|10 --FC relu--> 5) +--[joint FC]----+
//   age (1), gender (2), ethnicity (3) --+
//
// The joint attribute layer is present only when two or more attributes are
// configured; it maps the concatenated attribute block of size d to
// ceil(8d/18) units, i.e. 18 -> 8 with all five attributes. A single attribute
// is concatenated directly. Concatenation order is visual, audio, attributes
// (emotion, attractiveness, age, gender, ethnicity).
//
// Training treats every sampled frame of a video as an independent sample
// carrying the video's labels; prediction takes the per-trait median over
// frame-level outputs.

#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "apf/consensus.hpp"
#include "apf/core_types.hpp"
#include "apf/error.hpp"
#include "apf/io.hpp"
#include "apf/metrics.hpp"
#include "apf/nn.hpp"
#include "apf/rng.hpp"

namespace apf {

inline constexpr std::size_t kEmotionReducedDim = 7;
inline constexpr std::size_t kAttractivenessDim = 5;
// Ages enter the network in centuries so the input is O(1).
inline constexpr double kAgeFeatureScale = 0.01;
inline constexpr std::uint32_t kCheckpointMagic = 0x4d465041;  // "APFM"

namespace detail {
inline constexpr std::uint64_t kInitStream = 0xfeed'0001ULL;
inline constexpr std::uint64_t kShuffleStream = 0xfeed'0002ULL;
inline constexpr std::uint64_t kGradCheckStream = 0xfeed'0003ULL;
}  // namespace detail

/// Video-level attribute features as the network consumes them.
struct AttributeInputs {
  std::vector<double> emotion;
  std::vector<double> attractiveness;
  std::optional<double> age;  // already scaled by kAgeFeatureScale
  std::vector<double> gender;
  std::vector<double> ethnicity;
};

inline AttributeInputs attribute_inputs(const ConsensusVector& cv) {
  AttributeInputs a;
  if (cv.emotion) a.emotion = cv.emotion->values;
  if (cv.attractiveness) a.attractiveness = cv.attractiveness->values;
  if (cv.age) a.age = *cv.age * kAgeFeatureScale;
  if (cv.gender) a.gender.assign(cv.gender->begin(), cv.gender->end());
  if (cv.ethnicity) a.ethnicity.assign(cv.ethnicity->begin(), cv.ethnicity->end());
  return a;
}

struct FusionModel {
  ModalityConfig config;
  nn::DenseLayer visual_fc;
  std::optional<nn::DenseLayer> emotion_fc;
  std::optional<nn::DenseLayer> attractiveness_fc;
  std::optional<nn::DenseLayer> attribute_joint_fc;
  nn::DenseLayer head;

  std::size_t visual_dim() const { return visual_fc.out_dim; }
  std::size_t audio_dim() const { return config.audio == AudioSlice::none ? 0 : kEmbeddingDim; }

  /// Attribute block size before the joint layer.
  std::size_t attribute_raw_dim() const {
    std::size_t d = 0;
    if (config.has(Attribute::emotion)) d += kEmotionReducedDim;
    if (config.has(Attribute::attractiveness)) d += kAttractivenessDim;
    if (config.has(Attribute::age)) d += 1;
    if (config.has(Attribute::gender)) d += kNumGenders;
    if (config.has(Attribute::ethnicity)) d += kNumEthnicities;
    return d;
  }

  std::size_t attribute_dim() const { return attribute_joint_fc ? attribute_joint_fc->out_dim : attribute_raw_dim(); }
  std::size_t fused_dim() const { return visual_dim() + audio_dim() + attribute_dim(); }

  std::vector<nn::DenseLayer*> layers() {
    std::vector<nn::DenseLayer*> out{&visual_fc};
    if (emotion_fc) out.push_back(&*emotion_fc);
    if (attractiveness_fc) out.push_back(&*attractiveness_fc);
    if (attribute_joint_fc) out.push_back(&*attribute_joint_fc);
    out.push_back(&head);
    return out;
  }

  std::vector<const nn::DenseLayer*> layers() const {
    auto out = const_cast<FusionModel*>(this)->layers();
    return {out.begin(), out.end()};
  }

  /// Weights then bias of each layer, in layers() order.
  std::vector<std::span<double>> parameters() {
    std::vector<std::span<double>> out;
    for (auto* l : layers()) {
      out.emplace_back(l->weights);
      out.emplace_back(l->bias);
    }
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto* l : layers()) n += l->parameter_count();
    return n;
  }

  friend bool operator==(const FusionModel&, const FusionModel&) = default;
};

/// Joint attribute width for a concatenated block of `raw` features.
inline std::size_t joint_attribute_dim(std::size_t raw) { return (raw * 8 + 17) / 18; }

inline FusionModel build_model(const ModalityConfig& config, std::uint64_t seed) {
  validate_config(config);
  FusionModel m;
  m.config = config;
  const bool audio = config.audio != AudioSlice::none;
  m.visual_fc = nn::DenseLayer(kEmbeddingDim, audio ? 128 : 256, nn::Activation::relu);
  if (config.has(Attribute::emotion))
    m.emotion_fc = nn::DenseLayer(dynamic_block_size(config.emotion_consensus, kNumEmotions * kHistogramBins),
                                  kEmotionReducedDim, nn::Activation::relu);
  if (config.has(Attribute::attractiveness) && config.attractiveness_consensus == ConsensusMode::ordered)
    m.attractiveness_fc = nn::DenseLayer(2 * kHistogramBins, kAttractivenessDim, nn::Activation::relu);
  if (config.attribute_count() >= 2) {
    const std::size_t raw = m.attribute_raw_dim();
    m.attribute_joint_fc = nn::DenseLayer(raw, joint_attribute_dim(raw), nn::Activation::relu);
  }
  m.head = nn::DenseLayer(m.fused_dim(), kNumTraits, nn::Activation::sigmoid);

  Rng rng(derive_seed(seed, detail::kInitStream));
  for (auto* l : m.layers()) l->init_uniform(rng);
  return m;
}

/// Intermediate values of one forward pass, consumed by backward_sample().
struct FusionTrace {
  nn::LayerCache visual, emotion, attractiveness, joint, head;
  TraitVector output;
};

namespace detail {

inline void require_size(std::span<const double> v, std::size_t n, std::string_view modality) {
  if (v.size() != n)
    throw SchemaError("fusion input '" + std::string(modality) + "': expected " + std::to_string(n) +
                      " values, got " + std::to_string(v.size()));
}

}  // namespace detail

inline TraitVector forward_sample(const FusionModel& m, std::span<const double> visual, std::span<const double> audio,
                                  const AttributeInputs& attrs, FusionTrace* trace = nullptr) {
  const auto& cfg = m.config;
  detail::require_size(visual, kEmbeddingDim, "visual");
  detail::require_size(audio, m.audio_dim(), "audio");

  std::vector<double> fused;
  fused.reserve(m.fused_dim());
  const auto v = nn::forward(m.visual_fc, visual, trace ? &trace->visual : nullptr);
  fused.insert(fused.end(), v.begin(), v.end());
  fused.insert(fused.end(), audio.begin(), audio.end());

  std::vector<double> attr;
  if (cfg.has(Attribute::emotion)) {
    detail::require_size(attrs.emotion, m.emotion_fc->in_dim, "emotion");
    const auto e = nn::forward(*m.emotion_fc, attrs.emotion, trace ? &trace->emotion : nullptr);
    attr.insert(attr.end(), e.begin(), e.end());
  }
  if (cfg.has(Attribute::attractiveness)) {
    if (m.attractiveness_fc) {
      detail::require_size(attrs.attractiveness, m.attractiveness_fc->in_dim, "attractiveness");
      const auto a = nn::forward(*m.attractiveness_fc, attrs.attractiveness, trace ? &trace->attractiveness : nullptr);
      attr.insert(attr.end(), a.begin(), a.end());
    } else {
      detail::require_size(attrs.attractiveness, kAttractivenessDim, "attractiveness");
      attr.insert(attr.end(), attrs.attractiveness.begin(), attrs.attractiveness.end());
    }
  }
  if (cfg.has(Attribute::age)) {
    if (!attrs.age) throw SchemaError("fusion input 'age': missing");
    attr.push_back(*attrs.age);
  }
  if (cfg.has(Attribute::gender)) {
    detail::require_size(attrs.gender, kNumGenders, "gender");
    attr.insert(attr.end(), attrs.gender.begin(), attrs.gender.end());
  }
  if (cfg.has(Attribute::ethnicity)) {
    detail::require_size(attrs.ethnicity, kNumEthnicities, "ethnicity");
    attr.insert(attr.end(), attrs.ethnicity.begin(), attrs.ethnicity.end());
  }
  if (m.attribute_joint_fc) attr = nn::forward(*m.attribute_joint_fc, attr, trace ? &trace->joint : nullptr);
  fused.insert(fused.end(), attr.begin(), attr.end());

  const auto out = nn::forward(m.head, fused, trace ? &trace->head : nullptr);
  TraitVector t;
  std::copy(out.begin(), out.end(), t.values.begin());
  if (trace) trace->output = t;
  return t;
}

/// Parameter gradients aligned with FusionModel::layers().
using FusionGrads = std::vector<nn::LayerGrad>;

inline FusionGrads zero_grads(const FusionModel& m) {
  FusionGrads g;
  for (const auto* l : m.layers()) g.emplace_back(*l);
  return g;
}

/// Accumulates parameter gradients for dL/d(output) = grad_out.
inline void backward_sample(const FusionModel& m, const FusionTrace& trace, const TraitVector& grad_out,
                            FusionGrads& grads) {
  std::size_t slot = 0;
  auto& g_visual = grads[slot++];
  nn::LayerGrad* g_emotion = m.emotion_fc ? &grads[slot++] : nullptr;
  nn::LayerGrad* g_attr = m.attractiveness_fc ? &grads[slot++] : nullptr;
  nn::LayerGrad* g_joint = m.attribute_joint_fc ? &grads[slot++] : nullptr;
  auto& g_head = grads[slot++];

  const auto d_fused = nn::backward(m.head, trace.head, grad_out.values, g_head);
  const std::size_t nv = m.visual_dim();
  nn::backward(m.visual_fc, trace.visual, std::span(d_fused).subspan(0, nv), g_visual);

  const std::size_t attr_offset = nv + m.audio_dim();
  std::vector<double> d_attr(d_fused.begin() + static_cast<std::ptrdiff_t>(attr_offset), d_fused.end());
  if (m.attribute_joint_fc) d_attr = nn::backward(*m.attribute_joint_fc, trace.joint, d_attr, *g_joint);

  std::size_t pos = 0;
  if (m.emotion_fc) {
    nn::backward(*m.emotion_fc, trace.emotion, std::span(d_attr).subspan(pos, kEmotionReducedDim), *g_emotion);
    pos += kEmotionReducedDim;
  }
  if (m.attractiveness_fc)
    nn::backward(*m.attractiveness_fc, trace.attractiveness, std::span(d_attr).subspan(pos, kAttractivenessDim),
                 *g_attr);
}

/// One fully materialized training/checking sample.
struct FusionSample {
  std::vector<double> visual;
  std::vector<double> audio;
  AttributeInputs attributes;
  TraitVector target;
};

/// Binds a model to the MSE loss so it satisfies nn::Differentiable.
struct FusionObjective {
  FusionModel& model;

  std::vector<std::span<double>> parameters() { return model.parameters(); }

  double loss(const FusionSample& s) const {
    const auto p = forward_sample(model, s.visual, s.audio, s.attributes);
    return nn::mse_loss(std::span(&p, 1), std::span(&s.target, 1)).loss;
  }

  std::pair<double, std::vector<std::vector<double>>> loss_and_gradients(const FusionSample& s) const {
    FusionTrace trace;
    const auto p = forward_sample(model, s.visual, s.audio, s.attributes, &trace);
    const auto l = nn::mse_loss(std::span(&p, 1), std::span(&s.target, 1));
    auto grads = zero_grads(model);
    backward_sample(model, trace, l.grad[0], grads);
    std::vector<std::vector<double>> flat;
    for (auto& g : grads) {
      flat.push_back(std::move(g.weights));
      flat.push_back(std::move(g.bias));
    }
    return {l.loss, std::move(flat)};
  }
};

/// A random input/target pair shaped for `m`, used for gradient checks.
/// Inputs are drawn from the ranges the real features occupy.
inline FusionSample random_fusion_sample(const FusionModel& m, Rng& rng) {
  FusionSample s;
  auto fill = [&](std::vector<double>& v, std::size_t n, double lo, double hi) {
    v.resize(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
  };
  fill(s.visual, kEmbeddingDim, -1.0, 1.0);
  fill(s.audio, m.audio_dim(), -1.0, 1.0);
  const auto& c = m.config;
  if (c.has(Attribute::emotion)) fill(s.attributes.emotion, m.emotion_fc->in_dim, 0.0, 1.0);
  if (c.has(Attribute::attractiveness))
    fill(s.attributes.attractiveness, m.attractiveness_fc ? m.attractiveness_fc->in_dim : kAttractivenessDim, 0.0, 1.0);
  if (c.has(Attribute::age)) s.attributes.age = rng.uniform(0.15, 0.7);
  if (c.has(Attribute::gender)) fill(s.attributes.gender, kNumGenders, 0.0, 1.0);
  if (c.has(Attribute::ethnicity)) fill(s.attributes.ethnicity, kNumEthnicities, 0.0, 1.0);
  for (auto& t : s.target.values) t = rng.uniform();
  return s;
}

/// Max relative gradient error of a freshly built `config` model on one random sample.
inline double fusion_grad_check(const ModalityConfig& config, std::uint64_t seed) {
  auto model = build_model(config, seed);
  Rng rng(derive_seed(seed, detail::kGradCheckStream));
  const auto sample = random_fusion_sample(model, rng);
  FusionObjective objective{model};
  return nn::grad_check(objective, sample);
}

// ---------------------------------------------------------------------------
// Samples

inline std::vector<double> widen(const Embedding& e) { return {e.begin(), e.end()}; }

/// Per-video inputs shared by all of its frame samples. Keeps a pointer into
/// the dataset's embeddings, so the dataset must outlive it.
struct VideoInputs {
  std::size_t dataset_index = 0;
  std::string video_id;
  TraitVector labels;
  std::uint32_t frame_count = 0;
  const EmbeddingBundle* embeddings = nullptr;
  std::vector<double> audio;
  AttributeInputs attributes;

  std::vector<std::uint32_t> available_frames() const {
    std::vector<std::uint32_t> out;
    for (const auto& [idx, e] : embeddings->visual) out.push_back(idx);
    return out;
  }
};

struct TrainingSample {
  std::size_t video = 0;  // index into SampleSet::videos
  std::vector<double> visual;
};

struct SampleSet {
  std::vector<VideoInputs> videos;
  std::vector<TrainingSample> samples;
  std::vector<std::string> skipped;  // "<video_id>: reason"
};

/// Builds the video inputs for one dataset entry, or returns a reason it is unusable.
inline std::variant<VideoInputs, std::string> make_video_inputs(const Dataset& d, std::size_t index,
                                                                const ModalityConfig& config) {
  const auto& bundle = d.embeddings[index];
  if (bundle.visual.empty()) return std::string("no visual embeddings");
  VideoInputs v;
  v.dataset_index = index;
  v.video_id = d.records[index].video_id;
  v.labels = d.records[index].labels;
  v.frame_count = d.series[index].frame_count;
  v.embeddings = &bundle;
  if (config.audio != AudioSlice::none) v.audio = widen(bundle.audio(config.audio));
  try {
    v.attributes = attribute_inputs(build_consensus(d.series[index], config));
  } catch (const MissingAttributeError& e) {
    return std::string(e.what());
  }
  return v;
}

/// m_train equidistant frames per video of `split`, each paired with the
/// video's shared audio, consensus and labels.
inline SampleSet make_training_samples(const Dataset& d, const ModalityConfig& config, Split split = Split::train) {
  SampleSet set;
  for (std::size_t i : d.indices(split)) {
    auto built = make_video_inputs(d, i, config);
    if (auto* reason = std::get_if<std::string>(&built)) {
      set.skipped.push_back(d.records[i].video_id + ": " + *reason);
      continue;
    }
    set.videos.push_back(std::move(std::get<VideoInputs>(built)));
    const auto& v = set.videos.back();
    const auto frames = select_equidistant_frames(v.frame_count, v.available_frames(), config.m_train);
    for (std::uint32_t f : frames) set.samples.push_back({set.videos.size() - 1, widen(v.embeddings->visual.at(f))});
  }
  return set;
}

/// Per-trait median of m_test frame-level predictions.
inline TraitVector predict_video(const FusionModel& model, const VideoInputs& video, int m_test) {
  if (!video.embeddings || video.embeddings->visual.empty())
    throw SchemaError("predict_video: video " + video.video_id + " has no usable frames");
  const auto frames = select_equidistant_frames(video.frame_count, video.available_frames(), m_test);
  std::array<std::vector<double>, kNumTraits> per_trait;
  for (std::uint32_t f : frames) {
    const auto p = forward_sample(model, widen(video.embeddings->visual.at(f)), video.audio, video.attributes);
    for (std::size_t t = 0; t < kNumTraits; ++t) per_trait[t].push_back(p[t]);
  }
  TraitVector out;
  for (std::size_t t = 0; t < kNumTraits; ++t) out[t] = median(per_trait[t]);
  return out;
}

struct SplitPredictions {
  std::vector<Prediction> predictions;
  std::vector<TraitVector> labels;  // aligned with predictions
  std::vector<std::string> skipped;
};

inline SplitPredictions predict_split(const FusionModel& model, const Dataset& d, Split split) {
  SplitPredictions out;
  for (std::size_t i : d.indices(split)) {
    auto built = make_video_inputs(d, i, model.config);
    if (auto* reason = std::get_if<std::string>(&built)) {
      out.skipped.push_back(d.records[i].video_id + ": " + *reason);
      continue;
    }
    const auto& v = std::get<VideoInputs>(built);
    out.predictions.push_back({v.video_id, predict_video(model, v, model.config.m_test)});
    out.labels.push_back(v.labels);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training

struct TrainOptions {
  int stage_a_epochs = 40;
  int stage_b_epochs = 100;
  double stage_a_learning_rate = 0.001;
  double stage_b_learning_rate = 0.0005;
  int batch_size = 25;
  int patience = 5;
  double decay = 0.95;
};

struct EpochLog {
  int epoch = 0;  // 1-based over both stages
  char stage = 'A';
  double train_loss = 0.0;
  double val_mae = 0.0;
  double learning_rate = 0.0;  // rate in effect during the epoch

  friend bool operator==(const EpochLog&, const EpochLog&) = default;
};

struct TrainReport {
  std::vector<EpochLog> epochs;
  int stage_b_first_epoch = 0;
  std::uint64_t seed = 0;
  ModalityConfig config;
  std::size_t train_samples = 0;
  std::vector<std::string> skipped;

  friend bool operator==(const TrainReport&, const TrainReport&) = default;
};

struct TrainResult {
  FusionModel model;
  TrainReport report;
};

namespace detail {

inline double validation_mae(const FusionModel& model, const std::vector<VideoInputs>& videos) {
  double sum = 0.0;
  for (const auto& v : videos) {
    const auto p = predict_video(model, v, model.config.m_test);
    for (std::size_t t = 0; t < kNumTraits; ++t) sum += std::abs(p[t] - v.labels[t]);
  }
  return sum / static_cast<double>(videos.size() * kNumTraits);
}

}  // namespace detail

/// Two-stage schedule: stage A at the stage-A rate, then stage B at the
/// stage-B rate with fresh ADAM moments and a fresh plateau scheduler. Each
/// stage decays its rate on validation-MAE plateaus.
inline TrainResult train(FusionModel model, const Dataset& d, std::uint64_t seed, const TrainOptions& opt = {}) {
  if (opt.batch_size < 1) throw SchemaError("train: batch size must be >= 1");
  const auto set = make_training_samples(d, model.config, Split::train);
  const auto val = make_training_samples(d, model.config, Split::validation);
  if (set.samples.empty()) throw SchemaError("train: empty training split");
  if (val.videos.empty()) throw SchemaError("train: empty validation split");

  TrainResult result{std::move(model), {}};
  auto& m = result.model;
  auto& report = result.report;
  report.seed = seed;
  report.config = m.config;
  report.train_samples = set.samples.size();
  report.skipped = set.skipped;
  report.skipped.insert(report.skipped.end(), val.skipped.begin(), val.skipped.end());
  report.stage_b_first_epoch = opt.stage_a_epochs + 1;

  Rng rng(derive_seed(seed, detail::kShuffleStream));
  std::vector<std::size_t> order(set.samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  int epoch = 0;
  auto run_stage = [&](char stage, int epochs, double lr) {
    auto params = m.parameters();
    nn::AdamState adam(params, lr);
    nn::PlateauScheduler sched(opt.patience, opt.decay);
    auto grads = zero_grads(m);
    std::vector<TraitVector> preds, targets;
    std::vector<FusionTrace> traces;
    for (int e = 0; e < epochs; ++e) {
      ++epoch;
      rng.shuffle(std::span(order));
      double loss_sum = 0.0;
      for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(opt.batch_size)) {
        const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(opt.batch_size));
        const std::size_t n = stop - start;
        preds.resize(n);
        targets.resize(n);
        traces.resize(n);
        for (std::size_t b = 0; b < n; ++b) {
          const auto& s = set.samples[order[start + b]];
          const auto& v = set.videos[s.video];
          preds[b] = forward_sample(m, s.visual, v.audio, v.attributes, &traces[b]);
          targets[b] = v.labels;
        }
        const auto l = nn::mse_loss(preds, targets);
        if (!std::isfinite(l.loss))
          throw NumericError("train: non-finite loss at stage " + std::string(1, stage) + ", epoch " +
                             std::to_string(epoch) + ", batch starting at sample " + std::to_string(start));
        loss_sum += l.loss * static_cast<double>(n);
        for (auto& g : grads) g.zero();
        for (std::size_t b = 0; b < n; ++b) backward_sample(m, traces[b], l.grad[b], grads);
        std::vector<std::span<const double>> gspans;
        for (const auto& g : grads) {
          gspans.emplace_back(g.weights);
          gspans.emplace_back(g.bias);
        }
        nn::adam_step(adam, params, gspans);
      }
      const double val_mae = detail::validation_mae(m, val.videos);
      report.epochs.push_back(
          {epoch, stage, loss_sum / static_cast<double>(order.size()), val_mae, adam.learning_rate});
      sched.step(val_mae, adam.learning_rate);
    }
  };
  run_stage('A', opt.stage_a_epochs, opt.stage_a_learning_rate);
  run_stage('B', opt.stage_b_epochs, opt.stage_b_learning_rate);
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoints: magic, version, header length, JSON architecture header,
// parameter count, then little-endian float64 parameters in parameters() order.

inline nlohmann::ordered_json architecture_json(const FusionModel& m) {
  nlohmann::ordered_json j;
  j["format"] = "apfusion-model";
  j["format_version"] = kFormatVersion;
  j["config"] = to_json(m.config);
  auto layers = nlohmann::ordered_json::array();
  auto describe_layer = [&](const char* name, const nn::DenseLayer& l) {
    layers.push_back({{"name", name}, {"in", l.in_dim}, {"out", l.out_dim}, {"activation", std::string(to_string(l.activation))}});
  };
  describe_layer("visual_fc", m.visual_fc);
  if (m.emotion_fc) describe_layer("emotion_fc", *m.emotion_fc);
  if (m.attractiveness_fc) describe_layer("attractiveness_fc", *m.attractiveness_fc);
  if (m.attribute_joint_fc) describe_layer("attribute_joint_fc", *m.attribute_joint_fc);
  describe_layer("head", m.head);
  j["layers"] = layers;
  j["fused_dim"] = m.fused_dim();
  return j;
}

inline void save_model(const FusionModel& m, const fs::path& path) {
  auto out = detail::open_out(path, true);
  const std::string header = architecture_json(m).dump();
  detail::put_u32(out, kCheckpointMagic);
  detail::put_u32(out, static_cast<std::uint32_t>(kFormatVersion));
  detail::put_u64(out, header.size());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  detail::put_u64(out, m.parameter_count());
  for (const auto* l : m.layers()) {
    for (double w : l->weights) detail::put_f64(out, w);
    for (double b : l->bias) detail::put_f64(out, b);
  }
  if (!out) throw IoError("write failed: " + path.string());
}

inline FusionModel load_model(const fs::path& path) {
  auto in = detail::open_in(path, true);
  try {
    if (detail::get_u32(in) != kCheckpointMagic) throw SchemaError(path.string() + ": not a model checkpoint");
    if (detail::get_u32(in) != static_cast<std::uint32_t>(kFormatVersion))
      throw SchemaError(path.string() + ": unsupported checkpoint version");
    const auto header_len = detail::get_u64(in);
    if (header_len > (1u << 24)) throw SchemaError(path.string() + ": implausible header length");
    std::string header(header_len, '\0');
    if (!in.read(header.data(), static_cast<std::streamsize>(header_len))) throw IoError("truncated header");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(header);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(path.string() + ": bad checkpoint header: " + e.what());
    }
    auto m = build_model(modality_config_from_json(j.at("config")), 0);
    if (architecture_json(m).dump() != nlohmann::ordered_json::parse(header).dump())
      throw SchemaError(path.string() + ": architecture header does not match its config");
    if (detail::get_u64(in) != m.parameter_count()) throw SchemaError(path.string() + ": parameter count mismatch");
    for (auto* l : m.layers()) {
      for (auto& w : l->weights) w = detail::get_f64(in);
      for (auto& b : l->bias) b = detail::get_f64(in);
    }
    if (in.peek() != std::char_traits<char>::eof()) throw SchemaError(path.string() + ": trailing bytes");
    return m;
  } catch (const IoError&) {
    throw SchemaError(path.string() + ": truncated checkpoint");
  }
}

// ---------------------------------------------------------------------------
// Ablation

struct NamedConfig {
  std::string group;
  std::string name;
  ModalityConfig config;
};

/// Visual baseline, one row per added modality, the joint attribute model and the proposed model.
inline std::vector<NamedConfig> modality_grid() {
  using A = Attribute;
  auto v = [] { return ModalityConfig{}; };
  std::vector<NamedConfig> out;
  auto add = [&](ModalityConfig c) { out.push_back({"modalities", describe(c), c}); };
  add(v());
  add(v().with(A::emotion));
  add(v().with(A::attractiveness));
  add(v().with(A::age));
  add(v().with(A::gender));
  add(v().with(A::ethnicity));
  auto audio = v();
  audio.audio = AudioSlice::whole;
  add(audio);
  add(v().with(A::emotion).with(A::attractiveness).with(A::age));
  auto proposed = v().with(A::emotion).with(A::attractiveness).with(A::age);
  proposed.audio = AudioSlice::first_half;
  out.push_back({"modalities", "Proposed (" + describe(proposed) + ")", proposed});
  return out;
}

inline std::vector<NamedConfig> emotion_slice_grid() {
  std::vector<NamedConfig> out;
  for (auto mode : {ConsensusMode::orderless, ConsensusMode::ordered, ConsensusMode::first_half,
                    ConsensusMode::second_half}) {
    auto c = ModalityConfig{}.with(Attribute::emotion);
    c.emotion_consensus = mode;
    out.push_back({"emotion_slices", "V+Em " + std::string(to_string(mode)), c});
  }
  return out;
}

inline std::vector<NamedConfig> attractiveness_slice_grid() {
  std::vector<NamedConfig> out;
  for (auto mode : {ConsensusMode::orderless, ConsensusMode::ordered, ConsensusMode::first_half,
                    ConsensusMode::second_half}) {
    auto c = ModalityConfig{}.with(Attribute::attractiveness);
    c.attractiveness_consensus = mode;
    out.push_back({"attractiveness_slices", "V+Att " + std::string(to_string(mode)), c});
  }
  return out;
}

inline std::vector<NamedConfig> audio_slice_grid() {
  std::vector<NamedConfig> out;
  for (auto slice : {AudioSlice::whole, AudioSlice::first_half, AudioSlice::second_half}) {
    ModalityConfig c;
    c.audio = slice;
    out.push_back({"audio_slices", "V+Audio " + std::string(to_string(slice)), c});
  }
  return out;
}

struct AblationRow {
  NamedConfig config;
  bool ok = false;
  std::string error;
  metrics::EvaluationResult result;
};

/// Trains and evaluates every config on the same splits with the same seed.
/// Failed configs are reported and do not stop the run. Results do not depend on `jobs`.
inline std::vector<AblationRow> run_ablation(const Dataset& d, const std::vector<NamedConfig>& configs,
                                             std::uint64_t seed, const TrainOptions& opt = {}, unsigned jobs = 1) {
  if (configs.empty()) throw UsageError("run_ablation: no configurations");
  std::vector<AblationRow> rows(configs.size());
  auto run_one = [&](std::size_t i) {
    auto& row = rows[i];
    row.config = configs[i];
    try {
      auto trained = train(build_model(configs[i].config, seed), d, seed, opt);
      const auto preds = predict_split(trained.model, d, Split::test);
      std::vector<TraitVector> p;
      for (const auto& x : preds.predictions) p.push_back(x.traits);
      row.result = metrics::accuracy(p, preds.labels);
      row.ok = true;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(configs.size())));
  if (jobs == 1) {
    for (std::size_t i = 0; i < configs.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < configs.size(); i = next++) run_one(i);
      });
    for (auto& th : pool) th.join();
  }
  return rows;
}

}  // namespace apf
