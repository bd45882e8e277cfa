// Copyright 2026 The apfusion Authors
// SPDX-License-Identifier: Apache-2.0

// Minimal dense-network substrate: affine layers with ReLU/sigmoid, MSE,
// ADAM, reduce-on-plateau scheduling and a finite-difference gradient check.
// Everything trains in 64-bit reals.

#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "apf/core_types.hpp"
#include "apf/error.hpp"
#include "apf/rng.hpp"

namespace apf::nn {

enum class Activation : std::uint8_t { none, relu, sigmoid };

inline constexpr std::array<std::string_view, 3> kActivationNames = {"none", "relu", "sigmoid"};

inline std::string_view to_string(Activation a) { return kActivationNames[static_cast<std::size_t>(a)]; }

inline Activation parse_activation(std::string_view s) {
  return apf::detail::parse_enum<Activation>(s, kActivationNames, "activation");
}

inline double sigmoid(double x) {
  // Clamped so outputs stay strictly inside (0,1) even when exp saturates.
  const double s = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  return std::clamp(s, std::numeric_limits<double>::min(), 1.0 - std::numeric_limits<double>::epsilon() / 2);
}

/// y = activation(W x + b), W stored row-major (out x in).
struct DenseLayer {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::vector<double> weights;
  std::vector<double> bias;
  Activation activation = Activation::none;

  DenseLayer() = default;
  DenseLayer(std::size_t in, std::size_t out, Activation act)
      : in_dim(in), out_dim(out), weights(in * out, 0.0), bias(out, 0.0), activation(act) {}

  double& w(std::size_t row, std::size_t col) { return weights[row * in_dim + col]; }
  double w(std::size_t row, std::size_t col) const { return weights[row * in_dim + col]; }

  /// Weights uniform in +-1/sqrt(fan_in), biases zero.
  void init_uniform(Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
    for (auto& x : weights) x = rng.uniform(-bound, bound);
    std::fill(bias.begin(), bias.end(), 0.0);
  }

  std::size_t parameter_count() const { return weights.size() + bias.size(); }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Values remembered by forward() for the matching backward().
struct LayerCache {
  std::vector<double> input;
  std::vector<double> pre;
  std::vector<double> output;
};

struct LayerGrad {
  std::vector<double> weights;
  std::vector<double> bias;

  LayerGrad() = default;
  explicit LayerGrad(const DenseLayer& layer) : weights(layer.weights.size(), 0.0), bias(layer.bias.size(), 0.0) {}

  void zero() {
    std::fill(weights.begin(), weights.end(), 0.0);
    std::fill(bias.begin(), bias.end(), 0.0);
  }
};

inline std::vector<double> forward(const DenseLayer& layer, std::span<const double> x, LayerCache* cache = nullptr) {
  if (x.size() != layer.in_dim)
    throw SchemaError("dense forward: expected input of size " + std::to_string(layer.in_dim) + ", got " +
                      std::to_string(x.size()));
  std::vector<double> pre(layer.out_dim);
  for (std::size_t r = 0; r < layer.out_dim; ++r) {
    const double* row = layer.weights.data() + r * layer.in_dim;
    double acc = layer.bias[r];
    for (std::size_t c = 0; c < layer.in_dim; ++c) acc += row[c] * x[c];
    pre[r] = acc;
  }
  std::vector<double> out(pre);
  switch (layer.activation) {
    case Activation::none: break;
    case Activation::relu:
      for (auto& v : out) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::sigmoid:
      for (auto& v : out) v = sigmoid(v);
      break;
  }
  if (cache) {
    cache->input.assign(x.begin(), x.end());
    cache->pre = std::move(pre);
    cache->output = out;
  }
  return out;
}

/// Accumulates dL/dW and dL/db into `grad` and returns dL/dx.
inline std::vector<double> backward(const DenseLayer& layer, const LayerCache& cache,
                                    std::span<const double> grad_out, LayerGrad& grad) {
  if (cache.input.size() != layer.in_dim || cache.pre.size() != layer.out_dim)
    throw SchemaError("dense backward: missing or stale forward cache");
  if (grad_out.size() != layer.out_dim) throw SchemaError("dense backward: gradient shape mismatch");
  if (grad.weights.size() != layer.weights.size()) grad = LayerGrad(layer);

  std::vector<double> delta(grad_out.begin(), grad_out.end());
  switch (layer.activation) {
    case Activation::none: break;
    case Activation::relu:
      for (std::size_t r = 0; r < delta.size(); ++r)
        if (cache.pre[r] <= 0.0) delta[r] = 0.0;
      break;
    case Activation::sigmoid:
      for (std::size_t r = 0; r < delta.size(); ++r) {
        const double s = cache.output[r];
        delta[r] *= s * (1.0 - s);
      }
      break;
  }

  std::vector<double> grad_in(layer.in_dim, 0.0);
  for (std::size_t r = 0; r < layer.out_dim; ++r) {
    const double d = delta[r];
    if (d == 0.0) continue;
    grad.bias[r] += d;
    double* gw = grad.weights.data() + r * layer.in_dim;
    const double* row = layer.weights.data() + r * layer.in_dim;
    for (std::size_t c = 0; c < layer.in_dim; ++c) {
      gw[c] += d * cache.input[c];
      grad_in[c] += d * row[c];
    }
  }
  return grad_in;
}

struct LossResult {
  double loss = 0.0;
  std::vector<TraitVector> grad;
};

/// Mean over batch and traits of the squared error, with its gradient.
inline LossResult mse_loss(std::span<const TraitVector> pred, std::span<const TraitVector> target) {
  if (pred.empty()) throw SchemaError("mse_loss: empty batch");
  if (pred.size() != target.size()) throw SchemaError("mse_loss: batch size mismatch");
  const double scale = 1.0 / static_cast<double>(pred.size() * kNumTraits);
  LossResult out;
  out.grad.resize(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (std::size_t j = 0; j < kNumTraits; ++j) {
      const double d = pred[i][j] - target[i][j];
      out.loss += d * d;
      out.grad[i][j] = 2.0 * d * scale;
    }
  }
  out.loss *= scale;
  return out;
}

/// ADAM with bias-corrected moments; one moment pair per parameter tensor.
struct AdamState {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;

  AdamState() = default;
  AdamState(std::span<const std::span<double>> params, double lr) : learning_rate(lr) {
    for (const auto& p : params) {
      first_moment.emplace_back(p.size(), 0.0);
      second_moment.emplace_back(p.size(), 0.0);
    }
  }
};

inline void adam_step(AdamState& state, std::span<const std::span<double>> params,
                      std::span<const std::span<const double>> grads) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size())
    throw SchemaError("adam_step: parameter/gradient tensor count mismatch");
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (params[t].size() != grads[t].size() || params[t].size() != state.first_moment[t].size())
      throw SchemaError("adam_step: tensor " + std::to_string(t) + " shape mismatch");
    for (double g : grads[t])
      if (!std::isfinite(g)) throw NumericError("adam_step: non-finite gradient in tensor " + std::to_string(t));
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto& m = state.first_moment[t];
    auto& v = state.second_moment[t];
    auto p = params[t];
    auto g = grads[t];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

/// Multiplies the learning rate by `factor` after `patience` epochs without a
/// strict improvement of the monitored metric.
struct PlateauScheduler {
  double best_metric = std::numeric_limits<double>::infinity();
  int epochs_since_improve = 0;
  int patience = 5;
  double factor = 0.95;

  PlateauScheduler() = default;
  PlateauScheduler(int patience_epochs, double decay) : patience(patience_epochs), factor(decay) {
    if (patience < 1) throw SchemaError("scheduler patience must be >= 1");
    if (!(factor > 0.0 && factor < 1.0)) throw SchemaError("scheduler factor must lie in (0,1)");
  }

  /// Returns true when the learning rate was reduced.
  bool step(double metric, double& learning_rate) {
    if (!std::isfinite(metric)) throw NumericError("scheduler received a non-finite metric");
    if (metric < best_metric) {
      best_metric = metric;
      epochs_since_improve = 0;
      return false;
    }
    if (++epochs_since_improve >= patience) {
      learning_rate *= factor;
      epochs_since_improve = 0;
      return true;
    }
    return false;
  }
};

// Anything with flat parameter tensors and an analytic gradient of a scalar loss.
template <class Model, class Sample>
concept Differentiable = requires(Model& m, const Model& cm, const Sample& s) {
  { m.parameters() } -> std::convertible_to<std::vector<std::span<double>>>;
  { cm.loss(s) } -> std::convertible_to<double>;
  { cm.loss_and_gradients(s) };
};

inline constexpr double kGradCheckStep = 1e-5;
inline constexpr double kGradCheckFloor = 1e-6;

/// Relative error with a floored denominator so vanishing gradients do not blow up.
inline double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), kGradCheckFloor});
  return std::abs(analytic - numeric) / denom;
}

/// Largest relative error between analytic and central-difference gradients
/// over every parameter of the model.
template <class Model, class Sample>
  requires Differentiable<Model, Sample>
double grad_check(Model& model, const Sample& sample, double h = kGradCheckStep) {
  const auto analytic = model.loss_and_gradients(sample).second;
  auto params = model.parameters();
  double worst = 0.0;
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (std::size_t i = 0; i < params[t].size(); ++i) {
      double& p = params[t][i];
      const double saved = p;
      p = saved + h;
      const double up = model.loss(sample);
      p = saved - h;
      const double down = model.loss(sample);
      p = saved;
      const double numeric = (up - down) / (2.0 * h);
      worst = std::max(worst, relative_error(analytic[t][i], numeric));
    }
  }
  return worst;
}

/// A single dense layer trained against MSE; the smallest Differentiable model.
struct LinearRegressor {
  DenseLayer layer;

  struct Sample {
    std::vector<double> input;
    TraitVector target;
  };

  std::vector<std::span<double>> parameters() { return {layer.weights, layer.bias}; }

  double loss(const Sample& s) const {
    const auto out = forward(layer, s.input);
    TraitVector p;
    std::copy(out.begin(), out.end(), p.values.begin());
    return mse_loss(std::span(&p, 1), std::span(&s.target, 1)).loss;
  }

  std::pair<double, std::vector<std::vector<double>>> loss_and_gradients(const Sample& s) const {
    LayerCache cache;
    const auto out = forward(layer, s.input, &cache);
    TraitVector p;
    std::copy(out.begin(), out.end(), p.values.begin());
    const auto l = mse_loss(std::span(&p, 1), std::span(&s.target, 1));
    LayerGrad g(layer);
    backward(layer, cache, l.grad[0].values, g);
    return {l.loss, {g.weights, g.bias}};
  }
};

}  // namespace apf::nn
