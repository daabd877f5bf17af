#include "attribeval/probe.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <random>

#include "attribeval/rng.hpp"

namespace attribeval::probe {

namespace {

std::size_t common_dimension(std::span<const FeatureVector> features) {
  const std::size_t dim = features.front().values.size();
  for (const auto& fv : features) {
    if (fv.values.size() != dim)
      throw Error("feature vector for record '" + fv.record_id + "' (layer " +
                  std::to_string(fv.layer) + ") has dimension " +
                  std::to_string(fv.values.size()) + ", expected " + std::to_string(dim));
  }
  return dim;
}

double target(Label label) { return label == Label::Attributable ? 1.0 : 0.0; }

// log(1 + exp(z)) without overflow.
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

// Rows of `z` are already standardized; shared by the public gradient and
// the training loop.
LossAndGrad loss_grad_kernel(std::span<const double> weights, double bias,
                             std::span<const std::vector<double>> z,
                             std::span<const double> y, double l2) {
  const std::size_t dim = weights.size();
  LossAndGrad out;
  out.grad_weights.assign(dim, 0.0);
  for (std::size_t i = 0; i < z.size(); ++i) {
    double logit = bias;
    for (std::size_t k = 0; k < dim; ++k) logit += weights[k] * z[i][k];
    out.loss += softplus(logit) - y[i] * logit;
    const double residual = logistic(logit) - y[i];
    for (std::size_t k = 0; k < dim; ++k) out.grad_weights[k] += residual * z[i][k];
    out.grad_bias += residual;
  }
  const auto n = static_cast<double>(z.size());
  out.loss /= n;
  out.grad_bias /= n;
  double norm2 = 0;
  for (std::size_t k = 0; k < dim; ++k) {
    out.grad_weights[k] = out.grad_weights[k] / n + 2.0 * l2 * weights[k];
    norm2 += weights[k] * weights[k];
  }
  out.loss += l2 * norm2;
  return out;
}

std::vector<double> apply_standardization(const ProbeParams& params, std::span<const double> x) {
  if (x.size() != params.dimension())
    throw Error("probe expects dimension " + std::to_string(params.dimension()) + ", got " +
                std::to_string(x.size()));
  std::vector<double> z(x.size());
  for (std::size_t k = 0; k < x.size(); ++k)
    z[k] = (x[k] - params.feature_means[k]) / params.feature_stds[k];
  return z;
}

std::vector<int> resolve_layers(const LayeredFeatures& features, std::span<const int> layers) {
  std::vector<int> out;
  if (layers.empty()) {
    for (const auto& [layer, set] : features) out.push_back(layer);
  } else {
    out.assign(layers.begin(), layers.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  }
  for (const int layer : out) {
    const auto it = features.find(layer);
    if (it == features.end() || it->second.empty())
      throw Error("no feature vectors for layer " + std::to_string(layer));
  }
  return out;
}

}  // namespace

Standardized standardize(std::span<const FeatureVector> features) {
  if (features.size() < 2) throw Error("standardize needs at least two feature vectors");
  const std::size_t dim = common_dimension(features);
  const auto n = static_cast<double>(features.size());

  Standardized out;
  out.means.assign(dim, 0.0);
  out.stds.assign(dim, 0.0);
  for (const auto& fv : features)
    for (std::size_t k = 0; k < dim; ++k) out.means[k] += fv.values[k];
  for (auto& m : out.means) m /= n;
  for (const auto& fv : features) {
    for (std::size_t k = 0; k < dim; ++k) {
      const double d = fv.values[k] - out.means[k];
      out.stds[k] += d * d;
    }
  }
  for (auto& s : out.stds) s = std::max(std::sqrt(s / n), kStdFloor);

  out.features.assign(features.begin(), features.end());
  for (auto& fv : out.features)
    for (std::size_t k = 0; k < dim; ++k) fv.values[k] = (fv.values[k] - out.means[k]) / out.stds[k];
  return out;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0)) throw Error("learning_rate must be > 0");
  if (epochs < 1) throw Error("epochs must be >= 1");
  if (!(l2 >= 0)) throw Error("l2 must be >= 0");
  if (!(decision_threshold > 0 && decision_threshold < 1))
    throw Error("decision_threshold must lie in (0, 1)");
}

double logistic(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double predict(const ProbeParams& params, std::span<const double> x) {
  const auto z = apply_standardization(params, x);
  double logit = params.bias;
  for (std::size_t k = 0; k < z.size(); ++k) logit += params.weights[k] * z[k];
  return logistic(logit);
}

Label predict_label(const ProbeParams& params, std::span<const double> x,
                    double decision_threshold) {
  return predict(params, x) >= decision_threshold ? Label::Attributable : Label::NotAttributable;
}

LossAndGrad bce_loss_and_grad(const ProbeParams& params, std::span<const FeatureVector> batch,
                              double l2) {
  if (batch.empty()) throw Error("bce_loss_and_grad: empty batch");
  std::vector<std::vector<double>> z;
  std::vector<double> y;
  z.reserve(batch.size());
  y.reserve(batch.size());
  for (const auto& fv : batch) {
    z.push_back(apply_standardization(params, fv.values));
    y.push_back(target(fv.label));
  }
  return loss_grad_kernel(params.weights, params.bias, z, y, l2);
}

TrainedProbe train_probe(std::span<const FeatureVector> features, const TrainConfig& config) {
  config.validate();
  auto standardized = standardize(features);
  const bool has_pos = std::any_of(features.begin(), features.end(),
                                   [](const auto& fv) { return fv.label == Label::Attributable; });
  const bool has_neg = std::any_of(features.begin(), features.end(), [](const auto& fv) {
    return fv.label == Label::NotAttributable;
  });
  if (!has_pos || !has_neg) throw Error("train_probe needs examples of both classes");

  std::vector<std::vector<double>> z;
  std::vector<double> y;
  z.reserve(standardized.features.size());
  for (auto& fv : standardized.features) {
    z.push_back(std::move(fv.values));
    y.push_back(target(fv.label));
  }

  TrainedProbe out;
  auto& params = out.params;
  params.weights.assign(standardized.means.size(), 0.0);
  params.feature_means = std::move(standardized.means);
  params.feature_stds = std::move(standardized.stds);
  out.loss_history.reserve(static_cast<std::size_t>(config.epochs) + 1);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto step = loss_grad_kernel(params.weights, params.bias, z, y, config.l2);
    out.loss_history.push_back(step.loss);
    for (std::size_t k = 0; k < params.weights.size(); ++k)
      params.weights[k] -= config.learning_rate * step.grad_weights[k];
    params.bias -= config.learning_rate * step.grad_bias;
  }
  out.loss_history.push_back(loss_grad_kernel(params.weights, params.bias, z, y, config.l2).loss);
  return out;
}

std::string_view to_string(EvalProtocol protocol) {
  return protocol == EvalProtocol::HoldOut80_20 ? "holdout80_20" : "train_equals_eval";
}

std::optional<EvalProtocol> parse_protocol(std::string_view text) {
  if (text == "holdout80_20" || text == "holdout") return EvalProtocol::HoldOut80_20;
  if (text == "train_equals_eval" || text == "train-eval") return EvalProtocol::TrainEqualsEval;
  return std::nullopt;
}

HoldOutSplit stratified_holdout(std::span<const FeatureVector> features, std::uint64_t seed) {
  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
  for (std::size_t i = 0; i < features.size(); ++i)
    (features[i].label == Label::Attributable ? pos : neg).push_back(i);
  if (pos.size() < 2 || neg.size() < 2)
    throw Error("hold-out split needs at least two examples of each class");

  std::mt19937_64 rng(seed);
  std::vector<bool> held(features.size(), false);
  for (auto* cls : {&pos, &neg}) {
    const auto n = cls->size();
    const auto want = static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(n)));
    const auto count = std::clamp<std::size_t>(want, 1, n - 1);
    seeded_shuffle(std::span<std::size_t>(*cls), rng);
    for (std::size_t i = 0; i < count; ++i) held[(*cls)[i]] = true;
  }

  HoldOutSplit split;
  for (std::size_t i = 0; i < features.size(); ++i)
    (held[i] ? split.eval : split.train).push_back(features[i]);
  return split;
}

metrics::MetricsRow evaluate_layer(int layer, std::span<const FeatureVector> features,
                                   const SweepOptions& options) {
  HoldOutSplit split;
  std::span<const FeatureVector> train = features;
  std::span<const FeatureVector> eval = features;
  if (options.protocol == EvalProtocol::HoldOut80_20) {
    split = stratified_holdout(features, options.train.seed);
    train = split.train;
    eval = split.eval;
  }

  const auto probe = train_probe(train, options.train);
  std::vector<Label> predictions;
  std::vector<Label> golds;
  predictions.reserve(eval.size());
  golds.reserve(eval.size());
  for (const auto& fv : eval) {
    predictions.push_back(predict_label(probe.params, fv.values, options.train.decision_threshold));
    golds.push_back(fv.label);
  }
  return metrics::make_row("layer " + std::to_string(layer), options.split,
                           metrics::confusion(predictions, golds));
}

std::vector<metrics::MetricsRow> layer_sweep(const LayeredFeatures& features,
                                             const SweepOptions& options,
                                             std::span<const int> layers) {
  options.train.validate();
  const auto order = resolve_layers(features, layers);
  const auto n = static_cast<std::int64_t>(order.size());
  std::vector<metrics::MetricsRow> rows(order.size());
  std::vector<std::exception_ptr> errors(order.size());

#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      rows[idx] = evaluate_layer(order[idx], features.at(order[idx]), options);
    } catch (...) {
      errors[idx] = std::current_exception();
    }
  }
  for (const auto& err : errors)
    if (err) std::rethrow_exception(err);
  return rows;
}

std::vector<metrics::MetricsRow> layer_sweep_serial(const LayeredFeatures& features,
                                                    const SweepOptions& options,
                                                    std::span<const int> layers) {
  options.train.validate();
  std::vector<metrics::MetricsRow> rows;
  for (const int layer : resolve_layers(features, layers))
    rows.push_back(evaluate_layer(layer, features.at(layer), options));
  return rows;
}

}  // namespace attribeval::probe
