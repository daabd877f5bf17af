#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "attribeval/metrics.hpp"
#include "attribeval/types.hpp"

namespace attribeval::probe {

/// Pooled attention features of one record at one layer site (1-based).
struct FeatureVector {
  std::string record_id;
  int layer = 1;
  std::vector<double> values;
  Label label = Label::NotAttributable;

  bool operator==(const FeatureVector&) const = default;
};

/// Feature vectors keyed by layer index.
using LayeredFeatures = std::map<int, std::vector<FeatureVector>>;

inline constexpr double kStdFloor = 1e-8;

struct Standardized {
  std::vector<FeatureVector> features;
  std::vector<double> means;
  std::vector<double> stds;  // population std, floored at kStdFloor
};

/// Per-dimension z-scores from the set's own statistics. Needs at least two
/// vectors of one common dimension.
Standardized standardize(std::span<const FeatureVector> features);

/// Linear probe: one logit over standardized features.
struct ProbeParams {
  std::vector<double> weights;
  double bias = 0;
  std::vector<double> feature_means;
  std::vector<double> feature_stds;

  std::size_t dimension() const { return weights.size(); }
  bool operator==(const ProbeParams&) const = default;
};

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 500;
  std::uint64_t seed = 0;
  double l2 = 1e-4;
  double decision_threshold = 0.5;

  void validate() const;
};

/// Numerically stable 1 / (1 + exp(-z)).
double logistic(double z);

/// logistic(weights . standardize(x) + bias). Throws on dimension mismatch.
double predict(const ProbeParams& params, std::span<const double> x);

Label predict_label(const ProbeParams& params, std::span<const double> x,
                    double decision_threshold = 0.5);

struct LossAndGrad {
  double loss = 0;
  std::vector<double> grad_weights;
  double grad_bias = 0;
};

/// Mean binary cross-entropy over `batch` plus l2 * |weights|^2, with its
/// analytic gradient. Raw features go through the params' standardization.
LossAndGrad bce_loss_and_grad(const ProbeParams& params, std::span<const FeatureVector> batch,
                              double l2);

struct TrainedProbe {
  ProbeParams params;
  /// Loss before each step, followed by the loss after the last one.
  std::vector<double> loss_history;

  double final_loss() const { return loss_history.back(); }
};

/// Full-batch gradient descent from zero weights on the standardized set.
/// Needs both classes present.
TrainedProbe train_probe(std::span<const FeatureVector> features, const TrainConfig& config);

enum class EvalProtocol { HoldOut80_20, TrainEqualsEval };

std::string_view to_string(EvalProtocol protocol);
std::optional<EvalProtocol> parse_protocol(std::string_view text);

struct HoldOutSplit {
  std::vector<FeatureVector> train;
  std::vector<FeatureVector> eval;
};

/// Stratified split: round(20%) of each class (at least one, at most n-1)
/// is held out; members are chosen by a seeded shuffle, order is kept.
HoldOutSplit stratified_holdout(std::span<const FeatureVector> features, std::uint64_t seed);

struct SweepOptions {
  TrainConfig train;
  EvalProtocol protocol = EvalProtocol::HoldOut80_20;
  Split split = Split::ID;
};

/// Trains and scores one layer. Rows are named "layer <n>".
metrics::MetricsRow evaluate_layer(int layer, std::span<const FeatureVector> features,
                                   const SweepOptions& options);

/// One row per requested layer, in ascending layer order. Layers are trained
/// concurrently; an empty `layers` means every layer in `features`. Throws
/// when a requested layer has no features.
std::vector<metrics::MetricsRow> layer_sweep(const LayeredFeatures& features,
                                             const SweepOptions& options,
                                             std::span<const int> layers = {});

/// Single-threaded reference for layer_sweep; results are bitwise equal.
std::vector<metrics::MetricsRow> layer_sweep_serial(const LayeredFeatures& features,
                                                    const SweepOptions& options,
                                                    std::span<const int> layers = {});

}  // namespace attribeval::probe
