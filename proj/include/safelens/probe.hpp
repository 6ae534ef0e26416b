#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "safelens/category.hpp"

namespace safelens {

inline constexpr std::size_t kDefaultProbeWindow = 100;

struct ProbeTrainConfig {
  double learning_rate = 1e-3;
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  double holdout_fraction = 0.2;

  /// Throws ConfigError on out-of-range fields.
  void validate() const;
};

struct ProbeTrainingInfo {
  ProbeTrainConfig config;
  std::vector<double> loss_trace;  // mean training cross-entropy after each epoch
  std::size_t train_count = 0;
  std::size_t holdout_count = 0;
  std::optional<double> holdout_accuracy;
};

/// Fast screening classifier over the last `window` token embeddings:
/// single-head attention pooling followed by a linear softmax head.
struct ProbeModel {
  std::size_t window = kDefaultProbeWindow;
  std::size_t d = 0;
  std::vector<float> attention_weights;   // d
  std::vector<float> classifier_weights;  // kNumCategories x d, row-major
  std::vector<float> classifier_bias;     // kNumCategories
  double temperature = 1.0;
  ProbeTrainingInfo training;

  /// All-zero weights; its forward pass is uniform for any input.
  static ProbeModel zeros(std::size_t d, std::size_t window = kDefaultProbeWindow);

  /// Throws DataError on inconsistent sizes, non-finite weights, or a
  /// non-positive temperature.
  void validate() const;
};

struct LabeledStates {
  HiddenStates states;
  Category label = Category::safe;
};

/// Attention-weighted sum of the unmasked rows among the last `window` rows of
/// `h`. Scores are attention_weights . h[t]; masked rows get zero weight.
std::vector<double> pool(const HiddenStates& h, const ProbeModel& probe);

/// softmax((W . pool(h) + b) / temperature).
ProbabilitySimplex probe_forward(const HiddenStates& h, const ProbeModel& probe);

/// Confidence of the top prediction, max_k q_k.
double probe_confidence(const ProbabilitySimplex& q) noexcept;

/// Mini-batch gradient descent on mean softmax cross-entropy. The data is
/// split by a seeded shuffle into a training part and a holdout part of
/// `holdout_fraction`; the returned model records the per-epoch loss and the
/// holdout accuracy. Same data and config give bit-identical weights.
///
/// Throws DataError for empty data, a single class, or mixed widths.
ProbeModel train_probe(const std::vector<LabeledStates>& data, const ProbeTrainConfig& cfg);

/// Double-precision trainable parameters.
struct ProbeParameters {
  std::size_t d = 0;
  std::vector<double> attention;   // d
  std::vector<double> classifier;  // kNumCategories x d
  std::vector<double> bias;        // kNumCategories

  static ProbeParameters from_model(const ProbeModel& m);
  /// Rounds to float; window and temperature are copied from `shape`.
  [[nodiscard]] ProbeModel to_model(const ProbeModel& shape) const;

  /// Flat view order: attention, classifier, bias.
  [[nodiscard]] std::size_t size() const noexcept {
    return attention.size() + classifier.size() + bias.size();
  }
  [[nodiscard]] double& flat(std::size_t i);
};

struct LossGradient {
  double loss = 0.0;
  ProbeParameters gradient;
};

/// Mean cross-entropy over data[indices] and its analytic gradient.
LossGradient mean_loss_gradient(const ProbeParameters& params,
                                const std::vector<LabeledStates>& data,
                                std::span<const std::size_t> indices,
                                std::size_t window = kDefaultProbeWindow,
                                double temperature = 1.0);

}  // namespace safelens
