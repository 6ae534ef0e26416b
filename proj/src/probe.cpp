#include "safelens/probe.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "safelens/error.hpp"
#include "safelens/random.hpp"

namespace safelens {
namespace {

constexpr std::size_t kP = kNumCategories;

// In-place numerically stable softmax.
void softmax(std::span<double> v) {
  const double mx = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (double& x : v) x /= sum;
}

struct ForwardTrace {
  std::size_t first = 0;               // first row inside the window
  std::vector<double> attention;       // per windowed row; 0 for masked rows
  std::vector<double> pooled;          // d
  std::array<double, kP> probs{};      // softmax(logits / temperature)
};

template <typename T>
void forward(const HiddenStates& h, std::span<const T> attention_w,
             std::span<const T> classifier_w, std::span<const T> bias, std::size_t window,
             double temperature, ForwardTrace& tr) {
  const std::size_t d = h.d;
  tr.first = h.n > window ? h.n - window : 0;
  const std::size_t rows = h.n - tr.first;
  tr.attention.assign(rows, 0.0);

  double max_score = -INFINITY;
  bool any = false;
  std::vector<double> scores(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t t = tr.first + r;
    if (!h.mask[t]) continue;
    auto x = h.row(t);
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) s += static_cast<double>(attention_w[k]) * x[k];
    scores[r] = s;
    max_score = any ? std::max(max_score, s) : s;
    any = true;
  }
  if (!any) throw DataError("hidden states have no unmasked token inside the probe window");
  double z = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!h.mask[tr.first + r]) continue;
    tr.attention[r] = std::exp(scores[r] - max_score);
    z += tr.attention[r];
  }
  tr.pooled.assign(d, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    if (tr.attention[r] == 0.0) continue;
    tr.attention[r] /= z;
    auto x = h.row(tr.first + r);
    for (std::size_t k = 0; k < d; ++k) tr.pooled[k] += tr.attention[r] * x[k];
  }
  for (std::size_t c = 0; c < kP; ++c) {
    double logit = static_cast<double>(bias[c]);
    for (std::size_t k = 0; k < d; ++k) {
      logit += static_cast<double>(classifier_w[c * d + k]) * tr.pooled[k];
    }
    tr.probs[c] = logit / temperature;
  }
  softmax(tr.probs);
}

void check_input(const HiddenStates& h, std::size_t d) {
  h.validate();
  if (h.d != d) {
    throw DataError("hidden-state width " + std::to_string(h.d) + " does not match probe width " +
                    std::to_string(d));
  }
}

ProbabilitySimplex to_simplex(const std::array<double, kP>& probs) {
  // Softmax output sums to 1 up to rounding; clamp tiny excursions.
  std::array<double, kP> v{};
  for (std::size_t c = 0; c < kP; ++c) v[c] = std::clamp(probs[c], 0.0, 1.0);
  return ProbabilitySimplex(v);
}

}  // namespace

void ProbeTrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("probe learning_rate must be positive");
  }
  if (epochs == 0) throw ConfigError("probe epochs must be positive");
  if (batch_size == 0) throw ConfigError("probe batch_size must be positive");
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw ConfigError("probe holdout_fraction must lie in (0, 1)");
  }
}

ProbeModel ProbeModel::zeros(std::size_t d, std::size_t window) {
  ProbeModel m;
  m.window = window;
  m.d = d;
  m.attention_weights.assign(d, 0.0f);
  m.classifier_weights.assign(kP * d, 0.0f);
  m.classifier_bias.assign(kP, 0.0f);
  return m;
}

void ProbeModel::validate() const {
  if (d == 0 || window == 0) throw DataError("probe width and window must be positive");
  if (attention_weights.size() != d || classifier_weights.size() != kP * d ||
      classifier_bias.size() != kP) {
    throw DataError("probe weight shapes do not match width " + std::to_string(d));
  }
  auto finite = [](const std::vector<float>& v) {
    return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
  };
  if (!finite(attention_weights) || !finite(classifier_weights) || !finite(classifier_bias)) {
    throw DataError("probe has non-finite weights");
  }
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw DataError("probe temperature must be positive");
  }
}

std::vector<double> pool(const HiddenStates& h, const ProbeModel& probe) {
  check_input(h, probe.d);
  ForwardTrace tr;
  forward<float>(h, probe.attention_weights, probe.classifier_weights, probe.classifier_bias,
                 probe.window, probe.temperature, tr);
  return tr.pooled;
}

ProbabilitySimplex probe_forward(const HiddenStates& h, const ProbeModel& probe) {
  check_input(h, probe.d);
  ForwardTrace tr;
  forward<float>(h, probe.attention_weights, probe.classifier_weights, probe.classifier_bias,
                 probe.window, probe.temperature, tr);
  return to_simplex(tr.probs);
}

double probe_confidence(const ProbabilitySimplex& q) noexcept {
  const auto& v = q.values();
  return *std::max_element(v.begin(), v.end());
}

ProbeParameters ProbeParameters::from_model(const ProbeModel& m) {
  ProbeParameters p;
  p.d = m.d;
  p.attention.assign(m.attention_weights.begin(), m.attention_weights.end());
  p.classifier.assign(m.classifier_weights.begin(), m.classifier_weights.end());
  p.bias.assign(m.classifier_bias.begin(), m.classifier_bias.end());
  return p;
}

ProbeModel ProbeParameters::to_model(const ProbeModel& shape) const {
  ProbeModel m = shape;
  m.d = d;
  auto narrow = [](const std::vector<double>& v) {
    return std::vector<float>(v.begin(), v.end());
  };
  m.attention_weights = narrow(attention);
  m.classifier_weights = narrow(classifier);
  m.classifier_bias = narrow(bias);
  return m;
}

double& ProbeParameters::flat(std::size_t i) {
  if (i < attention.size()) return attention[i];
  i -= attention.size();
  if (i < classifier.size()) return classifier[i];
  return bias.at(i - classifier.size());
}

LossGradient mean_loss_gradient(const ProbeParameters& params,
                                const std::vector<LabeledStates>& data,
                                std::span<const std::size_t> indices, std::size_t window,
                                double temperature) {
  const std::size_t d = params.d;
  LossGradient out;
  out.gradient.d = d;
  out.gradient.attention.assign(d, 0.0);
  out.gradient.classifier.assign(kP * d, 0.0);
  out.gradient.bias.assign(kP, 0.0);
  if (indices.empty()) return out;

  ForwardTrace tr;
  std::vector<double> u(d);
  for (std::size_t idx : indices) {
    const auto& sample = data[idx];
    const HiddenStates& h = sample.states;
    forward<double>(h, params.attention, params.classifier, params.bias, window, temperature, tr);
    const std::size_t y = ordinal(sample.label);
    out.loss -= std::log(std::max(tr.probs[y], 1e-300));

    // dL/dlogits = (q - e_y) / temperature
    std::array<double, kP> g{};
    for (std::size_t c = 0; c < kP; ++c) {
      g[c] = (tr.probs[c] - (c == y ? 1.0 : 0.0)) / temperature;
    }
    std::fill(u.begin(), u.end(), 0.0);
    for (std::size_t c = 0; c < kP; ++c) {
      out.gradient.bias[c] += g[c];
      for (std::size_t k = 0; k < d; ++k) {
        out.gradient.classifier[c * d + k] += g[c] * tr.pooled[k];
        u[k] += params.classifier[c * d + k] * g[c];
      }
    }
    // Back through attention: dL/da_t = u . h_t, dL/ds_t = a_t (r_t - sum a r).
    const std::size_t rows = tr.attention.size();
    std::vector<double> r(rows, 0.0);
    double mean_r = 0.0;
    for (std::size_t t = 0; t < rows; ++t) {
      if (tr.attention[t] == 0.0) continue;
      auto x = h.row(tr.first + t);
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) acc += u[k] * x[k];
      r[t] = acc;
      mean_r += tr.attention[t] * acc;
    }
    for (std::size_t t = 0; t < rows; ++t) {
      if (tr.attention[t] == 0.0) continue;
      const double ds = tr.attention[t] * (r[t] - mean_r);
      auto x = h.row(tr.first + t);
      for (std::size_t k = 0; k < d; ++k) out.gradient.attention[k] += ds * x[k];
    }
  }
  const double scale = 1.0 / static_cast<double>(indices.size());
  out.loss *= scale;
  for (double& v : out.gradient.attention) v *= scale;
  for (double& v : out.gradient.classifier) v *= scale;
  for (double& v : out.gradient.bias) v *= scale;
  return out;
}

ProbeModel train_probe(const std::vector<LabeledStates>& data, const ProbeTrainConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw DataError("probe training data is empty");
  const std::size_t d = data.front().states.d;
  std::set<Category> classes;
  for (std::size_t i = 0; i < data.size(); ++i) {
    try {
      check_input(data[i].states, d);
    } catch (const DataError& e) {
      throw DataError("probe sample " + std::to_string(i) + ": " + e.what());
    }
    classes.insert(data[i].label);
  }
  if (classes.size() < 2) throw DataError("probe training data must contain at least two classes");

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(std::span<std::size_t>(order), rng);
  const auto holdout_count = static_cast<std::size_t>(
      std::floor(cfg.holdout_fraction * static_cast<double>(data.size())));
  std::vector<std::size_t> holdout(order.begin(), order.begin() + holdout_count);
  std::vector<std::size_t> train(order.begin() + holdout_count, order.end());
  if (train.empty()) throw DataError("probe holdout split leaves no training samples");

  ProbeModel shape = ProbeModel::zeros(d);
  ProbeParameters params = ProbeParameters::from_model(shape);
  for (double& w : params.classifier) w = 0.01 * standard_normal(rng);

  ProbeTrainingInfo info;
  info.config = cfg;
  info.train_count = train.size();
  info.holdout_count = holdout.size();
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(std::span<std::size_t>(train), rng);
    for (std::size_t begin = 0; begin < train.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(train.size(), begin + cfg.batch_size);
      auto step = mean_loss_gradient(
          params, data, std::span<const std::size_t>(train.data() + begin, end - begin),
          shape.window, shape.temperature);
      for (std::size_t i = 0; i < params.size(); ++i) {
        params.flat(i) -= cfg.learning_rate * step.gradient.flat(i);
      }
    }
    info.loss_trace.push_back(
        mean_loss_gradient(params, data, train, shape.window, shape.temperature).loss);
  }

  ProbeModel model = params.to_model(shape);
  if (!holdout.empty()) {
    std::size_t correct = 0;
    for (std::size_t i : holdout) {
      if (argmax_category(probe_forward(data[i].states, model)) == data[i].label) ++correct;
    }
    info.holdout_accuracy = static_cast<double>(correct) / static_cast<double>(holdout.size());
  }
  model.training = std::move(info);
  model.validate();
  return model;
}

}  // namespace safelens
