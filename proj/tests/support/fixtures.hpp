#pragma once

// Independent reference computations and shared fixtures for the test suites.

#include <atomic>
#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include "safelens/backends.hpp"
#include "safelens/cascade.hpp"
#include "safelens/influence.hpp"
#include "safelens/probe.hpp"
#include "safelens/synthetic.hpp"

namespace fixtures {

using namespace safelens;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("safelens-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Nested-loop dot products, double accumulation in index order.
inline std::vector<std::vector<double>> brute_force_influence(
    const std::vector<std::vector<float>>& trains, const std::vector<std::vector<float>>& vals) {
  std::vector<std::vector<double>> out(trains.size(), std::vector<double>(vals.size()));
  for (std::size_t i = 0; i < trains.size(); ++i) {
    for (std::size_t j = 0; j < vals.size(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < trains[i].size(); ++k) {
        s += double(trains[i][k]) * double(vals[j][k]);
      }
      out[i][j] = s;
    }
  }
  return out;
}

/// Removal decision straight from the two averaged criteria.
struct OracleVerdict {
  bool kept;
  bool no_same_class;
};

inline OracleVerdict oracle_filter_row(const std::vector<double>& row, int label,
                                       const std::vector<int>& val_labels) {
  double same = 0.0, all = 0.0;
  int same_n = 0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    all += row[j];
    if (val_labels[j] == label) {
      same += row[j];
      ++same_n;
    }
  }
  if (same_n == 0) return {false, true};
  const double class_mean = same / same_n;
  const double global_mean = all / double(row.size());
  return {!(class_mean <= 0.0 || global_mean < 0.0), false};
}

/// Metrics recomputed from (gold, predicted) pairs without a confusion matrix.
struct OracleMetrics {
  std::array<double, 7> recall{};
  std::array<bool, 7> present{};
  double avg = 0.0;
  double macro_f1 = 0.0;
};

inline OracleMetrics oracle_metrics(const std::vector<int>& gold, const std::vector<int>& pred) {
  OracleMetrics m;
  double avg_sum = 0.0;
  int avg_n = 0;
  double f1_sum = 0.0;
  for (int c = 0; c < 7; ++c) {
    int tp = 0, fn = 0, fp = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      if (gold[i] == c && pred[i] == c) ++tp;
      if (gold[i] == c && pred[i] != c) ++fn;
      if (gold[i] != c && pred[i] == c) ++fp;
    }
    m.present[c] = tp + fn > 0;
    const double rec = tp + fn > 0 ? double(tp) / (tp + fn) : 0.0;
    const double prec = tp + fp > 0 ? double(tp) / (tp + fp) : 0.0;
    m.recall[c] = rec;
    if (m.present[c]) {
      avg_sum += rec;
      ++avg_n;
    }
    f1_sum += prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
  }
  m.avg = avg_sum / avg_n;
  m.macro_f1 = f1_sum / 7.0;
  return m;
}

inline BackendDescriptor desc(BackendKind kind, std::string id, double fixed = 0.0,
                              double per_frame = 0.0, double fixed_gflops = 0.0,
                              double per_frame_gflops = 0.0) {
  return {kind, std::move(id), {fixed, per_frame, fixed_gflops, per_frame_gflops}};
}

inline std::vector<LabeledStates> labeled_states(const SyntheticCorpus& c, const Manifest& m) {
  std::vector<LabeledStates> out;
  for (const auto& r : m.records) out.push_back({c.embeddings.at(r.id), r.label});
  return out;
}

inline ProbeTrainConfig fast_probe_config(std::uint64_t seed = 0) {
  ProbeTrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.epochs = 30;
  cfg.batch_size = 32;
  cfg.seed = seed;
  cfg.holdout_fraction = 0.2;
  return cfg;
}

/// Synthetic corpus with a trained probe and table-driven mock backends.
struct CascadeFixture {
  SyntheticCorpus corpus;
  std::shared_ptr<const ProbeModel> probe;
  std::shared_ptr<TableEmbedder> embedder;
  std::shared_ptr<MockCaptioner> captioner;
  std::shared_ptr<OracleReasoner> reasoner;

  [[nodiscard]] CascadeBackends backends() const { return {embedder, captioner, reasoner, probe}; }
  [[nodiscard]] const std::vector<SampleRecord>& test_records() const {
    return corpus.test.records;
  }
};

inline CascadeFixture make_cascade_fixture(std::size_t test_per_class = 30, std::uint64_t seed = 7,
                                           double separation = 3.0) {
  SyntheticSpec spec;
  spec.seed = seed;
  spec.separation = separation;
  spec.train_per_class = 60;
  spec.val_per_class = 10;
  spec.test_per_class = test_per_class;
  CascadeFixture f;
  f.corpus = generate_synthetic_corpus(spec);
  f.probe = std::make_shared<const ProbeModel>(
      train_probe(labeled_states(f.corpus, f.corpus.train), fast_probe_config(seed)));
  std::map<std::string, HiddenStates, std::less<>> table(f.corpus.embeddings.begin(),
                                                         f.corpus.embeddings.end());
  f.embedder = std::make_shared<TableEmbedder>(desc(BackendKind::embedder, "emb", 0.0, 0.0, 1.0, 0.5),
                                               std::move(table));
  f.captioner = std::make_shared<MockCaptioner>(desc(BackendKind::captioner, "cap", 0.1, 0.05, 2.0));
  f.reasoner = std::make_shared<OracleReasoner>(desc(BackendKind::reasoner, "llm", 2.0, 0.5, 100.0, 10.0),
                                                f.corpus.gold, 1.0, seed);
  return f;
}

}  // namespace fixtures

namespace fixtures {

/// Random probe problem: `count` samples of n tokens (some masked) in R^d.
inline std::vector<LabeledStates> random_states(std::mt19937_64& g, std::size_t count,
                                                std::size_t n, std::size_t d) {
  std::normal_distribution<float> normal;
  std::uniform_int_distribution<int> label(0, 6);
  std::vector<LabeledStates> out;
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<float> v(n * d);
    for (auto& x : v) x = normal(g);
    HiddenStates h = HiddenStates::dense(n, d, std::move(v));
    for (std::size_t t = 0; t + 1 < n; ++t) h.mask[t] = (g() % 4) != 0;
    out.push_back({std::move(h), category_from_ordinal(label(g))});
  }
  return out;
}

/// Largest relative gap between the analytic gradient and central finite
/// differences over every parameter.
inline double max_gradient_rel_error(const ProbeParameters& params,
                                     const std::vector<LabeledStates>& data, std::size_t window,
                                     double temperature, double step = 1e-5) {
  std::vector<std::size_t> idx(data.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const LossGradient analytic = mean_loss_gradient(params, data, idx, window, temperature);
  ProbeParameters grad = analytic.gradient;
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    ProbeParameters plus = params, minus = params;
    plus.flat(k) += step;
    minus.flat(k) -= step;
    const double fd = (mean_loss_gradient(plus, data, idx, window, temperature).loss -
                       mean_loss_gradient(minus, data, idx, window, temperature).loss) /
                      (2 * step);
    const double a = grad.flat(k);
    const double scale = std::max({std::abs(a), std::abs(fd), 1e-4});
    worst = std::max(worst, std::abs(a - fd) / scale);
  }
  return worst;
}

inline ProbeParameters random_parameters(std::mt19937_64& g, std::size_t d, double scale = 0.5) {
  std::normal_distribution<double> normal(0.0, scale);
  ProbeParameters p = ProbeParameters::from_model(ProbeModel::zeros(d));
  for (std::size_t k = 0; k < p.size(); ++k) p.flat(k) = normal(g);
  return p;
}

}  // namespace fixtures
