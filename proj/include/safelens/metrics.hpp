#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "safelens/cascade.hpp"
#include "safelens/category.hpp"

namespace safelens {

/// counts[gold][predicted].
struct ConfusionMatrix {
  std::array<std::array<std::size_t, kNumCategories>, kNumCategories> counts{};

  [[nodiscard]] std::size_t total() const noexcept;
  [[nodiscard]] std::size_t row_sum(Category gold) const noexcept;
  [[nodiscard]] std::size_t column_sum(Category predicted) const noexcept;
  void add(Category gold, Category predicted) { ++counts[ordinal(gold)][ordinal(predicted)]; }
};

/// Throws DataError on a length mismatch or empty input.
ConfusionMatrix confusion(const std::vector<Category>& preds, const std::vector<Category>& golds);

/// Recall per class; NaN for classes absent from the gold labels.
/// Throws DataError for an empty matrix.
std::array<double, kNumCategories> per_class_accuracy(const ConfusionMatrix& m);

/// Mean recall over the classes present in the gold labels.
double avg_accuracy(const ConfusionMatrix& m);

/// Per-class F1, 0 when precision + recall is 0.
std::array<double, kNumCategories> per_class_f1(const ConfusionMatrix& m);

/// Unweighted mean of per-class F1 over all seven classes.
double macro_f1(const ConfusionMatrix& m);

/// {"n", "per_class": {name: recall or null}, "avg_acc", "macro_f1"}.
nlohmann::json metrics_report(const ConfusionMatrix& m);

/// c_s1 + s2_fraction * c_s2. Throws ConfigError on negative costs or a
/// fraction outside [0, 1].
double expected_cost(double c_s1, double c_s2, double s2_fraction);

inline constexpr double kAlwaysS2Tau = 1.01;

/// 0, 0.05, ..., 1.0 followed by 1.01.
std::vector<double> default_tau_grid();

struct SweepPoint {
  double tau = 0.0;
  double avg_accuracy = 0.0;
  double macro_f1 = 0.0;
  double s2_fraction = 0.0;
  double mean_seconds = 0.0;
  double mean_gflops = 0.0;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  /// decisions[t][i] is the decision for sample i at taus[t].
  std::vector<std::vector<Decision>> decisions;
};

/// Moderates every sample at each threshold. Screening runs once per sample
/// and the slow path at most once per sample, so each point equals running
/// moderate over the corpus at that tau. Gold labels are the records' labels.
///
/// Throws ConfigError when taus are empty or not ascending; cascade errors are
/// rethrown with the threshold that first needed the failing sample.
SweepResult sweep(const std::vector<SampleRecord>& corpus, const Cascade& cascade,
                  const std::vector<double>& taus, std::size_t threads = 0);

/// Header `tau,avg_acc,macro_f1,s2_fraction,mean_seconds,mean_gflops`.
std::string format_sweep_csv(const std::vector<SweepPoint>& points);

}  // namespace safelens
