#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "safelens/category.hpp"

namespace safelens {

/// Flattened final-layer loss gradient of one sample under one checkpoint.
struct GradientVector {
  std::vector<float> values;
  std::string source_id;
  std::string checkpoint_id;
};

struct LabeledGradient {
  GradientVector gradient;
  Category label = Category::safe;
};

/// TracIn-style influence: the inner product of two loss gradients, accumulated
/// in double precision in index order.
///
/// Throws DataError on dimension mismatch, checkpoint mismatch, or non-finite
/// entries.
double influence_score(const GradientVector& train, const GradientVector& val);

/// Row-major N_train x N_val score table with the ids and labels of both axes.
struct InfluenceMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> scores;
  std::vector<std::string> train_ids;
  std::vector<std::string> val_ids;
  std::vector<Category> train_labels;
  std::vector<Category> val_labels;

  [[nodiscard]] double at(std::size_t i, std::size_t j) const { return scores[i * cols + j]; }

  /// Throws DataError when axis metadata disagrees with the table size.
  void validate() const;
};

/// scores[i][j] == influence_score(trains[i], vals[j]). Rows may be computed
/// on several threads; each entry is accumulated sequentially so the result
/// does not depend on `threads`.
InfluenceMatrix influence_matrix(const std::vector<LabeledGradient>& trains,
                                 const std::vector<LabeledGradient>& vals,
                                 std::size_t threads = 0);

enum class FilterReason {
  kept,
  class_mean_nonpositive,
  global_mean_negative,
  no_same_class_val,
};

std::string_view to_string(FilterReason r) noexcept;

struct FilterRow {
  std::string id;
  Category label = Category::safe;
  double class_mean = 0.0;  // NaN when no validation sample shares the label
  double global_mean = 0.0;
  bool kept = false;
  FilterReason reason = FilterReason::kept;
};

struct FilterReport {
  std::vector<FilterRow> rows;  // train-id order

  [[nodiscard]] std::size_t kept_count() const;
};

/// Removes sample i when the mean over same-class validation columns is <= 0
/// or the mean over all validation columns is < 0. A training label with no
/// same-class validation column is removed with reason no_same_class_val.
FilterReport filter_training_set(const InfluenceMatrix& m);

/// Per-label kept/removed tallies of a report.
struct FilterSummary {
  std::array<std::size_t, kNumCategories> kept{};
  std::array<std::size_t, kNumCategories> removed{};

  [[nodiscard]] std::size_t total_kept() const;
  [[nodiscard]] std::size_t total_removed() const;
};

FilterSummary summarize(const FilterReport& report);

/// CSV with header `id,label,class_mean,global_mean,kept,reason`.
std::string format_filter_report(const FilterReport& report);
void write_filter_report(const FilterReport& report, const std::filesystem::path& path);

}  // namespace safelens
