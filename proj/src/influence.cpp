#include "safelens/influence.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "safelens/error.hpp"
#include "safelens/numfmt.hpp"
#include "safelens/parallel.hpp"

namespace safelens {
namespace {

void check_pair(const GradientVector& a, const GradientVector& b) {
  if (a.values.size() != b.values.size()) {
    throw DataError("gradient dimension mismatch: '" + a.source_id + "' has " +
                    std::to_string(a.values.size()) + ", '" + b.source_id + "' has " +
                    std::to_string(b.values.size()));
  }
  if (a.checkpoint_id != b.checkpoint_id) {
    throw DataError("gradient checkpoint mismatch: '" + a.source_id + "' from '" +
                    a.checkpoint_id + "', '" + b.source_id + "' from '" + b.checkpoint_id +
                    "'");
  }
}

void check_finite(const GradientVector& g) {
  for (float v : g.values) {
    if (!std::isfinite(v)) {
      throw DataError("gradient '" + g.source_id + "' has a non-finite entry");
    }
  }
}

double dot(const std::vector<float>& a, const std::vector<float>& b) {
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    sum += static_cast<double>(a[k]) * static_cast<double>(b[k]);
  }
  return sum;
}

// RFC 4180 quoting for fields that need it.
std::string csv_field(const std::string& v) {
  if (v.find_first_of(",\"\r\n") == std::string::npos) return v;
  std::string out = "\"";
  for (char c : v) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

double influence_score(const GradientVector& train, const GradientVector& val) {
  check_pair(train, val);
  check_finite(train);
  check_finite(val);
  return dot(train.values, val.values);
}

void InfluenceMatrix::validate() const {
  if (scores.size() != rows * cols || train_ids.size() != rows || val_ids.size() != cols ||
      train_labels.size() != rows || val_labels.size() != cols) {
    throw DataError("influence matrix axes do not match its " + std::to_string(rows) + " x " +
                    std::to_string(cols) + " table");
  }
}

InfluenceMatrix influence_matrix(const std::vector<LabeledGradient>& trains,
                                 const std::vector<LabeledGradient>& vals,
                                 std::size_t threads) {
  if (trains.empty()) throw DataError("influence matrix needs at least one training gradient");
  if (vals.empty()) throw DataError("influence matrix needs at least one validation gradient");
  // Validate every pair's preconditions up front. All vectors must agree with
  // the first one, so checking against it names the first offending pair.
  const GradientVector& ref = trains.front().gradient;
  for (const auto& t : trains) check_finite(t.gradient);
  for (const auto& v : vals) check_finite(v.gradient);
  for (const auto& t : trains) {
    try {
      check_pair(t.gradient, vals.front().gradient);
    } catch (const DataError& e) {
      throw DataError("pair (train '" + t.gradient.source_id + "', val '" +
                      vals.front().gradient.source_id + "'): " + e.what());
    }
  }
  for (const auto& v : vals) {
    try {
      check_pair(ref, v.gradient);
    } catch (const DataError& e) {
      throw DataError("pair (train '" + ref.source_id + "', val '" + v.gradient.source_id +
                      "'): " + e.what());
    }
  }

  InfluenceMatrix m;
  m.rows = trains.size();
  m.cols = vals.size();
  m.scores.resize(m.rows * m.cols);
  for (const auto& t : trains) {
    m.train_ids.push_back(t.gradient.source_id);
    m.train_labels.push_back(t.label);
  }
  for (const auto& v : vals) {
    m.val_ids.push_back(v.gradient.source_id);
    m.val_labels.push_back(v.label);
  }
  parallel_for(
      m.rows,
      [&](std::size_t i) {
        for (std::size_t j = 0; j < m.cols; ++j) {
          m.scores[i * m.cols + j] = dot(trains[i].gradient.values, vals[j].gradient.values);
        }
      },
      threads);
  return m;
}

std::string_view to_string(FilterReason r) noexcept {
  switch (r) {
    case FilterReason::kept: return "kept";
    case FilterReason::class_mean_nonpositive: return "class_mean_nonpositive";
    case FilterReason::global_mean_negative: return "global_mean_negative";
    case FilterReason::no_same_class_val: return "no_same_class_val";
  }
  return "kept";
}

std::size_t FilterReport::kept_count() const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const FilterRow& r) { return r.kept; }));
}

FilterReport filter_training_set(const InfluenceMatrix& m) {
  m.validate();
  if (m.cols == 0) throw DataError("influence matrix has no validation columns");
  FilterReport report;
  report.rows.reserve(m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) {
    double class_sum = 0.0;
    double global_sum = 0.0;
    std::size_t class_count = 0;
    for (std::size_t j = 0; j < m.cols; ++j) {
      const double s = m.at(i, j);
      global_sum += s;
      if (m.val_labels[j] == m.train_labels[i]) {
        class_sum += s;
        ++class_count;
      }
    }
    FilterRow row;
    row.id = m.train_ids[i];
    row.label = m.train_labels[i];
    row.global_mean = global_sum / static_cast<double>(m.cols);
    row.class_mean = class_count > 0 ? class_sum / static_cast<double>(class_count)
                                     : std::numeric_limits<double>::quiet_NaN();
    if (class_count == 0) {
      row.reason = FilterReason::no_same_class_val;
    } else if (row.class_mean <= 0.0) {
      row.reason = FilterReason::class_mean_nonpositive;
    } else if (row.global_mean < 0.0) {
      row.reason = FilterReason::global_mean_negative;
    } else {
      row.reason = FilterReason::kept;
    }
    row.kept = row.reason == FilterReason::kept;
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::size_t FilterSummary::total_kept() const {
  return std::accumulate(kept.begin(), kept.end(), std::size_t{0});
}

std::size_t FilterSummary::total_removed() const {
  return std::accumulate(removed.begin(), removed.end(), std::size_t{0});
}

FilterSummary summarize(const FilterReport& report) {
  FilterSummary s;
  for (const auto& r : report.rows) {
    (r.kept ? s.kept : s.removed)[ordinal(r.label)] += 1;
  }
  return s;
}

std::string format_filter_report(const FilterReport& report) {
  std::string out = "id,label,class_mean,global_mean,kept,reason\n";
  for (const auto& r : report.rows) {
    out += csv_field(r.id);
    out += ',';
    out += category_name(r.label);
    out += ',';
    out += format_number(r.class_mean);
    out += ',';
    out += format_number(r.global_mean);
    out += r.kept ? ",true," : ",false,";
    out += to_string(r.reason);
    out += '\n';
  }
  return out;
}

void write_filter_report(const FilterReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write report " + path.string());
  out << format_filter_report(report);
}

}  // namespace safelens
