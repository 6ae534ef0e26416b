#include "safelens/metrics.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <sstream>

#include "safelens/error.hpp"
#include "safelens/numfmt.hpp"
#include "safelens/parallel.hpp"

namespace safelens {

std::size_t ConfusionMatrix::total() const noexcept {
  std::size_t n = 0;
  for (const auto& row : counts) {
    for (auto c : row) n += c;
  }
  return n;
}

std::size_t ConfusionMatrix::row_sum(Category gold) const noexcept {
  std::size_t n = 0;
  for (auto c : counts[ordinal(gold)]) n += c;
  return n;
}

std::size_t ConfusionMatrix::column_sum(Category predicted) const noexcept {
  std::size_t n = 0;
  for (const auto& row : counts) n += row[ordinal(predicted)];
  return n;
}

ConfusionMatrix confusion(const std::vector<Category>& preds, const std::vector<Category>& golds) {
  if (preds.size() != golds.size()) {
    throw DataError("confusion: " + std::to_string(preds.size()) + " predictions vs " +
                    std::to_string(golds.size()) + " gold labels");
  }
  if (preds.empty()) throw DataError("confusion: no samples");
  ConfusionMatrix m;
  for (std::size_t i = 0; i < preds.size(); ++i) m.add(golds[i], preds[i]);
  return m;
}

namespace {

void require_nonempty(const ConfusionMatrix& m) {
  if (m.total() == 0) throw DataError("confusion matrix is empty");
}

}  // namespace

std::array<double, kNumCategories> per_class_accuracy(const ConfusionMatrix& m) {
  require_nonempty(m);
  std::array<double, kNumCategories> acc{};
  for (Category c : canonical_categories()) {
    const std::size_t row = m.row_sum(c);
    acc[ordinal(c)] = row == 0 ? std::numeric_limits<double>::quiet_NaN()
                               : static_cast<double>(m.counts[ordinal(c)][ordinal(c)]) /
                                     static_cast<double>(row);
  }
  return acc;
}

double avg_accuracy(const ConfusionMatrix& m) {
  const auto acc = per_class_accuracy(m);
  double sum = 0.0;
  std::size_t present = 0;
  for (double a : acc) {
    if (std::isnan(a)) continue;
    sum += a;
    ++present;
  }
  return sum / static_cast<double>(present);
}

std::array<double, kNumCategories> per_class_f1(const ConfusionMatrix& m) {
  require_nonempty(m);
  std::array<double, kNumCategories> f1{};
  for (Category c : canonical_categories()) {
    const double tp = static_cast<double>(m.counts[ordinal(c)][ordinal(c)]);
    const std::size_t row = m.row_sum(c);
    const std::size_t col = m.column_sum(c);
    const double recall = row == 0 ? 0.0 : tp / static_cast<double>(row);
    const double precision = col == 0 ? 0.0 : tp / static_cast<double>(col);
    f1[ordinal(c)] =
        precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
  }
  return f1;
}

double macro_f1(const ConfusionMatrix& m) {
  const auto f1 = per_class_f1(m);
  double sum = 0.0;
  for (double v : f1) sum += v;
  return sum / static_cast<double>(kNumCategories);
}

nlohmann::json metrics_report(const ConfusionMatrix& m) {
  const auto acc = per_class_accuracy(m);
  nlohmann::json per_class = nlohmann::json::object();
  for (Category c : canonical_categories()) {
    const double a = acc[ordinal(c)];
    per_class[std::string(category_name(c))] = std::isnan(a) ? nlohmann::json(nullptr)
                                                             : nlohmann::json(a);
  }
  nlohmann::json confusion_rows = nlohmann::json::array();
  for (const auto& row : m.counts) confusion_rows.push_back(row);
  return {{"n", m.total()},
          {"per_class", per_class},
          {"avg_acc", avg_accuracy(m)},
          {"macro_f1", macro_f1(m)},
          {"confusion", confusion_rows}};
}

double expected_cost(double c_s1, double c_s2, double s2_fraction) {
  if (!(c_s1 >= 0.0) || !(c_s2 >= 0.0)) throw ConfigError("expected_cost: costs must be >= 0");
  if (!(s2_fraction >= 0.0 && s2_fraction <= 1.0)) {
    throw ConfigError("expected_cost: s2_fraction must lie in [0, 1]");
  }
  return c_s1 + s2_fraction * c_s2;
}

std::vector<double> default_tau_grid() {
  std::vector<double> taus;
  for (int k = 0; k <= 20; ++k) taus.push_back(k / 20.0);
  taus.push_back(kAlwaysS2Tau);
  return taus;
}

namespace {

/// Runs fn(i) for every index and rethrows the failure with the lowest index.
template <typename Fn>
void for_each_sample(std::size_t count, std::size_t threads, Fn&& fn) {
  std::vector<std::exception_ptr> errors(count);
  parallel_for(
      count,
      [&](std::size_t i) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      },
      threads);
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

[[noreturn]] void rethrow_at_tau(const ModerationError& e, double tau) {
  throw ModerationError(e.kind(), e.sample_id(), "at tau " + format_number(tau) + ": " + e.detail(),
                        e.partial_cost());
}

}  // namespace

SweepResult sweep(const std::vector<SampleRecord>& corpus, const Cascade& cascade,
                  const std::vector<double>& taus, std::size_t threads) {
  if (taus.empty()) throw ConfigError("sweep needs at least one tau");
  for (std::size_t t = 0; t < taus.size(); ++t) {
    if (!std::isfinite(taus[t]) || taus[t] < 0.0) {
      throw ConfigError("sweep taus must be finite and >= 0");
    }
    if (t > 0 && taus[t] < taus[t - 1]) throw ConfigError("sweep taus must be ascending");
  }
  if (corpus.empty()) throw DataError("sweep: empty corpus");
  const std::size_t n = corpus.size();

  std::vector<S1Result> s1(n);
  for_each_sample(n, threads, [&](std::size_t i) {
    try {
      s1[i] = cascade.screen_s1(corpus[i]);
    } catch (const Error& e) {
      throw ModerationError(e.kind(), corpus[i].id, e.what(), {});
    }
  });

  // The first tau that sends each sample to the slow path, if any.
  std::vector<std::optional<double>> first_s2_tau(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (double tau : taus) {
      if (route(s1[i].confidence, tau) == Route::s2) {
        first_s2_tau[i] = tau;
        break;
      }
    }
  }

  std::vector<std::optional<S2Outcome>> s2(n);
  for_each_sample(n, threads, [&](std::size_t i) {
    if (!first_s2_tau[i]) return;
    try {
      s2[i] = cascade.deliberate_s2(corpus[i], s1[i]);
    } catch (const ModerationError& e) {
      rethrow_at_tau(e, *first_s2_tau[i]);
    } catch (const Error& e) {
      throw ModerationError(e.kind(), corpus[i].id,
                            "at tau " + format_number(*first_s2_tau[i]) + ": " + e.what(),
                            s1[i].cost);
    }
  });

  SweepResult result;
  for (double tau : taus) {
    const Cascade at = cascade.with_tau(tau);
    std::vector<Decision> decisions;
    decisions.reserve(n);
    ConfusionMatrix m;
    double seconds = 0.0;
    double gflops = 0.0;
    std::size_t escalated = 0;
    for (std::size_t i = 0; i < n; ++i) {
      try {
        decisions.push_back(at.decide(corpus[i], s1[i], s2[i]));
      } catch (const ModerationError& e) {
        rethrow_at_tau(e, tau);
      }
      const Decision& d = decisions.back();
      m.add(corpus[i].label, d.predicted);
      seconds += d.cost.seconds();
      gflops += d.cost.gflops();
      if (d.path != DecisionPath::s1) ++escalated;
    }
    const double count = static_cast<double>(n);
    result.points.push_back({tau, avg_accuracy(m), macro_f1(m),
                             static_cast<double>(escalated) / count, seconds / count,
                             gflops / count});
    result.decisions.push_back(std::move(decisions));
  }
  return result;
}

std::string format_sweep_csv(const std::vector<SweepPoint>& points) {
  std::ostringstream out;
  out << "tau,avg_acc,macro_f1,s2_fraction,mean_seconds,mean_gflops\n";
  for (const auto& p : points) {
    out << format_number(p.tau) << ',' << format_number(p.avg_accuracy) << ','
        << format_number(p.macro_f1) << ',' << format_number(p.s2_fraction) << ','
        << format_number(p.mean_seconds) << ',' << format_number(p.mean_gflops) << '\n';
  }
  return out.str();
}

}  // namespace safelens
