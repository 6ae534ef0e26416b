#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "safelens/error.hpp"
#include "safelens/metrics.hpp"

using namespace safelens;

namespace {

std::vector<Category> cats(const std::vector<int>& v) {
  std::vector<Category> out;
  for (int x : v) out.push_back(category_from_ordinal(static_cast<std::size_t>(x)));
  return out;
}

std::vector<int> random_labels(std::mt19937_64& rng, std::size_t n, int classes) {
  std::uniform_int_distribution<int> d(0, classes - 1);
  std::vector<int> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

}  // namespace

TEST(Confusion, CountsAndSums) {
  const auto m = confusion(cats({0, 0, 1, 6}), cats({0, 1, 1, 6}));
  EXPECT_EQ(m.counts[0][0], 1u);
  EXPECT_EQ(m.counts[1][0], 1u);
  EXPECT_EQ(m.counts[1][1], 1u);
  EXPECT_EQ(m.total(), 4u);
  EXPECT_EQ(m.row_sum(Category::abuse), 2u);
  EXPECT_EQ(m.column_sum(Category::sexual), 2u);
  EXPECT_THROW(confusion(cats({0}), cats({0, 1})), DataError);
  EXPECT_THROW(confusion({}, {}), DataError);
}

TEST(Metrics, HandWorkedExample) {
  // gold 0,0,1,1 ; pred 0,1,1,1
  // recall: c0 1/2, c1 1 -> avg 0.75
  // F1: c0 p=1 r=.5 -> 2/3 ; c1 p=2/3 r=1 -> 0.8 ; others 0 -> (2/3+0.8)/7
  const auto m = confusion(cats({0, 1, 1, 1}), cats({0, 0, 1, 1}));
  const auto acc = per_class_accuracy(m);
  EXPECT_DOUBLE_EQ(acc[0], 0.5);
  EXPECT_DOUBLE_EQ(acc[1], 1.0);
  EXPECT_TRUE(std::isnan(acc[2]));
  EXPECT_DOUBLE_EQ(avg_accuracy(m), 0.75);
  EXPECT_NEAR(macro_f1(m), (2.0 / 3.0 + 0.8) / 7.0, 1e-15);
  const auto j = metrics_report(m);
  EXPECT_EQ(j["n"], 4);
  EXPECT_TRUE(j["per_class"]["Violence"].is_null());
  EXPECT_DOUBLE_EQ(j["per_class"]["Sexual"].get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(j["avg_acc"].get<double>(), 0.75);
}

TEST(Metrics, AllSafePredictionsOnBalancedGold) {
  std::vector<int> gold, pred;
  for (int c = 0; c < 7; ++c) {
    for (int k = 0; k < 10; ++k) {
      gold.push_back(c);
      pred.push_back(6);
    }
  }
  const auto m = confusion(cats(pred), cats(gold));
  EXPECT_NEAR(avg_accuracy(m), 1.0 / 7.0, 1e-15);
  // Safe: precision 1/7, recall 1 -> F1 0.25.
  EXPECT_NEAR(macro_f1(m), 0.25 / 7.0, 1e-15);
}

TEST(Metrics, PerfectPredictions) {
  std::mt19937_64 rng(3);
  auto gold = random_labels(rng, 500, 7);
  const auto m = confusion(cats(gold), cats(gold));
  EXPECT_DOUBLE_EQ(avg_accuracy(m), 1.0);
  EXPECT_DOUBLE_EQ(macro_f1(m), 1.0);
}

TEST(Metrics, AgreesWithIndependentOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int classes = 1 + trial % 7;
    const auto gold = random_labels(rng, 1 + rng() % 300, classes);
    auto pred = random_labels(rng, gold.size(), 7);
    const auto oracle = fixtures::oracle_metrics(gold, pred);
    const auto m = confusion(cats(pred), cats(gold));
    EXPECT_NEAR(avg_accuracy(m), oracle.avg, 1e-9);
    EXPECT_NEAR(macro_f1(m), oracle.macro_f1, 1e-9);
    const auto acc = per_class_accuracy(m);
    for (int c = 0; c < 7; ++c) {
      if (oracle.present[c]) {
        EXPECT_NEAR(acc[c], oracle.recall[c], 1e-12);
      }
    }
  }
}

TEST(Metrics, BoundedAndPermutationInvariant) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    auto gold = random_labels(rng, 60, 7);
    auto pred = random_labels(rng, 60, 7);
    const auto m = confusion(cats(pred), cats(gold));
    const double a = avg_accuracy(m), f = macro_f1(m);
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 1.0);
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, 1.0);
    std::vector<std::size_t> order(gold.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> g2, p2;
    for (auto i : order) {
      g2.push_back(gold[i]);
      p2.push_back(pred[i]);
    }
    const auto m2 = confusion(cats(p2), cats(g2));
    EXPECT_EQ(avg_accuracy(m2), a);
    EXPECT_EQ(macro_f1(m2), f);
  }
}

TEST(Metrics, MacroF1IsOneOnlyForDiagonalFullMatrix) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    auto gold = random_labels(rng, 40, 7);
    auto pred = gold;
    pred[rng() % pred.size()] = static_cast<int>(rng() % 7);
    const auto m = confusion(cats(pred), cats(gold));
    bool diagonal = true;
    for (int g = 0; g < 7; ++g)
      for (int p = 0; p < 7; ++p)
        if (g != p && m.counts[g][p]) diagonal = false;
    bool full = true;
    for (int c = 0; c < 7; ++c) full = full && m.counts[c][c] > 0;
    if (!(diagonal && full)) {
      EXPECT_LT(macro_f1(m), 1.0);
    }
  }
}

TEST(ExpectedCost, Formula) {
  EXPECT_DOUBLE_EQ(expected_cost(1.0, 10.0, 0.25), 3.5);
  EXPECT_DOUBLE_EQ(expected_cost(0.5, 4.0, 0.0), 0.5);
  EXPECT_DOUBLE_EQ(expected_cost(0.5, 4.0, 1.0), 4.5);
  EXPECT_THROW(expected_cost(-1.0, 1.0, 0.5), ConfigError);
  EXPECT_THROW(expected_cost(1.0, 1.0, 1.5), ConfigError);
  EXPECT_THROW(expected_cost(1.0, 1.0, NAN), ConfigError);
}

TEST(ExpectedCost, ReportedSavingsRoundTrip) {
  EXPECT_NEAR(expected_cost(0.04, 5.02, 0.343), 1.76, 0.01);
}

TEST(Sweep, DefaultGrid) {
  const auto g = default_tau_grid();
  ASSERT_EQ(g.size(), 22u);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_DOUBLE_EQ(g[20], 1.0);
  EXPECT_DOUBLE_EQ(g[21], 1.01);
  EXPECT_TRUE(std::is_sorted(g.begin(), g.end()));
  for (int k = 0; k <= 20; ++k) EXPECT_DOUBLE_EQ(g[k], k / 20.0);
}

class SweepTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { fixture_ = new fixtures::CascadeFixture(fixtures::make_cascade_fixture()); }
  static void TearDownTestSuite() { delete fixture_; }
  static fixtures::CascadeFixture* fixture_;
};
fixtures::CascadeFixture* SweepTest::fixture_ = nullptr;

TEST_F(SweepTest, MonotoneAndMatchesDirectModeration) {
  const Cascade c({}, fixture_->backends());
  const auto taus = default_tau_grid();
  const auto& recs = fixture_->test_records();
  const auto result = sweep(recs, c, taus, 4);
  ASSERT_EQ(result.points.size(), taus.size());
  EXPECT_EQ(result.points.front().s2_fraction, 0.0);
  EXPECT_EQ(result.points.back().s2_fraction, 1.0);
  EXPECT_DOUBLE_EQ(result.points.back().avg_accuracy, 1.0);
  for (std::size_t t = 1; t < taus.size(); ++t) {
    EXPECT_GE(result.points[t].s2_fraction, result.points[t - 1].s2_fraction);
    EXPECT_GE(result.points[t].mean_seconds, result.points[t - 1].mean_seconds - 1e-12);
  }
  for (std::size_t t : {3u, 12u, 19u}) {
    const Cascade at = c.with_tau(taus[t]);
    double seconds = 0;
    std::size_t s2 = 0;
    for (std::size_t i = 0; i < recs.size(); ++i) {
      const auto d = at.moderate(recs[i]);
      EXPECT_EQ(to_json(d), to_json(result.decisions[t][i]));
      seconds += d.cost.seconds();
      s2 += d.path != DecisionPath::s1;
    }
    EXPECT_NEAR(result.points[t].mean_seconds, seconds / recs.size(), 1e-12);
    EXPECT_DOUBLE_EQ(result.points[t].s2_fraction, double(s2) / recs.size());
  }
}

TEST_F(SweepTest, CsvShape) {
  const Cascade c({}, fixture_->backends());
  const auto result = sweep(fixture_->test_records(), c, default_tau_grid(), 2);
  std::istringstream in(format_sweep_csv(result.points));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "tau,avg_acc,macro_f1,s2_fraction,mean_seconds,mean_gflops");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 5);
  }
  EXPECT_EQ(rows, 22u);
}

TEST_F(SweepTest, RejectsBadGrids) {
  const Cascade c({}, fixture_->backends());
  EXPECT_THROW(sweep(fixture_->test_records(), c, {}), ConfigError);
  EXPECT_THROW(sweep(fixture_->test_records(), c, {0.5, 0.2}), ConfigError);
  EXPECT_THROW(sweep(fixture_->test_records(), c, {-0.5}), ConfigError);
}
