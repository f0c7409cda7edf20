// Copyright 2026 The shapcost Authors. Licensed under the Apache License, Version 2.0.
#include <gtest/gtest.h>

#include <random>
#include <set>

#include "shapcost/evaluate.hpp"

using namespace shapcost;

using V = std::vector<double>;

TEST(Rmse, HandCases) {
  EXPECT_EQ(rmse(V{1, 2}, V{1, 2}), 0.0);
  EXPECT_NEAR(rmse(V{0, 0}, V{3, 4}), std::sqrt(12.5), 1e-12);
  EXPECT_EQ(rmse(V{5}, V{2}), 3.0);
  EXPECT_THROW(rmse(V{}, V{}), Error);
  EXPECT_THROW(rmse(V{1}, V{1, 2}), Error);
}

TEST(Mape, HandCases) {
  EXPECT_EQ(mape(V{100, 50}, V{100, 50}), 0.0);
  EXPECT_NEAR(mape(V{100}, V{98}), 0.02, 1e-12);
  EXPECT_NEAR(mape(V{100, 200}, V{110, 180}), 0.10, 1e-12);
  EXPECT_THROW(mape(V{0, 1}, V{1, 1}), Error);
}

TEST(ExplainedVariance, HandCases) {
  EXPECT_EQ(explained_variance(V{1, 2, 3}, V{1, 2, 3}), 1.0);
  EXPECT_NEAR(explained_variance(V{1, 2, 3}, V{2, 2, 2}), 0.0, 1e-12);
  EXPECT_NEAR(explained_variance(V{1, 2, 3}, V{1, 2, 4}), 2.0 / 3.0, 1e-12);
  EXPECT_THROW(explained_variance(V{4, 4}, V{1, 2}), Error);
  EXPECT_THROW(explained_variance(V{4}, V{1}), Error);
}

TEST(DurbinWatson, HandCases) {
  EXPECT_EQ(durbin_watson(V{1, -1, 1, -1}), 3.0);
  EXPECT_EQ(durbin_watson(V{2, 2, 2}), 0.0);
  EXPECT_THROW(durbin_watson(V{0, 0}), Error);
  EXPECT_THROW(durbin_watson(V{1}), Error);
}

TEST(DurbinWatson, WhiteNoiseNearTwo) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  V e(10000);
  for (double& x : e) x = g(rng);
  const double dw = durbin_watson(e);
  EXPECT_GE(dw, 1.9);
  EXPECT_LE(dw, 2.1);
}

TEST(Metrics, PermutationInvarianceButNotForDw) {
  V y{10, 20, 30, 40, 50}, yh{12, 18, 33, 39, 45};
  V y2{50, 10, 40, 20, 30}, yh2{45, 12, 39, 18, 33};
  EXPECT_NEAR(rmse(y, yh), rmse(y2, yh2), 1e-12);
  EXPECT_NEAR(mape(y, yh), mape(y2, yh2), 1e-12);
  EXPECT_NEAR(explained_variance(y, yh), explained_variance(y2, yh2), 1e-12);
  V e, e2;
  for (std::size_t i = 0; i < y.size(); ++i) e.push_back(y[i] - yh[i]), e2.push_back(y2[i] - yh2[i]);
  EXPECT_NE(durbin_watson(e), durbin_watson(e2));
}

TEST(Kfold, PartitionCoversRowsOnce) {
  auto f = kfold_partition(100, 5, 3);
  ASSERT_EQ(f.size(), 5u);
  std::set<std::size_t> all;
  for (auto& s : f) {
    EXPECT_EQ(s.size(), 20u);
    all.insert(s.begin(), s.end());
  }
  EXPECT_EQ(all.size(), 100u);
  EXPECT_THROW(kfold_partition(3, 5, 1), Error);
  EXPECT_THROW(kfold_partition(10, 1, 1), Error);
}

namespace {
Table small_market(std::size_t n, double noise, std::uint64_t seed) {
  auto spec = reference_market(n, noise, seed);
  return generate_synthetic_market(spec).first;
}
}  // namespace

TEST(NestedCv, FoldShapesAndNoLeakage) {
  Table t = small_market(100, 200, 2);
  CVPlan plan;
  plan.grid = {{0.1, 20}, {0.3, 20}};
  plan.bootstrap_iterations = 10;
  TrainConfig tc;
  auto r = nested_cv(t, {}, tc, plan);
  ASSERT_EQ(r.folds.size(), 5u);
  std::set<std::string> tested;
  for (const auto& f : r.folds) {
    EXPECT_EQ(f.test_rows.size(), 20u);
    EXPECT_EQ(f.train_rows.size(), 80u);
    std::set<std::string> train_ids;
    for (auto i : f.train_rows) train_ids.insert(t.row_ids[i]);
    for (auto i : f.test_rows) {
      EXPECT_EQ(train_ids.count(t.row_ids[i]), 0u);
      EXPECT_TRUE(tested.insert(t.row_ids[i]).second);
    }
    EXPECT_EQ(f.inner_rmse.size(), 2u);
  }
  EXPECT_EQ(tested.size(), 100u);
  EXPECT_EQ(r.bootstrap.iterations, 10u);
  EXPECT_TRUE(std::isfinite(r.bootstrap.rmse.sd));
  EXPECT_GT(r.bootstrap.rmse.sd, 0.0);
}

TEST(NestedCv, SinglePointGridIsChosen) {
  Table t = small_market(60, 200, 3);
  CVPlan plan;
  plan.grid = {{0.2, 15}};
  plan.bootstrap_iterations = 0;
  auto r = nested_cv(t, {}, {}, plan);
  for (const auto& f : r.folds) {
    EXPECT_EQ(f.chosen, plan.grid[0]);
    EXPECT_TRUE(f.inner_rmse.empty());
  }
}

TEST(NestedCv, DeterministicAcrossThreadCounts) {
  Table t = small_market(80, 200, 4);
  CVPlan plan;
  plan.grid = {{0.1, 10}, {0.2, 10}};
  plan.bootstrap_iterations = 5;
  plan.seed = 99;
  auto a = nested_cv(t, {}, {}, plan);
  plan.threads = 3;
  auto b = nested_cv(t, {}, {}, plan);
  EXPECT_EQ(a.oof_predictions, b.oof_predictions);
  EXPECT_EQ(a.pooled.rmse, b.pooled.rmse);
  EXPECT_EQ(a.bootstrap.rmse.mean, b.bootstrap.rmse.mean);
}

TEST(NestedCv, NoiselessMarketIsLearnable) {
  Table t = generate_synthetic_market(reference_market(5000, 0.0, 5)).first;
  CVPlan plan;
  plan.grid = {{0.1, 500}};
  plan.bootstrap_iterations = 0;
  auto r = nested_cv(t, {}, {}, plan);
  EXPECT_LE(r.pooled.mape, 0.01);
}

TEST(NestedCv, TooFewRows) {
  Table t = small_market(9, 0, 1);
  EXPECT_THROW(nested_cv(t, {}, {}, {}), Error);
}

TEST(GroupedResiduals, HandCases) {
  std::vector<std::string> g{"a", "a", "b", "b"};
  auto r = grouped_residuals(V{1, 3, -2, -4}, g);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].group, "a");
  EXPECT_EQ(r[0].mean, 2.0);
  EXPECT_EQ(r[1].mean, -3.0);
  EXPECT_NEAR(r[0].sd, std::sqrt(2.0), 1e-12);
  auto zero = grouped_residuals(V{0, 0, 0}, std::vector<std::string>{"x", "y", "x"});
  for (const auto& z : zero) EXPECT_FALSE(z.flagged);
  auto one = grouped_residuals(V{1, 2, 3}, std::vector<std::string>{"q", "q", "q"});
  EXPECT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].mean, 2.0);
  EXPECT_THROW(grouped_residuals(V{}, std::vector<std::string>{}), Error);
}

TEST(GroupedResiduals, BiasedGroupFlagged) {
  V e;
  std::vector<std::string> g;
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n;
  for (int i = 0; i < 400; ++i) {
    const bool biased = i % 4 == 0;
    e.push_back(n(rng) + (biased ? 3.0 : 0.0));
    g.push_back(biased ? "biased" : "fine");
  }
  auto r = grouped_residuals(e, g);
  EXPECT_TRUE(r[0].flagged);
  EXPECT_EQ(r[0].group, "biased");
}

TEST(ResidualDiagnostics, OrdersByYearThenId) {
  V e{1, -1, 1, -1};
  V year{2020, 2019, 2020, 2019};
  std::vector<std::string> ids{"3", "10", "2", "1"};
  // order: (2019,"1") -1, (2019,"10") -1, (2020,"2") 1, (2020,"3") 1
  auto d = residual_diagnostics(e, year, ids, {});
  EXPECT_NEAR(d.durbin_watson, 4.0 / 4.0, 1e-12);
  EXPECT_GE(d.durbin_watson, 0.0);
  EXPECT_LE(d.durbin_watson, 4.0);
}

TEST(ShapeMoments, SymmetricSampleHasZeroSkew) {
  auto [skew, kurt] = shape_moments(V{-2, -1, 0, 1, 2});
  EXPECT_NEAR(skew, 0.0, 1e-12);
  EXPECT_NEAR(kurt, (34.0 / 5.0) / 4.0 - 3.0, 1e-12);
}
