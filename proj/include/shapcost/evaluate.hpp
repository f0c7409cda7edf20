/*
 * Copyright 2026 The shapcost Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

// Holdout metrics, nested cross-validation, bootstrap stability and residual
// diagnostics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "shapcost/common.hpp"
#include "shapcost/dataset.hpp"
#include "shapcost/encode.hpp"
#include "shapcost/gbdt.hpp"

namespace shapcost {

namespace detail {
inline void check_pair(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size()) throw Error("observed and predicted lengths differ");
  if (y.empty()) throw Error("metrics need at least one observation");
}

inline double population_variance(std::span<const double> v) {
  const double mu = mean(v);
  CompensatedSum s;
  for (double x : v) s.add((x - mu) * (x - mu));
  return s.value() / static_cast<double>(v.size());
}
}  // namespace detail

inline double rmse(std::span<const double> y, std::span<const double> yhat) {
  detail::check_pair(y, yhat);
  CompensatedSum s;
  for (std::size_t i = 0; i < y.size(); ++i) s.add((y[i] - yhat[i]) * (y[i] - yhat[i]));
  return std::sqrt(s.value() / static_cast<double>(y.size()));
}

inline double mape(std::span<const double> y, std::span<const double> yhat) {
  detail::check_pair(y, yhat);
  CompensatedSum s;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == 0.0) throw Error("MAPE undefined: zero observed value at index " + std::to_string(i));
    s.add(std::abs((y[i] - yhat[i]) / y[i]));
  }
  return s.value() / static_cast<double>(y.size());
}

/// 1 - Var(y - yhat) / Var(y), population variances.
inline double explained_variance(std::span<const double> y, std::span<const double> yhat) {
  detail::check_pair(y, yhat);
  if (y.size() < 2) throw Error("explained variance needs at least 2 observations");
  const double vy = detail::population_variance(y);
  if (vy == 0.0) throw Error("explained variance undefined: observed values are constant");
  std::vector<double> e(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) e[i] = y[i] - yhat[i];
  return 1.0 - detail::population_variance(e) / vy;
}

/// sum_{t>=2} (e_t - e_{t-1})^2 / sum_t e_t^2 on residuals in their given order.
inline double durbin_watson(std::span<const double> e) {
  if (e.size() < 2) throw Error("Durbin-Watson needs at least 2 residuals");
  CompensatedSum num, den;
  for (std::size_t t = 0; t < e.size(); ++t) {
    den.add(e[t] * e[t]);
    if (t > 0) num.add((e[t] - e[t - 1]) * (e[t] - e[t - 1]));
  }
  if (den.value() == 0.0) throw Error("Durbin-Watson undefined: all residuals are zero");
  return num.value() / den.value();
}

struct MetricsReport {
  double rmse = 0.0;
  double mape = 0.0;
  double explained_variance = 0.0;
  std::size_t n = 0;
};

inline MetricsReport metrics(std::span<const double> y, std::span<const double> yhat) {
  MetricsReport r;
  r.rmse = rmse(y, yhat);
  r.mape = mape(y, yhat);
  const bool constant = std::all_of(y.begin(), y.end(), [&](double v) { return v == y.front(); });
  r.explained_variance = y.size() >= 2 && !constant ? explained_variance(y, yhat) : 0.0;
  r.n = y.size();
  return r;
}

// ---------------------------------------------------------------------------
// Nested cross-validation
// ---------------------------------------------------------------------------

struct GridPoint {
  double learning_rate = 0.1;
  std::size_t iterations = 500;
  bool operator==(const GridPoint&) const = default;
};

struct CVPlan {
  std::size_t outer_folds = 5;
  double inner_train_fraction = 0.8;
  std::size_t bootstrap_iterations = 100;
  std::uint64_t seed = 0;
  std::vector<GridPoint> grid = {{0.05, 200}, {0.05, 500}, {0.1, 200}, {0.1, 500}};
  std::size_t threads = 1;
};

struct FoldReport {
  std::size_t fold = 0;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  GridPoint chosen;
  std::vector<double> inner_rmse;  // per grid point; empty for a single-point grid
  std::vector<double> predictions; // aligned with test_rows
  MetricsReport metrics;
};

struct Spread {
  double mean = 0.0;
  double sd = 0.0;
};

struct BootstrapSummary {
  std::size_t iterations = 0;
  Spread rmse, mape, explained_variance;
};

struct CVReport {
  std::vector<FoldReport> folds;
  MetricsReport mean_of_folds;  // per-fold metrics averaged
  MetricsReport pooled;         // metrics over all out-of-fold predictions
  std::vector<double> oof_predictions;
  BootstrapSummary bootstrap;
};

/// Resample (y, yhat) pairs with replacement and report mean and sample sd
/// of each metric.
inline BootstrapSummary bootstrap_metrics(std::span<const double> y, std::span<const double> yhat,
                                          std::size_t iterations, std::uint64_t seed) {
  detail::check_pair(y, yhat);
  BootstrapSummary out;
  out.iterations = iterations;
  if (iterations == 0) return out;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, y.size() - 1);
  std::vector<double> r, m, ev, by(y.size()), bh(y.size());
  for (std::size_t it = 0; it < iterations; ++it) {
    for (std::size_t i = 0; i < y.size(); ++i) {
      const std::size_t k = pick(rng);
      by[i] = y[k];
      bh[i] = yhat[k];
    }
    r.push_back(rmse(by, bh));
    m.push_back(mape(by, bh));
    const bool constant = std::all_of(by.begin(), by.end(), [&](double v) { return v == by.front(); });
    ev.push_back(by.size() >= 2 && !constant ? explained_variance(by, bh) : 0.0);
  }
  auto spread = [](const std::vector<double>& v) {
    Spread s;
    s.mean = mean(v);
    if (v.size() > 1) {
      CompensatedSum ss;
      for (double x : v) ss.add((x - s.mean) * (x - s.mean));
      s.sd = std::sqrt(ss.value() / static_cast<double>(v.size() - 1));
    }
    return s;
  };
  out.rmse = spread(r);
  out.mape = spread(m);
  out.explained_variance = spread(ev);
  return out;
}

/// Shuffled K-fold partition of 0..n-1; fold f is the test set of split f.
inline std::vector<std::vector<std::size_t>> kfold_partition(std::size_t n, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw Error("cross-validation needs at least 2 folds");
  if (folds > n) throw Error("more folds than rows");
  auto perm = random_permutation(n, seed);
  std::vector<std::vector<std::size_t>> out(folds);
  for (std::size_t p = 0; p < n; ++p) out[p % folds].push_back(perm[p]);
  for (auto& f : out) std::sort(f.begin(), f.end());
  return out;
}

/// Outer K-fold evaluation; inside each outer training set an 80/20 split
/// picks the grid point with the lowest validation RMSE, which is then
/// refit on the whole outer training set and scored on the outer test rows.
/// Every random choice derives from plan.seed and the fold index, so the
/// result does not depend on plan.threads.
inline CVReport nested_cv(const Table& raw, const TargetStatisticsConfig& ts, const TrainConfig& train_config,
                          const CVPlan& plan) {
  const std::size_t n = raw.rows();
  if (n < 10) throw Error("nested cross-validation needs at least 10 rows (have " + std::to_string(n) + ")");
  if (!(plan.inner_train_fraction > 0.0 && plan.inner_train_fraction < 1.0))
    throw Error("inner train fraction must be in (0, 1)");
  if (plan.grid.empty()) throw Error("hyperparameter grid is empty");

  const auto test_sets = kfold_partition(n, plan.outer_folds, plan.seed);
  CVReport report;
  report.folds.resize(plan.outer_folds);

  auto fit_and_predict = [&](const Table& train, const Table& test, const GridPoint& gp, std::uint64_t seed) {
    TrainConfig tc = train_config;
    tc.learning_rate = gp.learning_rate;
    tc.iterations = gp.iterations;
    tc.seed = derive_seed(seed, 1);
    TargetStatisticsConfig tsc = ts;
    tsc.permutation_seed = derive_seed(seed, 2);
    const Ensemble model = fit_model(train, tsc, tc);
    return predict_batch(model, test);
  };

  parallel_for(plan.outer_folds, plan.threads, [&](std::size_t f) {
    FoldReport& fold = report.folds[f];
    fold.fold = f;
    fold.test_rows = test_sets[f];
    std::vector<bool> is_test(n, false);
    for (std::size_t i : fold.test_rows) is_test[i] = true;
    for (std::size_t i = 0; i < n; ++i)
      if (!is_test[i]) fold.train_rows.push_back(i);
    const std::uint64_t fold_seed = derive_seed(plan.seed, f + 1);
    const Table outer_train = select_rows(raw, fold.train_rows);
    const Table outer_test = select_rows(raw, fold.test_rows);

    fold.chosen = plan.grid.front();
    if (plan.grid.size() > 1) {
      auto order = random_permutation(outer_train.rows(), derive_seed(fold_seed, 3));
      const auto n_inner = std::max<std::size_t>(
          2, static_cast<std::size_t>(std::llround(plan.inner_train_fraction * static_cast<double>(order.size()))));
      if (n_inner >= order.size()) throw Error("outer training fold too small for an inner split");
      std::vector<std::size_t> inner_train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_inner));
      std::vector<std::size_t> inner_val(order.begin() + static_cast<std::ptrdiff_t>(n_inner), order.end());
      std::sort(inner_train.begin(), inner_train.end());
      std::sort(inner_val.begin(), inner_val.end());
      const Table itrain = select_rows(outer_train, inner_train);
      const Table ival = select_rows(outer_train, inner_val);
      double best = std::numeric_limits<double>::infinity();
      for (const auto& gp : plan.grid) {
        const double score = rmse(ival.target, fit_and_predict(itrain, ival, gp, fold_seed));
        fold.inner_rmse.push_back(score);
        if (score < best) {
          best = score;
          fold.chosen = gp;
        }
      }
    }
    fold.predictions = fit_and_predict(outer_train, outer_test, fold.chosen, fold_seed);
    fold.metrics = metrics(outer_test.target, fold.predictions);
  });

  report.oof_predictions.assign(n, 0.0);
  for (const auto& fold : report.folds)
    for (std::size_t k = 0; k < fold.test_rows.size(); ++k) report.oof_predictions[fold.test_rows[k]] = fold.predictions[k];
  report.pooled = metrics(raw.target, report.oof_predictions);
  CompensatedSum r, m, ev;
  for (const auto& fold : report.folds) {
    r.add(fold.metrics.rmse);
    m.add(fold.metrics.mape);
    ev.add(fold.metrics.explained_variance);
  }
  const auto k = static_cast<double>(report.folds.size());
  report.mean_of_folds = {r.value() / k, m.value() / k, ev.value() / k, n};
  report.bootstrap =
      bootstrap_metrics(raw.target, report.oof_predictions, plan.bootstrap_iterations, derive_seed(plan.seed, 0));
  return report;
}

// ---------------------------------------------------------------------------
// Residual diagnostics
// ---------------------------------------------------------------------------

struct GroupSummary {
  std::string group;
  std::size_t count = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample sd; 0 for singleton groups
  bool flagged = false;
};

namespace detail {
inline double sample_sd(std::span<const double> v, double mu) {
  if (v.size() < 2) return 0.0;
  CompensatedSum s;
  for (double x : v) s.add((x - mu) * (x - mu));
  return std::sqrt(s.value() / static_cast<double>(v.size() - 1));
}
}  // namespace detail

/// Per-group residual mean and spread. A group is flagged when its mean
/// departs from zero by more than 2 * pooled_sd / sqrt(group size).
inline std::vector<GroupSummary> grouped_residuals(std::span<const double> residuals,
                                                   std::span<const std::string> groups) {
  if (groups.empty()) throw Error("group column is empty");
  if (residuals.size() != groups.size()) throw Error("residuals and group column have different lengths");
  const double pooled_sd = detail::sample_sd(residuals, mean(residuals));
  std::map<std::string, std::vector<double>> by_group;
  for (std::size_t i = 0; i < residuals.size(); ++i) by_group[groups[i]].push_back(residuals[i]);
  std::vector<GroupSummary> out;
  for (const auto& [name, values] : by_group) {
    GroupSummary g;
    g.group = name;
    g.count = values.size();
    g.mean = mean(values);
    g.sd = detail::sample_sd(values, g.mean);
    g.flagged = std::abs(g.mean) > 2.0 * pooled_sd / std::sqrt(static_cast<double>(g.count));
    out.push_back(std::move(g));
  }
  return out;
}

struct ResidualDiagnostics {
  double durbin_watson = 0.0;
  std::vector<GroupSummary> groups;
  double skew = 0.0;
  double excess_kurtosis = 0.0;
};

/// Moment skewness and excess kurtosis (population moments).
inline std::pair<double, double> shape_moments(std::span<const double> e) {
  const double mu = mean(e);
  CompensatedSum m2, m3, m4;
  for (double x : e) {
    const double d = x - mu;
    m2.add(d * d);
    m3.add(d * d * d);
    m4.add(d * d * d * d);
  }
  const double n = static_cast<double>(e.size());
  const double v = m2.value() / n;
  if (v == 0.0) return {0.0, 0.0};
  return {m3.value() / n / std::pow(v, 1.5), m4.value() / n / (v * v) - 3.0};
}

/// Residual checks as a bundle. Residuals are ordered by (order_key, row
/// id) before the Durbin-Watson statistic; row ids compare numerically when
/// both parse as numbers.
inline ResidualDiagnostics residual_diagnostics(std::span<const double> residuals, std::span<const double> order_key,
                                                std::span<const std::string> row_ids,
                                                std::span<const std::string> groups) {
  if (residuals.size() != order_key.size() || residuals.size() != row_ids.size())
    throw Error("residual diagnostics inputs have different lengths");
  std::vector<std::size_t> idx(residuals.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (order_key[a] != order_key[b]) return order_key[a] < order_key[b];
    const auto na = parse_double(row_ids[a]), nb = parse_double(row_ids[b]);
    if (na && nb) return *na < *nb;
    return row_ids[a] < row_ids[b];
  });
  std::vector<double> ordered;
  for (std::size_t i : idx) ordered.push_back(residuals[i]);
  ResidualDiagnostics out;
  out.durbin_watson = durbin_watson(ordered);
  if (!groups.empty()) out.groups = grouped_residuals(residuals, groups);
  std::tie(out.skew, out.excess_kurtosis) = shape_moments(residuals);
  return out;
}

}  // namespace shapcost
