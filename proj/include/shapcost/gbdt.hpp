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

// Gradient boosting of oblivious regression trees under squared loss.
//
// Each iteration fits one tree to the current residuals y - F(x) (the
// negative gradient, with the factor 2 folded into the learning rate).
// Trees are grown level by level; every level picks the single
// (feature, threshold) that minimises the squared error of the resulting
// leaf partition, searched over quantile histogram bin edges.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "shapcost/common.hpp"
#include "shapcost/dataset.hpp"
#include "shapcost/encode.hpp"

namespace shapcost {

struct LevelSplit {
  std::size_t feature = 0;
  double threshold = 0.0;
  bool operator==(const LevelSplit&) const = default;
};

/// Depth-D tree sharing one split per level. A row goes right at level d
/// iff x[feature_d] > threshold_d; the leaf index packs the right turns as
/// bits, level d in bit d.
struct ObliviousTree {
  std::vector<LevelSplit> splits;
  std::vector<double> leaf_values;  // 2^D entries

  std::size_t depth() const { return splits.size(); }

  std::size_t leaf_index(std::span<const double> x) const {
    std::size_t idx = 0;
    for (std::size_t d = 0; d < splits.size(); ++d)
      if (x[splits[d].feature] > splits[d].threshold) idx |= std::size_t{1} << d;
    return idx;
  }

  double predict(std::span<const double> x) const { return leaf_values[leaf_index(x)]; }

  bool uses_feature(std::size_t f) const {
    return std::any_of(splits.begin(), splits.end(), [f](const LevelSplit& s) { return s.feature == f; });
  }

  void validate(std::size_t n_features) const {
    if (splits.empty() || splits.size() > 20) throw Error("tree depth must be in [1, 20]");
    if (leaf_values.size() != (std::size_t{1} << splits.size()))
      throw Error("tree leaf count must equal 2^depth");
    for (const auto& s : splits)
      if (s.feature >= n_features) throw Error("tree splits on out-of-range feature");
  }

  bool operator==(const ObliviousTree&) const = default;
};

struct TrainingMetadata {
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string timestamp;
  std::string data_path;
  bool operator==(const TrainingMetadata&) const = default;
};

/// F(x) = base_score + learning_rate * sum_k tree_k(x), evaluated on encoded
/// (all-numeric) rows. `schema` is the raw input schema and `encoder` maps
/// raw rows onto the encoded feature space.
struct Ensemble {
  double base_score = 0.0;
  double learning_rate = 1.0;
  std::vector<ObliviousTree> trees;
  Schema schema;
  EncoderState encoder;
  TrainingMetadata metadata;

  std::size_t features() const { return schema.size(); }

  double predict(std::span<const double> x) const {
    if (x.size() != schema.size())
      throw Error("row has " + std::to_string(x.size()) + " features, model expects " +
                  std::to_string(schema.size()));
    CompensatedSum s;
    for (const auto& t : trees) s.add(t.predict(x));
    return base_score + learning_rate * s.value();
  }

  bool operator==(const Ensemble&) const = default;
};

struct TrainConfig {
  std::size_t iterations = 500;
  std::size_t depth = 4;
  double learning_rate = 0.1;
  std::size_t bins = 255;
  double subsample = 1.0;
  std::uint64_t seed = 0;
};

inline void validate(const TrainConfig& c) {
  if (c.depth < 1 || c.depth > 8) throw Error("tree depth must be in [1, 8]");
  if (!(c.learning_rate > 0.0 && c.learning_rate <= 1.0)) throw Error("learning rate must be in (0, 1]");
  if (c.bins < 2 || c.bins > 65535) throw Error("bin count must be in [2, 65535]");
  if (!(c.subsample > 0.0 && c.subsample <= 1.0)) throw Error("subsample must be in (0, 1]");
}

/// Candidate thresholds for one feature: midpoints between consecutive
/// distinct values, thinned to quantile positions when there are more than
/// `max_bins` distinct values.
inline std::vector<double> bin_thresholds(std::span<const double> values, std::size_t max_bins) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> distinct = sorted;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<double> out;
  if (distinct.size() <= max_bins) {
    for (std::size_t k = 1; k < distinct.size(); ++k) out.push_back(std::midpoint(distinct[k - 1], distinct[k]));
    return out;
  }
  const std::size_t n = sorted.size();
  for (std::size_t q = 1; q < max_bins; ++q) {
    const double v = sorted[q * n / max_bins];
    const auto k = static_cast<std::size_t>(std::lower_bound(distinct.begin(), distinct.end(), v) - distinct.begin());
    if (k == 0) continue;
    const double t = std::midpoint(distinct[k - 1], distinct[k]);
    if (out.empty() || t > out.back()) out.push_back(t);
  }
  return out;
}

namespace detail {

struct BinnedFeature {
  std::vector<double> thresholds;
  std::vector<std::uint16_t> bin;  // per row: number of thresholds < x
};

inline std::vector<BinnedFeature> bin_features(const Matrix& x, std::size_t max_bins) {
  std::vector<BinnedFeature> out(x.cols);
  std::vector<double> col(x.rows);
  for (std::size_t f = 0; f < x.cols; ++f) {
    for (std::size_t i = 0; i < x.rows; ++i) col[i] = x.at(i, f);
    auto& bf = out[f];
    bf.thresholds = bin_thresholds(col, max_bins);
    bf.bin.resize(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i)
      bf.bin[i] = static_cast<std::uint16_t>(
          std::lower_bound(bf.thresholds.begin(), bf.thresholds.end(), col[i]) - bf.thresholds.begin());
  }
  return out;
}

}  // namespace detail

/// Train on an encoded feature matrix. When `mse_trace` is given it receives
/// the training MSE before the first tree and after every iteration.
inline Ensemble train_matrix(const Matrix& x, std::span<const double> y, const TrainConfig& config,
                             std::vector<double>* mse_trace = nullptr) {
  validate(config);
  const std::size_t n = x.rows;
  if (n == 0) throw Error("cannot train on an empty table");
  if (n < 2) throw Error("training needs at least 2 rows");
  if (y.size() != n) throw Error("target length does not match row count");
  if (config.iterations > 0 && x.cols == 0) throw Error("training needs at least one feature");

  Ensemble model;
  model.learning_rate = config.learning_rate;
  model.base_score = mean(y);
  model.metadata.seed = config.seed;
  for (std::size_t f = 0; f < x.cols; ++f) model.schema.push_back({"f" + std::to_string(f), FeatureKind::numeric, ""});

  const auto binned = detail::bin_features(x, config.bins);
  const std::size_t depth = config.depth;
  std::vector<double> pred(n, model.base_score), resid(n);
  std::vector<std::uint32_t> leaf(n);
  std::vector<std::size_t> sample(n);
  std::iota(sample.begin(), sample.end(), std::size_t{0});
  std::mt19937_64 rng(config.seed);

  auto record_mse = [&] {
    if (!mse_trace) return;
    CompensatedSum s;
    for (std::size_t i = 0; i < n; ++i) s.add((y[i] - pred[i]) * (y[i] - pred[i]));
    mse_trace->push_back(s.value() / static_cast<double>(n));
  };
  record_mse();

  std::vector<double> hist_sum;
  std::vector<std::size_t> hist_cnt;
  std::vector<double> gain;
  for (std::size_t it = 0; it < config.iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) resid[i] = y[i] - pred[i];
    if (config.subsample < 1.0) {
      sample.clear();
      std::bernoulli_distribution keep(config.subsample);
      for (std::size_t i = 0; i < n; ++i)
        if (keep(rng)) sample.push_back(i);
      if (sample.empty()) sample.push_back(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
    }
    std::fill(leaf.begin(), leaf.end(), 0u);

    ObliviousTree tree;
    for (std::size_t d = 0; d < depth; ++d) {
      const std::size_t groups = std::size_t{1} << d;
      LevelSplit best_split{0, std::numeric_limits<double>::max()};
      double best_gain = -std::numeric_limits<double>::infinity();
      bool found = false;
      for (std::size_t f = 0; f < x.cols; ++f) {
        const auto& bf = binned[f];
        const std::size_t nt = bf.thresholds.size();
        if (nt == 0) continue;
        const std::size_t nb = nt + 1;
        hist_sum.assign(groups * nb, 0.0);
        hist_cnt.assign(groups * nb, 0);
        for (std::size_t i : sample) {
          const std::size_t cell = leaf[i] * nb + bf.bin[i];
          hist_sum[cell] += resid[i];
          ++hist_cnt[cell];
        }
        gain.assign(nt, 0.0);
        for (std::size_t g = 0; g < groups; ++g) {
          double total = 0.0;
          std::size_t total_cnt = 0;
          for (std::size_t b = 0; b < nb; ++b) total += hist_sum[g * nb + b], total_cnt += hist_cnt[g * nb + b];
          double left = 0.0;
          std::size_t left_cnt = 0;
          for (std::size_t k = 0; k < nt; ++k) {
            left += hist_sum[g * nb + k];
            left_cnt += hist_cnt[g * nb + k];
            const double right = total - left;
            const std::size_t right_cnt = total_cnt - left_cnt;
            if (left_cnt) gain[k] += left * left / static_cast<double>(left_cnt);
            if (right_cnt) gain[k] += right * right / static_cast<double>(right_cnt);
          }
        }
        for (std::size_t k = 0; k < nt; ++k) {
          if (!found || gain[k] > best_gain) {
            best_gain = gain[k];
            best_split = {f, bf.thresholds[k]};
            found = true;
          }
        }
      }
      tree.splits.push_back(best_split);
      for (std::size_t i = 0; i < n; ++i)
        if (x.at(i, best_split.feature) > best_split.threshold) leaf[i] |= std::uint32_t{1} << d;
    }

    const std::size_t n_leaves = std::size_t{1} << depth;
    std::vector<CompensatedSum> leaf_sum(n_leaves);
    std::vector<std::size_t> leaf_cnt(n_leaves, 0);
    for (std::size_t i : sample) {
      leaf_sum[leaf[i]].add(resid[i]);
      ++leaf_cnt[leaf[i]];
    }
    tree.leaf_values.resize(n_leaves);
    for (std::size_t l = 0; l < n_leaves; ++l)
      tree.leaf_values[l] = leaf_cnt[l] ? leaf_sum[l].value() / static_cast<double>(leaf_cnt[l]) : 0.0;
    model.trees.push_back(std::move(tree));

    // Running training predictions (Ensemble::predict up to rounding).
    const auto& t = model.trees.back();
    for (std::size_t i = 0; i < n; ++i) pred[i] += config.learning_rate * t.leaf_values[leaf[i]];
    record_mse();
  }
  return model;
}

/// Train on an all-numeric table (categorical features already encoded).
inline Ensemble train(const Table& table, const TrainConfig& config, std::vector<double>* mse_trace = nullptr) {
  if (table.rows() == 0) throw Error("cannot train on an empty table");
  for (const auto& f : table.schema)
    if (f.kind == FeatureKind::categorical)
      throw Error("feature '" + f.name + "' is not numeric; encode categorical features first");
  if (table.has_missing()) throw Error("training table has missing values; clean it first");
  Ensemble model = train_matrix(table.numeric_matrix(), table.target, config, mse_trace);
  model.schema = table.schema;
  return model;
}

/// Fit the encoder on a raw table, encode the training rows per the
/// configured mode, and train. The returned model carries the raw schema and
/// the encoder so it can score raw rows.
inline Ensemble fit_model(const Table& raw, const TargetStatisticsConfig& ts, const TrainConfig& config,
                          std::vector<double>* mse_trace = nullptr) {
  if (raw.rows() == 0) throw Error("cannot train on an empty table");
  if (raw.has_missing()) throw Error("training table has missing values; clean it first");
  EncoderState state = fit_encoder(raw, ts);
  Table encoded = encode_training(state, raw, ts);
  Ensemble model = train(encoded, config, mse_trace);
  model.schema = raw.schema;
  model.encoder = std::move(state);
  return model;
}

inline void check_schema(const Ensemble& model, const Schema& schema) {
  if (schema.size() != model.schema.size())
    throw Error("schema mismatch: table has " + std::to_string(schema.size()) + " features, model expects " +
                std::to_string(model.schema.size()));
  for (std::size_t j = 0; j < schema.size(); ++j)
    if (schema[j].name != model.schema[j].name || schema[j].kind != model.schema[j].kind)
      throw Error("schema mismatch at feature " + std::to_string(j) + ": '" + schema[j].name + "' vs '" +
                  model.schema[j].name + "'");
}

/// Encoded feature matrix for a raw table in the model's schema.
inline Matrix encode_table(const Ensemble& model, const Table& raw) {
  check_schema(model, raw.schema);
  return apply_encoder(model.encoder, raw).numeric_matrix();
}

inline double predict(const Ensemble& model, std::span<const double> encoded_row) {
  return model.predict(encoded_row);
}

inline double predict_raw(const Ensemble& model, const RawRow& row) {
  return model.predict(encode_row(model.encoder, model.schema, row));
}

inline std::vector<double> predict_batch(const Ensemble& model, const Matrix& encoded) {
  std::vector<double> out;
  out.reserve(encoded.rows);
  for (std::size_t i = 0; i < encoded.rows; ++i) out.push_back(model.predict(encoded.row(i)));
  return out;
}

inline std::vector<double> predict_batch(const Ensemble& model, const Table& raw) {
  if (raw.rows() == 0) {
    check_schema(model, raw.schema);
    return {};
  }
  return predict_batch(model, encode_table(model, raw));
}

}  // namespace shapcost
