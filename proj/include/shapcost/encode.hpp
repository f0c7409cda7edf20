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

// Target-statistics encoding of categorical features.
//
// Greedy TS replaces a category by the mean target of its rows. Ordered TS
// walks the rows in a random permutation and encodes each one from the rows
// strictly before it, smoothed towards a prior P with weight a:
//
//   x = (sum of preceding matching targets + a*P) / (preceding matches + a)
//
// Training uses the ordered variant to avoid target leakage; new rows are
// encoded from full-training-set statistics held in EncoderState.

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "shapcost/common.hpp"
#include "shapcost/dataset.hpp"

namespace shapcost {

enum class TsMode { greedy, ordered };

inline std::string_view ts_mode_name(TsMode m) { return m == TsMode::greedy ? "greedy" : "ordered"; }

inline TsMode parse_ts_mode(std::string_view s) {
  if (s == "greedy") return TsMode::greedy;
  if (s == "ordered") return TsMode::ordered;
  throw Error("unknown target-statistics mode '" + std::string(s) + "'");
}

struct TargetStatisticsConfig {
  std::optional<double> prior;  // unset: mean of the training target
  double prior_weight = 1.0;
  TsMode mode = TsMode::ordered;
  std::uint64_t permutation_seed = 0;
  std::size_t permutations = 1;  // ordered mode averages over this many
};

inline void validate(const TargetStatisticsConfig& c) {
  if (!(c.prior_weight >= 0.0)) throw Error("prior weight a must be >= 0");
  if (c.mode == TsMode::ordered && !(c.prior_weight > 0.0))
    throw Error("ordered target statistics need prior weight a > 0");
  if (c.permutations < 1) throw Error("permutations must be >= 1");
  if (c.prior && !std::isfinite(*c.prior)) throw Error("prior must be finite");
}

struct CategoryStats {
  double sum = 0.0;
  std::size_t count = 0;
  bool operator==(const CategoryStats&) const = default;
};

using CategoryTable = std::map<std::string, CategoryStats>;

struct EncoderState {
  std::map<std::string, CategoryTable> features;  // keyed by feature name
  double prior = 0.0;
  double prior_weight = 1.0;
  bool operator==(const EncoderState&) const = default;

  double encode(const std::string& feature, const std::string& label) const {
    auto f = features.find(feature);
    if (f == features.end()) throw Error("encoder has no state for feature '" + feature + "'");
    auto it = f->second.find(label);
    if (it == f->second.end()) return prior;
    const auto& s = it->second;
    return (s.sum + prior_weight * prior) / (static_cast<double>(s.count) + prior_weight);
  }
};

inline std::vector<double> greedy_ts(std::span<const std::string> column, std::span<const double> target) {
  if (column.size() != target.size()) throw Error("greedy_ts: column and target lengths differ");
  if (column.empty()) throw Error("greedy_ts: empty column");
  CategoryTable stats;
  for (std::size_t i = 0; i < column.size(); ++i) {
    auto& s = stats[column[i]];
    s.sum += target[i];
    ++s.count;
  }
  std::vector<double> out(column.size());
  for (std::size_t i = 0; i < column.size(); ++i) {
    const auto& s = stats[column[i]];
    out[i] = s.sum / static_cast<double>(s.count);
  }
  return out;
}

inline void validate_permutation(std::span<const std::size_t> perm, std::size_t n) {
  if (perm.size() != n) throw Error("permutation length does not match column length");
  std::vector<bool> seen(n, false);
  for (std::size_t p : perm) {
    if (p >= n || seen[p]) throw Error("permutation is not a bijection on the rows");
    seen[p] = true;
  }
}

/// `permutation[p]` is the row placed at position p.
inline std::vector<double> ordered_ts(std::span<const std::string> column, std::span<const double> target,
                                      std::span<const std::size_t> permutation, double a, double prior) {
  if (column.size() != target.size()) throw Error("ordered_ts: column and target lengths differ");
  if (!(a > 0.0)) throw Error("ordered_ts: prior weight a must be > 0");
  validate_permutation(permutation, column.size());
  CategoryTable history;
  std::vector<double> out(column.size());
  for (std::size_t row : permutation) {
    auto& s = history[column[row]];
    out[row] = s.count == 0 ? prior : (s.sum + a * prior) / (static_cast<double>(s.count) + a);
    s.sum += target[row];
    ++s.count;
  }
  return out;
}

inline std::vector<std::size_t> random_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

inline EncoderState fit_encoder(const Table& table, const TargetStatisticsConfig& config) {
  validate(config);
  EncoderState state;
  state.prior_weight = config.prior_weight;
  state.prior = config.prior ? *config.prior : (table.rows() ? mean(table.target) : 0.0);
  for (std::size_t j = 0; j < table.features(); ++j) {
    if (table.schema[j].kind != FeatureKind::categorical) continue;
    auto& stats = state.features[table.schema[j].name];
    for (std::size_t i = 0; i < table.rows(); ++i) {
      auto& s = stats[table.columns[j].labels[i]];
      s.sum += table.target[i];
      ++s.count;
    }
  }
  return state;
}

inline Schema numeric_schema(const Schema& schema) {
  Schema out = schema;
  for (auto& f : out) f.kind = FeatureKind::numeric;
  return out;
}

/// Encode every categorical column from the frozen state; booleans are
/// already stored as 0/1. The result is an all-numeric table.
inline Table apply_encoder(const EncoderState& state, const Table& table) {
  Table out = table;
  for (std::size_t j = 0; j < table.features(); ++j) {
    if (table.schema[j].kind != FeatureKind::categorical) continue;
    auto& col = out.columns[j];
    col.numbers.resize(table.rows());
    for (std::size_t i = 0; i < table.rows(); ++i)
      col.numbers[i] = state.encode(table.schema[j].name, col.labels[i]);
    col.labels.clear();
  }
  out.schema = numeric_schema(table.schema);
  return out;
}

inline std::vector<double> encode_row(const EncoderState& state, const Schema& schema, const RawRow& row) {
  if (row.size() != schema.size())
    throw Error("row has " + std::to_string(row.size()) + " values, schema has " +
                std::to_string(schema.size()));
  std::vector<double> out(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (schema[j].kind == FeatureKind::categorical) {
      const auto* label = std::get_if<std::string>(&row[j]);
      if (!label) throw Error("feature '" + schema[j].name + "' expects a category label");
      out[j] = state.encode(schema[j].name, *label);
    } else {
      const auto* v = std::get_if<double>(&row[j]);
      if (!v) throw Error("feature '" + schema[j].name + "' expects a number");
      out[j] = *v;
    }
  }
  return out;
}

/// Encoding used for the training rows themselves: greedy mode uses the full
/// statistics, ordered mode uses the permutation-based prefix statistics
/// (averaged when more than one permutation is configured).
inline Table encode_training(const EncoderState& state, const Table& table,
                             const TargetStatisticsConfig& config) {
  if (config.mode == TsMode::greedy) return apply_encoder(state, table);
  validate(config);
  Table out = table;
  std::vector<std::vector<std::size_t>> perms;
  for (std::size_t k = 0; k < config.permutations; ++k)
    perms.push_back(random_permutation(table.rows(), derive_seed(config.permutation_seed, k)));
  for (std::size_t j = 0; j < table.features(); ++j) {
    if (table.schema[j].kind != FeatureKind::categorical) continue;
    auto& col = out.columns[j];
    std::vector<double> acc(table.rows(), 0.0);
    for (const auto& perm : perms) {
      auto enc = ordered_ts(col.labels, table.target, perm, state.prior_weight, state.prior);
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += enc[i];
    }
    if (perms.size() > 1)
      for (double& v : acc) v /= static_cast<double>(perms.size());
    col.numbers = std::move(acc);
    col.labels.clear();
  }
  out.schema = numeric_schema(table.schema);
  return out;
}

}  // namespace shapcost
