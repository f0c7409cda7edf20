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

// Component pricing on top of attributions: breakdowns, trim comparisons,
// credit/penalty quotes, and dependence / trend / class series.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shapcost/common.hpp"
#include "shapcost/dataset.hpp"
#include "shapcost/explain.hpp"
#include "shapcost/gbdt.hpp"

namespace shapcost {

struct VehicleConfig {
  RawRow values;  // raw schema order
  std::string label;
};

inline VehicleConfig config_from_table(const Table& t, std::size_t row) {
  if (row >= t.rows()) throw Error("row " + std::to_string(row) + " out of range (" + std::to_string(t.rows()) + " rows)");
  return {t.row(row), t.row_ids.empty() ? std::to_string(row) : t.row_ids[row]};
}

/// Parse a textual override ("true", "2019", "sedan") for one feature.
inline RawValue parse_raw_value(const FeatureSpec& f, std::string_view text) {
  switch (f.kind) {
    case FeatureKind::categorical: return std::string(text);
    case FeatureKind::boolean:
      if (auto b = detail::parse_bool(text)) return *b;
      throw Error("feature '" + f.name + "': '" + std::string(text) + "' is not a boolean");
    case FeatureKind::numeric:
      if (auto v = parse_double(text)) return *v;
      throw Error("feature '" + f.name + "': '" + std::string(text) + "' is not a number");
  }
  throw Error("unreachable feature kind");
}

inline std::string format_raw_value(const RawValue& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  return format_double(std::get<double>(v));
}

struct ComponentContribution {
  std::size_t feature = 0;
  std::string name;
  RawValue value;
  double contribution = 0.0;
};

struct PriceBreakdown {
  std::string label;
  double predicted = 0.0;
  double baseline = 0.0;
  std::vector<ComponentContribution> components;  // sorted by |contribution| descending
};

namespace detail {
inline std::vector<double> encode_config(const Ensemble& model, const VehicleConfig& c) {
  return encode_row(model.encoder, model.schema, c.values);
}
}  // namespace detail

inline PriceBreakdown breakdown(const Ensemble& model, const VehicleConfig& config, const BackgroundSet& bg) {
  const auto x = detail::encode_config(model, config);
  const auto a = shapley_fast(model, x, bg);
  PriceBreakdown out;
  out.label = config.label;
  out.predicted = a.prediction;
  out.baseline = a.phi0;
  for (std::size_t i = 0; i < a.phi.size(); ++i)
    out.components.push_back({i, model.schema[i].name, config.values[i], a.phi[i]});
  std::stable_sort(out.components.begin(), out.components.end(), [](const auto& l, const auto& r) {
    return std::abs(l.contribution) > std::abs(r.contribution);
  });
  return out;
}

struct ComponentTotal {
  std::string name;
  double contribution = 0.0;
};

/// Report-level grouping: each group is the sum of its member features;
/// ungrouped features stay as their own component. Output keeps the
/// breakdown's order of first appearance.
inline std::vector<ComponentTotal> group_components(const PriceBreakdown& b,
                                                    const std::map<std::string, std::vector<std::string>>& groups) {
  std::map<std::string, std::string> owner;
  for (const auto& [g, members] : groups)
    for (const auto& f : members) {
      const bool known = std::any_of(b.components.begin(), b.components.end(), [&](const auto& c) { return c.name == f; });
      if (!known) throw Error("component group '" + g + "' names unknown feature '" + f + "'");
      if (!owner.emplace(f, g).second) throw Error("feature '" + f + "' belongs to more than one component group");
    }
  std::vector<ComponentTotal> out;
  std::map<std::string, std::size_t> slot;
  for (const auto& c : b.components) {
    auto it = owner.find(c.name);
    const std::string& name = it == owner.end() ? c.name : it->second;
    auto [s, fresh] = slot.try_emplace(name, out.size());
    if (fresh) out.push_back({name, 0.0});
    out[s->second].contribution += c.contribution;
  }
  return out;
}

struct FeatureDelta {
  std::size_t feature = 0;
  std::string name;
  RawValue base_value;
  RawValue variant_value;
  double delta = 0.0;
};

struct Comparison {
  std::string base_label, variant_label;
  double base_price = 0.0;
  double variant_price = 0.0;
  double total_delta = 0.0;         // sum of deltas
  std::vector<FeatureDelta> deltas;  // schema order, nothing suppressed
};

inline Comparison compare(const Ensemble& model, const VehicleConfig& base, const VehicleConfig& variant,
                          const BackgroundSet& bg) {
  const auto xa = detail::encode_config(model, base);
  const auto xb = detail::encode_config(model, variant);
  const auto a = shapley_fast(model, xa, bg);
  const auto b = shapley_fast(model, xb, bg);
  Comparison out;
  out.base_label = base.label;
  out.variant_label = variant.label;
  out.base_price = a.prediction;
  out.variant_price = b.prediction;
  CompensatedSum total;
  for (std::size_t i = 0; i < a.phi.size(); ++i) {
    const double d = b.phi[i] - a.phi[i];
    out.deltas.push_back({i, model.schema[i].name, base.values[i], variant.values[i], d});
    total.add(d);
  }
  out.total_delta = total.value();
  return out;
}

struct Quote {
  Comparison comparison;
  VehicleConfig modified;
  double baseline_price = 0.0;
  double new_price = 0.0;
};

inline Quote scp_quote(const Ensemble& model, const VehicleConfig& baseline,
                       const std::vector<std::pair<std::string, RawValue>>& changes, const BackgroundSet& bg) {
  Quote q;
  q.modified = baseline;
  q.modified.label = baseline.label.empty() ? "modified" : baseline.label + " (modified)";
  for (const auto& [name, value] : changes) {
    auto it = std::find_if(model.schema.begin(), model.schema.end(), [&](const auto& f) { return f.name == name; });
    if (it == model.schema.end()) throw Error("override references unknown feature '" + name + "'");
    q.modified.values[static_cast<std::size_t>(it - model.schema.begin())] = value;
  }
  q.comparison = compare(model, baseline, q.modified, bg);
  q.baseline_price = q.comparison.base_price;
  q.new_price = q.comparison.variant_price;
  return q;
}

struct DependencePoint {
  std::string instance_id;
  double value = 0.0;      // encoded feature value
  RawValue raw;            // raw value as given in the table
  double phi = 0.0;        // total effect
  std::optional<double> main_effect;
  std::optional<double> interactor_value;  // encoded value of the strongest interactor
};

struct DependenceSeries {
  std::size_t feature = 0;
  std::string name;
  std::vector<DependencePoint> points;
  std::optional<std::size_t> strongest_interactor;
  std::vector<double> interaction_strength;  // sum over instances of |phi_ij|, per j
};

inline DependenceSeries dependence(const Ensemble& model, const Table& raw, std::string_view feature,
                                   const BackgroundSet& bg, bool with_interactions, std::size_t threads = 1) {
  check_schema(model, raw.schema);
  const std::size_t f = raw.feature_index(feature);
  const Matrix x = encode_table(model, raw);
  const std::size_t m = model.features();
  DependenceSeries out;
  out.feature = f;
  out.name = model.schema[f].name;
  out.points.resize(raw.rows());
  std::vector<std::vector<double>> rows_ij(with_interactions ? raw.rows() : 0);
  parallel_for(raw.rows(), threads, [&](std::size_t i) {
    auto& p = out.points[i];
    p.instance_id = raw.row_ids.empty() ? std::to_string(i) : raw.row_ids[i];
    p.value = x.at(i, f);
    p.raw = raw.row(i)[f];
    if (with_interactions) {
      const auto im = shapley_interactions_fast(model, x.row(i), bg);
      p.phi = im.phi[f];
      p.main_effect = im.at(f, f);
      rows_ij[i].resize(m);
      for (std::size_t j = 0; j < m; ++j) rows_ij[i][j] = im.at(f, j);
    } else {
      p.phi = shapley_fast(model, x.row(i), bg).phi[f];
    }
  });
  if (!with_interactions) return out;
  std::vector<CompensatedSum> acc(m);
  for (const auto& r : rows_ij)
    for (std::size_t j = 0; j < m; ++j) acc[j].add(std::abs(r[j]));
  out.interaction_strength.assign(m, 0.0);
  double best = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    out.interaction_strength[j] = acc[j].value();
    if (j != f && out.interaction_strength[j] > best) {
      best = out.interaction_strength[j];
      out.strongest_interactor = j;
    }
  }
  if (out.strongest_interactor)
    for (std::size_t i = 0; i < raw.rows(); ++i) out.points[i].interactor_value = x.at(i, *out.strongest_interactor);
  return out;
}

template <typename Key>
struct GroupEffect {
  Key key{};
  std::size_t count = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample sd; 0 for single-member groups
};

using TrendPoint = GroupEffect<double>;
using ClassPoint = GroupEffect<std::string>;

namespace detail {
template <typename Key>
std::vector<GroupEffect<Key>> group_effect(std::span<const AttributionVector> attributions, std::size_t feature,
                                           std::span<const Key> keys, const std::vector<bool>& skip) {
  if (keys.size() != attributions.size()) throw Error("group column length does not match attribution count");
  std::map<Key, std::vector<double>> groups;
  for (std::size_t i = 0; i < attributions.size(); ++i) {
    if (feature >= attributions[i].phi.size()) throw Error("feature index out of range");
    if (skip[i]) continue;
    groups[keys[i]].push_back(attributions[i].phi[feature]);
  }
  std::vector<GroupEffect<Key>> out;
  for (const auto& [k, v] : groups) {
    GroupEffect<Key> g;
    g.key = k;
    g.count = v.size();
    g.mean = mean(v);
    if (v.size() > 1) {
      CompensatedSum s;
      for (double p : v) s.add((p - g.mean) * (p - g.mean));
      g.sd = std::sqrt(s.value() / static_cast<double>(v.size() - 1));
    }
    out.push_back(g);
  }
  return out;
}
}  // namespace detail

/// Mean and sd of one feature's attribution per model year, ascending.
/// Rows with a non-finite year are skipped.
inline std::vector<TrendPoint> trend(std::span<const AttributionVector> attributions, std::size_t feature,
                                     std::span<const double> years) {
  std::vector<bool> skip(years.size());
  for (std::size_t i = 0; i < years.size(); ++i) skip[i] = !std::isfinite(years[i]);
  return detail::group_effect<double>(attributions, feature, years, skip);
}

/// Same as trend with a categorical grouping column; empty labels are skipped.
inline std::vector<ClassPoint> class_effect(std::span<const AttributionVector> attributions, std::size_t feature,
                                            std::span<const std::string> classes) {
  std::vector<bool> skip(classes.size());
  for (std::size_t i = 0; i < classes.size(); ++i) skip[i] = classes[i].empty();
  return detail::group_effect<std::string>(attributions, feature, classes, skip);
}

}  // namespace shapcost
