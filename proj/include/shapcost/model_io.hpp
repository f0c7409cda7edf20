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

// Versioned JSON model file. Doubles are written in shortest round-trip
// form, so load(save(m)) reproduces every threshold and leaf bit for bit.

#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "shapcost/common.hpp"
#include "shapcost/gbdt.hpp"

namespace shapcost {

inline constexpr int kModelFormatVersion = 1;

struct ModelFile {
  Ensemble model;
  std::optional<Matrix> background;  // encoded rows used as the reference set
};

namespace detail {
using ojson = nlohmann::ordered_json;

inline double finite(double v, const char* what) {
  if (!std::isfinite(v)) throw Error(std::string("cannot serialize non-finite ") + what);
  return v;
}

inline const ojson& node(const ojson& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw Error(std::string("model file: missing field '") + key + "'");
  return *it;
}

template <typename T>
T field(const ojson& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw Error(std::string("model file: missing field '") + key + "'");
  try {
    return it->template get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("model file: bad field '") + key + "': " + e.what());
  }
}
}  // namespace detail

inline std::string serialize_model(const Ensemble& m, const Matrix* background = nullptr) {
  using detail::ojson;
  ojson j;
  j["format"] = "shapcost-model";
  j["format_version"] = kModelFormatVersion;
  j["base_score"] = detail::finite(m.base_score, "base score");
  j["learning_rate"] = detail::finite(m.learning_rate, "learning rate");
  ojson schema = ojson::array();
  for (const auto& f : m.schema)
    schema.push_back({{"name", f.name}, {"kind", std::string(kind_name(f.kind))}, {"unit", f.unit}});
  j["schema"] = std::move(schema);

  ojson enc;
  enc["prior"] = detail::finite(m.encoder.prior, "encoder prior");
  enc["prior_weight"] = detail::finite(m.encoder.prior_weight, "encoder prior weight");
  ojson feats = ojson::object();
  for (const auto& [name, table] : m.encoder.features) {
    ojson levels = ojson::array();
    for (const auto& [label, s] : table)
      levels.push_back({{"label", label}, {"sum", detail::finite(s.sum, "category sum")}, {"count", s.count}});
    feats[name] = std::move(levels);
  }
  enc["features"] = std::move(feats);
  j["encoder"] = std::move(enc);

  ojson trees = ojson::array();
  for (const auto& t : m.trees) {
    ojson splits = ojson::array();
    for (const auto& s : t.splits)
      splits.push_back({{"feature", s.feature}, {"threshold", detail::finite(s.threshold, "threshold")}});
    ojson leaves = ojson::array();
    for (double v : t.leaf_values) leaves.push_back(detail::finite(v, "leaf value"));
    trees.push_back({{"depth", t.depth()}, {"splits", std::move(splits)}, {"leaf_values", std::move(leaves)}});
  }
  j["trees"] = std::move(trees);
  j["metadata"] = {{"seed", m.metadata.seed},
                   {"config_hash", m.metadata.config_hash},
                   {"timestamp", m.metadata.timestamp},
                   {"data_path", m.metadata.data_path}};
  if (background) {
    if (background->cols != m.features()) throw Error("background width does not match the model schema");
    ojson rows = ojson::array();
    for (std::size_t r = 0; r < background->rows; ++r) {
      ojson row = ojson::array();
      for (double v : background->row(r)) row.push_back(detail::finite(v, "background value"));
      rows.push_back(std::move(row));
    }
    j["background"] = std::move(rows);
  }
  return j.dump(1) + "\n";
}

inline ModelFile deserialize_model(std::string_view text) {
  using detail::field;
  using detail::node;
  using detail::ojson;
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("model file is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || field<std::string>(j, "format") != "shapcost-model")
    throw Error("not a shapcost model file");
  const int version = field<int>(j, "format_version");
  if (version != kModelFormatVersion)
    throw Error("unsupported model format version " + std::to_string(version));

  ModelFile out;
  Ensemble& m = out.model;
  m.base_score = field<double>(j, "base_score");
  m.learning_rate = field<double>(j, "learning_rate");
  for (const auto& f : node(j, "schema"))
    m.schema.push_back({field<std::string>(f, "name"), parse_kind(field<std::string>(f, "kind")),
                        field<std::string>(f, "unit")});
  validate_schema(m.schema);

  const auto& enc = node(j, "encoder");
  m.encoder.prior = field<double>(enc, "prior");
  m.encoder.prior_weight = field<double>(enc, "prior_weight");
  for (const auto& [name, levels] : node(enc, "features").items()) {
    auto& table = m.encoder.features[name];
    for (const auto& l : levels)
      table[field<std::string>(l, "label")] = {field<double>(l, "sum"), field<std::size_t>(l, "count")};
  }

  for (const auto& t : node(j, "trees")) {
    ObliviousTree tree;
    for (const auto& s : node(t, "splits"))
      tree.splits.push_back({field<std::size_t>(s, "feature"), field<double>(s, "threshold")});
    tree.leaf_values = field<std::vector<double>>(t, "leaf_values");
    if (field<std::size_t>(t, "depth") != tree.depth()) throw Error("model file: tree depth disagrees with its splits");
    tree.validate(m.features());
    m.trees.push_back(std::move(tree));
  }

  const auto& meta = node(j, "metadata");
  m.metadata.seed = field<std::uint64_t>(meta, "seed");
  m.metadata.config_hash = field<std::string>(meta, "config_hash");
  m.metadata.timestamp = field<std::string>(meta, "timestamp");
  m.metadata.data_path = field<std::string>(meta, "data_path");

  if (auto it = j.find("background"); it != j.end()) {
    Matrix bg(it->size(), m.features());
    std::size_t r = 0;
    for (const auto& row : *it) {
      const auto v = row.get<std::vector<double>>();
      if (v.size() != m.features()) throw Error("model file: background row width mismatch");
      std::copy(v.begin(), v.end(), bg.row(r++).begin());
    }
    out.background = std::move(bg);
  }
  return out;
}

inline void save_model(const std::filesystem::path& path, const Ensemble& m, const Matrix* background = nullptr) {
  write_file_atomic(path, serialize_model(m, background));
}

inline ModelFile load_model(const std::filesystem::path& path) {
  try {
    return deserialize_model(read_file(path));
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

}  // namespace shapcost
