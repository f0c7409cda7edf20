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

// Run configuration: a flat `[section]` / `key = value` file, one section
// per module. Flags given on the command line are applied afterwards.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "shapcost/cluster.hpp"
#include "shapcost/common.hpp"
#include "shapcost/dataset.hpp"
#include "shapcost/encode.hpp"
#include "shapcost/evaluate.hpp"
#include "shapcost/gbdt.hpp"

namespace shapcost {

struct ConfigEntry {
  std::string section;
  std::string key;
  std::string value;
  std::size_t line = 0;
};

namespace detail {
inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(std::string_view s, char sep = ',') {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.emplace_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}
}  // namespace detail

/// Parse the file into entries in file order. Values may be double-quoted;
/// `#` and `;` start a comment outside quotes.
inline std::vector<ConfigEntry> parse_config(std::string_view text) {
  std::vector<ConfigEntry> out;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view raw = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    // strip comments outside quotes
    bool quoted = false;
    std::size_t cut = raw.size();
    for (std::size_t k = 0; k < raw.size(); ++k) {
      if (raw[k] == '"') quoted = !quoted;
      if (!quoted && (raw[k] == '#' || raw[k] == ';')) {
        cut = k;
        break;
      }
    }
    const auto line = detail::trim(raw.substr(0, cut));
    if (line.empty()) continue;
    const auto where = "config line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(where + "unterminated section header");
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      if (section.empty()) throw Error(where + "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw Error(where + "expected 'key = value'");
    if (section.empty()) throw Error(where + "entry outside any [section]");
    ConfigEntry e{section, std::string(detail::trim(line.substr(0, eq))),
                  std::string(detail::trim(line.substr(eq + 1))), line_no};
    if (e.key.empty()) throw Error(where + "empty key");
    if (e.value.size() >= 2 && e.value.front() == '"' && e.value.back() == '"')
      e.value = e.value.substr(1, e.value.size() - 2);
    else if (!e.value.empty() && e.value.front() == '"')
      throw Error(where + "unterminated string");
    out.push_back(std::move(e));
  }
  return out;
}

struct ClusterSettings {
  std::vector<std::string> features;  // empty: every numeric/boolean feature
  Metric metric = Metric::standardized_euclidean;
  Linkage linkage = Linkage::average;
  std::size_t k = 2;
  SegmentRule segments;
};

struct RunConfig {
  std::string data_path;
  std::string model_path;
  std::string background_path;
  std::string out_dir;
  TableFormat format;
  ImputationPolicy policy = ImputationPolicy::drop_row;
  Schema schema;  // empty: inferred from the data file
  TrainConfig train;
  TargetStatisticsConfig ts;
  CVPlan cv;
  ClusterSettings cluster;
  std::size_t background_size = 128;
  std::size_t synth_rows = 5000;
  double synth_noise_sd = 300.0;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::size_t threads = 1;
};

namespace detail {
inline double config_number(const ConfigEntry& e) {
  if (auto v = parse_double(e.value)) return *v;
  throw Error("config line " + std::to_string(e.line) + ": [" + e.section + "] " + e.key + " expects a number, got '" +
              e.value + "'");
}

inline std::size_t config_count(const ConfigEntry& e) {
  const double v = config_number(e);
  if (!(v >= 0.0) || v != std::floor(v) || v > 1e15)
    throw Error("config line " + std::to_string(e.line) + ": [" + e.section + "] " + e.key +
                " expects a non-negative integer");
  return static_cast<std::size_t>(v);
}

inline std::uint64_t parse_seed(std::string_view s) {
  std::uint64_t v = 0;
  const auto t = trim(s);
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty())
    throw Error("seed must be a non-negative integer, got '" + std::string(s) + "'");
  return v;
}

inline std::vector<GridPoint> parse_grid(std::string_view s) {
  std::vector<GridPoint> out;
  for (const auto& item : split_list(s)) {
    const auto colon = item.find(':');
    auto lr = colon == std::string::npos ? std::nullopt : parse_double(std::string_view(item).substr(0, colon));
    auto it = colon == std::string::npos ? std::nullopt : parse_double(std::string_view(item).substr(colon + 1));
    if (!lr || !it || *it < 1 || *it != std::floor(*it))
      throw Error("grid entries are 'learning_rate:iterations', got '" + item + "'");
    out.push_back({*lr, static_cast<std::size_t>(*it)});
  }
  if (out.empty()) throw Error("grid must list at least one point");
  return out;
}
}  // namespace detail

/// Apply parsed entries on top of `cfg`. Unknown sections or keys are errors.
inline void apply_config(const std::vector<ConfigEntry>& entries, RunConfig& cfg) {
  using namespace detail;
  for (const auto& e : entries) {
    const auto& s = e.section;
    const auto& k = e.key;
    auto unknown = [&] {
      throw Error("config line " + std::to_string(e.line) + ": unknown key '" + k + "' in [" + s + "]");
    };
    if (s == "run") {
      if (k == "seed") cfg.seed = parse_seed(e.value), cfg.seed_given = true;
      else if (k == "threads") cfg.threads = std::max<std::size_t>(1, config_count(e));
      else if (k == "out_dir") cfg.out_dir = e.value;
      else unknown();
    } else if (s == "data") {
      if (k == "path") cfg.data_path = e.value;
      else if (k == "target") cfg.format.target_column = e.value;
      else if (k == "id") cfg.format.id_column = e.value;
      else if (k == "delimiter") {
        if (e.value.size() != 1 && e.value != "\\t") throw Error("delimiter must be a single character");
        cfg.format.delimiter = e.value == "\\t" ? '\t' : e.value[0];
      } else if (k == "policy") cfg.policy = parse_policy(e.value);
      else unknown();
    } else if (s == "schema") {
      cfg.schema.push_back({k, parse_kind(e.value), ""});
    } else if (s == "encode") {
      if (k == "mode") cfg.ts.mode = parse_ts_mode(e.value);
      else if (k == "prior") cfg.ts.prior = config_number(e);
      else if (k == "prior_weight") cfg.ts.prior_weight = config_number(e);
      else if (k == "permutations") cfg.ts.permutations = config_count(e);
      else unknown();
    } else if (s == "train") {
      if (k == "iterations") cfg.train.iterations = config_count(e);
      else if (k == "depth") cfg.train.depth = config_count(e);
      else if (k == "learning_rate") cfg.train.learning_rate = config_number(e);
      else if (k == "bins") cfg.train.bins = config_count(e);
      else if (k == "subsample") cfg.train.subsample = config_number(e);
      else unknown();
    } else if (s == "cv") {
      if (k == "folds") cfg.cv.outer_folds = config_count(e);
      else if (k == "inner_train_fraction") cfg.cv.inner_train_fraction = config_number(e);
      else if (k == "bootstrap") cfg.cv.bootstrap_iterations = config_count(e);
      else if (k == "grid") cfg.cv.grid = parse_grid(e.value);
      else unknown();
    } else if (s == "cluster") {
      if (k == "features") cfg.cluster.features = split_list(e.value);
      else if (k == "metric") cfg.cluster.metric = parse_metric(e.value);
      else if (k == "linkage") cfg.cluster.linkage = parse_linkage(e.value);
      else if (k == "k") cfg.cluster.k = config_count(e);
      else if (k == "outlier_cutoff") cfg.cluster.segments.outlier_cutoff = config_number(e);
      else if (k == "names") cfg.cluster.segments.names = split_list(e.value);
      else if (k == "thresholds") {
        cfg.cluster.segments.thresholds.clear();
        for (const auto& t : split_list(e.value)) {
          auto v = parse_double(t);
          if (!v) throw Error("cluster thresholds must be numbers, got '" + t + "'");
          cfg.cluster.segments.thresholds.push_back(*v);
        }
      } else unknown();
    } else if (s == "explain") {
      if (k == "background_size") cfg.background_size = config_count(e);
      else if (k == "model") cfg.model_path = e.value;
      else if (k == "background") cfg.background_path = e.value;
      else unknown();
    } else if (s == "synth") {
      if (k == "rows") cfg.synth_rows = config_count(e);
      else if (k == "noise_sd") cfg.synth_noise_sd = config_number(e);
      else unknown();
    } else {
      throw Error("config line " + std::to_string(e.line) + ": unknown section [" + s + "]");
    }
  }
  validate_schema(cfg.schema);
}

inline RunConfig load_config(const std::filesystem::path& path, RunConfig base = {}) {
  try {
    apply_config(parse_config(read_file(path)), base);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
  return base;
}

/// Stable text of every setting that affects a trained model, and its hash.
inline std::string training_fingerprint(const RunConfig& c) {
  std::string s;
  auto put = [&](std::string_view k, const std::string& v) {
    s += k;
    s += '=';
    s += v;
    s += '\n';
  };
  put("iterations", std::to_string(c.train.iterations));
  put("depth", std::to_string(c.train.depth));
  put("learning_rate", format_double(c.train.learning_rate));
  put("bins", std::to_string(c.train.bins));
  put("subsample", format_double(c.train.subsample));
  put("ts_mode", std::string(ts_mode_name(c.ts.mode)));
  put("prior", c.ts.prior ? format_double(*c.ts.prior) : "mean");
  put("prior_weight", format_double(c.ts.prior_weight));
  put("permutations", std::to_string(c.ts.permutations));
  put("seed", std::to_string(c.seed));
  put("background_size", std::to_string(c.background_size));
  return s;
}

inline std::string config_hash(const RunConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(training_fingerprint(c))));
  return buf;
}

}  // namespace shapcost
