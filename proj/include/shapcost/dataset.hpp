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

// Typed tabular data: schema, delimited-text ingestion, cleaning, and a
// synthetic vehicle market with a recorded generative price function.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "shapcost/common.hpp"

namespace shapcost {

enum class FeatureKind { numeric, categorical, boolean };

inline std::string_view kind_name(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::numeric: return "numeric";
    case FeatureKind::categorical: return "categorical";
    case FeatureKind::boolean: return "boolean";
  }
  return "numeric";
}

inline FeatureKind parse_kind(std::string_view text) {
  if (text == "numeric") return FeatureKind::numeric;
  if (text == "categorical") return FeatureKind::categorical;
  if (text == "boolean") return FeatureKind::boolean;
  throw Error("unknown feature kind '" + std::string(text) + "'");
}

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::numeric;
  std::string unit;
  bool operator==(const FeatureSpec&) const = default;
};

using Schema = std::vector<FeatureSpec>;

inline void validate_schema(const Schema& schema) {
  std::set<std::string> seen;
  for (const auto& f : schema) {
    if (f.name.empty()) throw Error("feature with empty name in schema");
    if (!seen.insert(f.name).second) throw Error("duplicate feature name '" + f.name + "'");
  }
}

/// One raw cell: numeric and boolean features hold a double (booleans as
/// 0/1), categorical features hold their label.
using RawValue = std::variant<double, std::string>;
using RawRow = std::vector<RawValue>;

/// Column storage. Numeric and boolean columns fill `numbers`; categorical
/// columns fill `labels`. `missing[i]` marks an empty cell.
struct Column {
  std::vector<double> numbers;
  std::vector<std::string> labels;
  std::vector<bool> missing;
  bool operator==(const Column&) const = default;
};

struct Table {
  Schema schema;
  std::vector<Column> columns;
  std::vector<double> target;
  std::vector<bool> target_missing;
  std::vector<std::string> row_ids;

  std::size_t rows() const { return target.size(); }
  std::size_t features() const { return schema.size(); }

  std::size_t feature_index(std::string_view name) const {
    for (std::size_t j = 0; j < schema.size(); ++j)
      if (schema[j].name == name) return j;
    throw Error("unknown feature '" + std::string(name) + "'");
  }

  bool has_missing() const {
    for (const auto& c : columns)
      if (std::find(c.missing.begin(), c.missing.end(), true) != c.missing.end()) return true;
    return std::find(target_missing.begin(), target_missing.end(), true) != target_missing.end();
  }

  RawRow row(std::size_t i) const {
    RawRow out;
    out.reserve(schema.size());
    for (std::size_t j = 0; j < schema.size(); ++j) {
      if (schema[j].kind == FeatureKind::categorical)
        out.emplace_back(columns[j].labels[i]);
      else
        out.emplace_back(columns[j].numbers[i]);
    }
    return out;
  }

  /// Numeric view of an all-numeric table (booleans count as numeric).
  Matrix numeric_matrix() const {
    Matrix m(rows(), features());
    for (std::size_t j = 0; j < features(); ++j) {
      if (schema[j].kind == FeatureKind::categorical)
        throw Error("feature '" + schema[j].name + "' is categorical; encode before training");
      for (std::size_t i = 0; i < rows(); ++i) m.at(i, j) = columns[j].numbers[i];
    }
    return m;
  }

  bool operator==(const Table&) const = default;
};

/// New table holding the given rows, in the given order.
inline Table select_rows(const Table& t, std::span<const std::size_t> idx) {
  Table out;
  out.schema = t.schema;
  out.columns.resize(t.features());
  for (std::size_t j = 0; j < t.features(); ++j) {
    const auto& src = t.columns[j];
    auto& dst = out.columns[j];
    const bool cat = t.schema[j].kind == FeatureKind::categorical;
    for (std::size_t i : idx) {
      if (cat)
        dst.labels.push_back(src.labels[i]);
      else
        dst.numbers.push_back(src.numbers[i]);
      dst.missing.push_back(src.missing[i]);
    }
  }
  for (std::size_t i : idx) {
    out.target.push_back(t.target[i]);
    out.target_missing.push_back(t.target_missing[i]);
    out.row_ids.push_back(t.row_ids[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Delimited text
// ---------------------------------------------------------------------------

struct TableFormat {
  std::string target_column = "price";
  std::string id_column = "row_id";
  char delimiter = ',';
};

namespace detail {

inline std::vector<std::vector<std::string>> parse_delimited(std::string_view text, char delim) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      in_quotes = true;
      any = true;
    } else if (c == delim) {
      record.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n') {
      if (any || !field.empty()) {
        if (!field.empty() && field.back() == '\r') field.pop_back();
        record.push_back(std::move(field));
        records.push_back(std::move(record));
      }
      record.clear();
      field.clear();
      any = false;
    } else {
      field.push_back(c);
      any = true;
    }
  }
  if (in_quotes) throw Error("unterminated quoted field");
  if (any || !field.empty()) {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    record.push_back(std::move(field));
    records.push_back(std::move(record));
  }
  return records;
}

inline std::string quote_field(std::string_view v, char delim) {
  if (v.find_first_of(std::string{delim, '"', '\n', '\r'}) == std::string_view::npos)
    return std::string(v);
  std::string out = "\"";
  for (char c : v) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline std::optional<double> parse_bool(std::string_view s) {
  if (s == "true" || s == "1" || s == "True" || s == "TRUE") return 1.0;
  if (s == "false" || s == "0" || s == "False" || s == "FALSE") return 0.0;
  return std::nullopt;
}

inline std::string cell_error(std::size_t line, std::string_view column, std::string_view what) {
  return "row " + std::to_string(line) + ", column '" + std::string(column) + "': " +
         std::string(what);
}

}  // namespace detail

/// Read a header-row delimited file into a typed table. `schema` fixes the
/// feature set and kinds; extra file columns are ignored. Row numbers in
/// errors are 1-based data rows (the header is row 0).
inline Table parse_table(std::string_view text, const Schema& schema, const TableFormat& fmt = {}) {
  validate_schema(schema);
  auto records = detail::parse_delimited(text, fmt.delimiter);
  if (records.empty()) throw Error("empty file: no header row");
  const auto& header = records.front();
  std::unordered_map<std::string, std::size_t> pos;
  for (std::size_t k = 0; k < header.size(); ++k) pos.emplace(header[k], k);

  auto locate = [&](const std::string& name) {
    auto it = pos.find(name);
    if (it == pos.end()) throw Error("missing column '" + name + "'");
    return it->second;
  };
  std::vector<std::size_t> feature_pos;
  for (const auto& f : schema) feature_pos.push_back(locate(f.name));
  const std::size_t target_pos = locate(fmt.target_column);
  const auto id_it = pos.find(fmt.id_column);

  Table t;
  t.schema = schema;
  t.columns.resize(schema.size());
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != header.size())
      throw Error("row " + std::to_string(r) + ": expected " + std::to_string(header.size()) +
                  " fields, found " + std::to_string(rec.size()));
    for (std::size_t j = 0; j < schema.size(); ++j) {
      const std::string& cell = rec[feature_pos[j]];
      auto& col = t.columns[j];
      const bool missing = cell.empty();
      col.missing.push_back(missing);
      switch (schema[j].kind) {
        case FeatureKind::categorical:
          col.labels.push_back(cell);
          break;
        case FeatureKind::numeric: {
          double v = 0.0;
          if (!missing) {
            auto parsed = parse_double(cell);
            if (!parsed || !std::isfinite(*parsed))
              throw Error(detail::cell_error(r, schema[j].name, "not a number: '" + cell + "'"));
            v = *parsed;
          }
          col.numbers.push_back(v);
          break;
        }
        case FeatureKind::boolean: {
          double v = 0.0;
          if (!missing) {
            auto parsed = detail::parse_bool(cell);
            if (!parsed)
              throw Error(detail::cell_error(r, schema[j].name, "not a boolean: '" + cell + "'"));
            v = *parsed;
          }
          col.numbers.push_back(v);
          break;
        }
      }
    }
    const std::string& y = rec[target_pos];
    if (y.empty()) {
      t.target.push_back(0.0);
      t.target_missing.push_back(true);
    } else {
      auto parsed = parse_double(y);
      if (!parsed || !std::isfinite(*parsed))
        throw Error(detail::cell_error(r, fmt.target_column, "not a number: '" + y + "'"));
      if (*parsed <= 0.0)
        throw Error(detail::cell_error(r, fmt.target_column, "target must be strictly positive"));
      t.target.push_back(*parsed);
      t.target_missing.push_back(false);
    }
    t.row_ids.push_back(id_it != pos.end() ? rec[id_it->second] : std::to_string(r - 1));
  }
  if (t.rows() == 0) throw Error("empty file: no data rows");
  return t;
}

inline Table load_table(const std::filesystem::path& path, const Schema& schema,
                        const TableFormat& fmt = {}) {
  try {
    return parse_table(read_file(path), schema, fmt);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

inline std::string format_table(const Table& t, const TableFormat& fmt = {}) {
  const char d = fmt.delimiter;
  std::string out = detail::quote_field(fmt.id_column, d);
  for (const auto& f : t.schema) {
    out.push_back(d);
    out += detail::quote_field(f.name, d);
  }
  out.push_back(d);
  out += detail::quote_field(fmt.target_column, d);
  out.push_back('\n');
  for (std::size_t i = 0; i < t.rows(); ++i) {
    out += detail::quote_field(t.row_ids[i], d);
    for (std::size_t j = 0; j < t.features(); ++j) {
      out.push_back(d);
      const auto& c = t.columns[j];
      if (c.missing[i]) continue;
      switch (t.schema[j].kind) {
        case FeatureKind::categorical: out += detail::quote_field(c.labels[i], d); break;
        case FeatureKind::numeric: out += format_double(c.numbers[i]); break;
        case FeatureKind::boolean: out += c.numbers[i] != 0.0 ? "true" : "false"; break;
      }
    }
    out.push_back(d);
    if (!t.target_missing[i]) out += format_double(t.target[i]);
    out.push_back('\n');
  }
  return out;
}

inline void write_table(const std::filesystem::path& path, const Table& t,
                        const TableFormat& fmt = {}) {
  write_file_atomic(path, format_table(t, fmt));
}

/// Guess a schema from file contents: all-boolean columns become boolean,
/// all-numeric columns numeric, everything else categorical. The id and
/// target columns are excluded.
inline Schema infer_schema(std::string_view text, const TableFormat& fmt = {}) {
  auto records = detail::parse_delimited(text, fmt.delimiter);
  if (records.empty()) throw Error("empty file: no header row");
  Schema schema;
  const auto& header = records.front();
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] == fmt.id_column || header[k] == fmt.target_column) continue;
    bool all_bool = true;
    bool all_num = true;
    for (std::size_t r = 1; r < records.size(); ++r) {
      if (k >= records[r].size()) continue;
      const auto& cell = records[r][k];
      if (cell.empty()) continue;
      if (cell != "true" && cell != "false") all_bool = false;
      if (!parse_double(cell)) all_num = false;
    }
    FeatureKind kind = all_bool ? FeatureKind::boolean
                                : (all_num ? FeatureKind::numeric : FeatureKind::categorical);
    schema.push_back({header[k], kind, ""});
  }
  return schema;
}

// ---------------------------------------------------------------------------
// Cleaning
// ---------------------------------------------------------------------------

enum class ImputationPolicy { drop_row, median_mode };

inline ImputationPolicy parse_policy(std::string_view s) {
  if (s == "drop-row" || s == "drop_row") return ImputationPolicy::drop_row;
  if (s == "impute" || s == "median-mode" || s == "median_mode") return ImputationPolicy::median_mode;
  throw Error("unknown imputation policy '" + std::string(s) + "'");
}

/// Remove missing cells. Rows with a missing target are always dropped
/// since a price cannot be imputed. Under `median_mode`, numeric gaps take
/// the column median and categorical/boolean gaps the column mode (ties go
/// to the smallest value).
inline Table clean(const Table& table, ImputationPolicy policy) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < table.rows(); ++i) {
    if (table.target_missing[i]) continue;
    if (policy == ImputationPolicy::drop_row) {
      bool any = false;
      for (const auto& c : table.columns) any = any || c.missing[i];
      if (any) continue;
    }
    keep.push_back(i);
  }
  Table out = select_rows(table, keep);
  if (policy == ImputationPolicy::drop_row) return out;

  for (std::size_t j = 0; j < out.features(); ++j) {
    auto& c = out.columns[j];
    if (std::find(c.missing.begin(), c.missing.end(), true) == c.missing.end()) continue;
    const auto& spec = out.schema[j];
    if (spec.kind == FeatureKind::categorical) {
      std::map<std::string, std::size_t> counts;
      for (std::size_t i = 0; i < out.rows(); ++i)
        if (!c.missing[i]) ++counts[c.labels[i]];
      if (counts.empty()) throw Error("column '" + spec.name + "' is entirely missing");
      auto best = counts.begin();
      for (auto it = counts.begin(); it != counts.end(); ++it)
        if (it->second > best->second) best = it;
      for (std::size_t i = 0; i < out.rows(); ++i)
        if (c.missing[i]) c.labels[i] = best->first, c.missing[i] = false;
    } else {
      std::vector<double> present;
      for (std::size_t i = 0; i < out.rows(); ++i)
        if (!c.missing[i]) present.push_back(c.numbers[i]);
      if (present.empty()) throw Error("column '" + spec.name + "' is entirely missing");
      double fill = 0.0;
      if (spec.kind == FeatureKind::numeric) {
        std::sort(present.begin(), present.end());
        const std::size_t m = present.size();
        fill = m % 2 == 1 ? present[m / 2] : 0.5 * (present[m / 2 - 1] + present[m / 2]);
      } else {
        const auto ones = std::count(present.begin(), present.end(), 1.0);
        fill = static_cast<std::size_t>(ones) * 2 > present.size() ? 1.0 : 0.0;
      }
      for (std::size_t i = 0; i < out.rows(); ++i)
        if (c.missing[i]) c.numbers[i] = fill, c.missing[i] = false;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic market
// ---------------------------------------------------------------------------

struct NumericFeatureDef {
  std::string name;
  double min = 0.0;
  double max = 1.0;
  double coefficient = 0.0;  // price per unit
  double step = 0.0;         // > 0: values snap to min + k*step
  std::string unit;
};

struct CategoricalFeatureDef {
  std::string name;
  std::vector<std::string> levels;
  std::vector<double> offsets;  // price offset per level
};

struct BooleanFeatureDef {
  std::string name;
  double probability = 0.5;
  double offset = 0.0;  // price added when true
};

/// Product term coefficient * value(a) * value(b) on numeric/boolean features.
struct InteractionDef {
  std::string feature_a;
  std::string feature_b;
  double coefficient = 0.0;
};

struct SyntheticMarketSpec {
  std::size_t n_rows = 1000;
  double base_price = 20000.0;
  std::vector<NumericFeatureDef> numeric;
  std::vector<CategoricalFeatureDef> categorical;
  std::vector<BooleanFeatureDef> boolean;
  std::vector<InteractionDef> interactions;
  double noise_sd = 0.0;
  std::uint64_t seed = 0;
};

/// Exact generative decomposition of each synthetic price.
///
/// `terms` holds the raw additive terms (one per feature main effect, then
/// one per interaction), so target = base_price + sum(terms) + noise.
/// `contributions` re-expresses the same function as per-feature credits
/// relative to the population: main effects are centred on their population
/// mean and each product term is split between its two features as the
/// interventional Shapley value against the generated population would do.
/// Row sums of `contributions` equal (noiseless target - baseline).
struct GroundTruth {
  std::vector<std::string> row_ids;
  std::vector<std::string> feature_names;
  std::vector<std::string> term_names;
  Matrix terms;
  Matrix contributions;
  std::vector<double> noise;
  double base_price = 0.0;
  double baseline = 0.0;  // population mean of the noiseless price
};

inline void validate(const SyntheticMarketSpec& spec) {
  if (spec.n_rows < 1) throw Error("synthetic market needs n_rows >= 1");
  if (!(spec.noise_sd >= 0.0)) throw Error("noise_sd must be >= 0");
  std::set<std::string> names;
  auto declare = [&](const std::string& n) {
    if (!names.insert(n).second) throw Error("duplicate synthetic feature '" + n + "'");
  };
  for (const auto& f : spec.numeric) {
    declare(f.name);
    if (!(f.max >= f.min)) throw Error("feature '" + f.name + "': max < min");
    if (f.step < 0.0) throw Error("feature '" + f.name + "': negative step");
  }
  for (const auto& f : spec.categorical) {
    declare(f.name);
    if (f.levels.empty() || f.levels.size() != f.offsets.size())
      throw Error("feature '" + f.name + "': levels and offsets must be nonempty and aligned");
  }
  for (const auto& f : spec.boolean) {
    declare(f.name);
    if (!(f.probability >= 0.0 && f.probability <= 1.0))
      throw Error("feature '" + f.name + "': probability outside [0,1]");
  }
  for (const auto& it : spec.interactions) {
    for (const auto* n : {&it.feature_a, &it.feature_b}) {
      const bool ok =
          std::any_of(spec.numeric.begin(), spec.numeric.end(), [&](auto& f) { return f.name == *n; }) ||
          std::any_of(spec.boolean.begin(), spec.boolean.end(), [&](auto& f) { return f.name == *n; });
      if (!ok) throw Error("interaction references unknown numeric/boolean feature '" + *n + "'");
    }
    if (it.feature_a == it.feature_b) throw Error("interaction pairs must name two features");
  }
}

inline std::pair<Table, GroundTruth> generate_synthetic_market(const SyntheticMarketSpec& spec) {
  validate(spec);
  const std::size_t n = spec.n_rows;
  std::mt19937_64 rng(spec.seed);

  Table t;
  for (const auto& f : spec.numeric) t.schema.push_back({f.name, FeatureKind::numeric, f.unit});
  for (const auto& f : spec.categorical) t.schema.push_back({f.name, FeatureKind::categorical, ""});
  for (const auto& f : spec.boolean) t.schema.push_back({f.name, FeatureKind::boolean, ""});
  const std::size_t m = t.schema.size();
  t.columns.resize(m);

  GroundTruth gt;
  gt.base_price = spec.base_price;
  for (const auto& f : t.schema) {
    gt.feature_names.push_back(f.name);
    gt.term_names.push_back(f.name);
  }
  for (const auto& it : spec.interactions)
    gt.term_names.push_back(it.feature_a + "*" + it.feature_b);
  const std::size_t n_terms = gt.term_names.size();
  gt.terms = Matrix(n, n_terms);
  gt.contributions = Matrix(n, m);

  // value[i][j]: numeric value of feature j in row i (categorical: level index)
  Matrix value(n, m);
  std::normal_distribution<double> noise(0.0, spec.noise_sd);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = 0;
    for (const auto& f : spec.numeric) {
      double v = f.min;
      if (f.step > 0.0) {
        const auto levels = static_cast<std::int64_t>(std::floor((f.max - f.min) / f.step + 1e-9));
        std::uniform_int_distribution<std::int64_t> pick(0, levels);
        v = f.min + f.step * static_cast<double>(pick(rng));
      } else if (f.max > f.min) {
        v = std::uniform_real_distribution<double>(f.min, f.max)(rng);
      }
      value.at(i, j) = v;
      gt.terms.at(i, j) = f.coefficient * v;
      ++j;
    }
    for (const auto& f : spec.categorical) {
      std::uniform_int_distribution<std::size_t> pick(0, f.levels.size() - 1);
      const std::size_t level = pick(rng);
      value.at(i, j) = static_cast<double>(level);
      gt.terms.at(i, j) = f.offsets[level];
      ++j;
    }
    for (const auto& f : spec.boolean) {
      const double v = std::bernoulli_distribution(f.probability)(rng) ? 1.0 : 0.0;
      value.at(i, j) = v;
      gt.terms.at(i, j) = f.offset * v;
      ++j;
    }
    gt.noise.push_back(spec.noise_sd > 0.0 ? noise(rng) : 0.0);
  }

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& it : spec.interactions)
    pairs.emplace_back(t.feature_index(it.feature_a), t.feature_index(it.feature_b));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < pairs.size(); ++k)
      gt.terms.at(i, m + k) =
          spec.interactions[k].coefficient * value.at(i, pairs[k].first) * value.at(i, pairs[k].second);

  // Population means of every term and of each interaction factor.
  std::vector<double> term_mean(n_terms), col_mean(m);
  for (std::size_t k = 0; k < n_terms; ++k) {
    CompensatedSum s;
    for (std::size_t i = 0; i < n; ++i) s.add(gt.terms.at(i, k));
    term_mean[k] = s.value() / static_cast<double>(n);
  }
  for (std::size_t j = 0; j < m; ++j) {
    CompensatedSum s;
    for (std::size_t i = 0; i < n; ++i) s.add(value.at(i, j));
    col_mean[j] = s.value() / static_cast<double>(n);
  }
  CompensatedSum base;
  base.add(spec.base_price);
  for (double v : term_mean) base.add(v);
  gt.baseline = base.value();

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) gt.contributions.at(i, j) = gt.terms.at(i, j) - term_mean[j];
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto [a, b] = pairs[k];
      const double c = spec.interactions[k].coefficient;
      if (c == 0.0) continue;
      const double ua = value.at(i, a), ub = value.at(i, b);
      const double e_ab = term_mean[m + k] / c;
      gt.contributions.at(i, a) += 0.5 * c * ((ua * col_mean[b] - e_ab) + (ua * ub - col_mean[a] * ub));
      gt.contributions.at(i, b) += 0.5 * c * ((ub * col_mean[a] - e_ab) + (ua * ub - col_mean[b] * ua));
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    double y = spec.base_price;
    for (std::size_t k = 0; k < n_terms; ++k) y += gt.terms.at(i, k);
    y += gt.noise[i];
    if (!(y > 0.0))
      throw Error("synthetic market produced a non-positive price at row " + std::to_string(i));
    t.target.push_back(y);
    t.target_missing.push_back(false);
    t.row_ids.push_back(std::to_string(i));
    gt.row_ids.push_back(t.row_ids.back());
  }

  std::size_t j = 0;
  for (std::size_t a = 0; a < spec.numeric.size(); ++a, ++j)
    for (std::size_t i = 0; i < n; ++i) t.columns[j].numbers.push_back(value.at(i, j));
  for (const auto& f : spec.categorical) {
    for (std::size_t i = 0; i < n; ++i)
      t.columns[j].labels.push_back(f.levels[static_cast<std::size_t>(value.at(i, j))]);
    ++j;
  }
  for (std::size_t a = 0; a < spec.boolean.size(); ++a, ++j)
    for (std::size_t i = 0; i < n; ++i) t.columns[j].numbers.push_back(value.at(i, j));
  for (auto& c : t.columns) c.missing.assign(n, false);
  return {std::move(t), std::move(gt)};
}

/// Ground-truth file: one row per row_id with each feature's contribution,
/// the noise draw, and the constant baseline.
inline std::string format_ground_truth(const GroundTruth& gt, char delim = ',') {
  std::string out = "row_id";
  for (const auto& f : gt.feature_names) out += delim + detail::quote_field(f, delim);
  out += delim;
  out += "noise";
  out += delim;
  out += "baseline\n";
  for (std::size_t i = 0; i < gt.row_ids.size(); ++i) {
    out += detail::quote_field(gt.row_ids[i], delim);
    for (std::size_t j = 0; j < gt.feature_names.size(); ++j)
      out += delim + format_double(gt.contributions.at(i, j));
    out += delim + format_double(gt.noise[i]);
    out += delim + format_double(gt.baseline);
    out.push_back('\n');
  }
  return out;
}

/// Mid-size vehicle market used by `synth` and the benchmark suite:
/// 10 numeric, 5 categorical and 3 boolean features with 3 product terms.
inline SyntheticMarketSpec reference_market(std::size_t n_rows = 5000, double noise_sd = 300.0,
                                            std::uint64_t seed = 0) {
  SyntheticMarketSpec s;
  s.n_rows = n_rows;
  s.base_price = 15000.0;
  s.noise_sd = noise_sd;
  s.seed = seed;
  s.numeric = {
      {"age", 0, 14, -600, 1, "years"},
      {"engine_hp", 100, 400, 40, 0, "hp"},
      {"mileage_k", 0, 150, -30, 0, "kmi"},
      {"wheelbase_in", 100, 120, 80, 0, "in"},
      {"curb_weight_klb", 2.5, 5, 1500, 0, "klb"},
      {"fuel_economy_mpg", 15, 45, 60, 0, "mpg"},
      {"cargo_cuft", 10, 40, 40, 0, "cuft"},
      {"seats", 2, 8, 400, 1, "seats"},
      {"torque_lbft", 100, 450, 10, 0, "lbft"},
      {"warranty_yr", 3, 10, 250, 1, "years"},
  };
  s.categorical = {
      {"body", {"sedan", "coupe", "suv", "truck", "hatchback", "wagon"}, {0, 1500, 4000, 3000, -500, 800}},
      {"drivetrain", {"fwd", "rwd", "awd"}, {0, 1200, 2500}},
      {"brand_tier", {"economy", "mainstream", "premium"}, {0, 3000, 9000}},
      {"transmission", {"manual", "automatic", "cvt", "dct"}, {-800, 0, -300, 1000}},
      {"trim_level", {"base", "mid", "top", "sport"}, {0, 1800, 4200, 3000}},
  };
  s.boolean = {{"turbo", 0.4, 1500}, {"alloy_wheels", 0.6, 850}, {"sunroof", 0.3, 1000}};
  s.interactions = {{"engine_hp", "turbo", 4.0}, {"age", "mileage_k", -1.5}, {"curb_weight_klb", "seats", 150.0}};
  return s;
}

}  // namespace shapcost
