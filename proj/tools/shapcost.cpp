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

// shapcost command-line driver.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "shapcost/shapcost.hpp"

namespace fs = std::filesystem;
using namespace shapcost;
using ojson = nlohmann::ordered_json;

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::string> out_dir;
  std::optional<std::string> data;
  std::optional<std::string> target;
  std::optional<std::string> id;
  std::optional<std::string> model;
  std::optional<std::string> background;
  std::optional<std::string> policy;

  std::optional<std::size_t> rows;
  std::optional<double> noise_sd;

  std::optional<std::size_t> iterations, depth, bins;
  std::optional<double> learning_rate, subsample;
  std::optional<std::string> ts_mode;
  std::optional<double> prior_weight;
  std::optional<std::size_t> background_size;
  std::string out;

  std::optional<std::size_t> folds, bootstrap;
  std::optional<std::string> grid;
  std::string order_by, group_by;

  std::optional<std::string> features;
  std::optional<std::size_t> k;
  std::optional<std::string> linkage, metric;

  std::vector<std::size_t> row_list;
  bool interactions = false;
  std::size_t base_row = 0, variant_row = 1;
  std::string feature, by;
  std::vector<std::string> set;
};

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "run configuration file")->check(CLI::ExistingFile);
  app->add_option("--seed", f.seed, "global seed");
  app->add_option("--threads", f.threads, "worker threads (env SHAPCOST_THREADS)");
  app->add_option("--out-dir", f.out_dir, "output directory (env SHAPCOST_OUT_DIR)");
}

void add_data(CLI::App* app, Flags& f) {
  app->add_option("--data", f.data, "input table (CSV)");
  app->add_option("--target", f.target, "target column name");
  app->add_option("--id", f.id, "row id column name");
}

void add_model(CLI::App* app, Flags& f) {
  app->add_option("--model", f.model, "model file");
  app->add_option("--background", f.background, "background table (CSV); default: rows stored in the model");
  app->add_option("--background-size", f.background_size, "background rows sampled from --background");
}

/// defaults < config file < environment < flags
RunConfig resolve(const Flags& f) {
  RunConfig c;
  if (!f.config.empty()) c = load_config(f.config, c);
  if (const char* e = std::getenv("SHAPCOST_OUT_DIR"); e && *e) c.out_dir = e;
  if (const char* e = std::getenv("SHAPCOST_THREADS"); e && *e) {
    const auto v = parse_double(e);
    if (!v || *v < 1 || *v != std::floor(*v)) throw Error("SHAPCOST_THREADS must be a positive integer");
    c.threads = static_cast<std::size_t>(*v);
  }
  if (f.seed) c.seed = *f.seed, c.seed_given = true;
  if (f.threads) c.threads = std::max<std::size_t>(1, *f.threads);
  if (f.out_dir) c.out_dir = *f.out_dir;
  if (f.data) c.data_path = *f.data;
  if (f.target) c.format.target_column = *f.target;
  if (f.id) c.format.id_column = *f.id;
  if (f.model) c.model_path = *f.model;
  if (f.background) c.background_path = *f.background;
  if (f.policy) c.policy = parse_policy(*f.policy);
  if (f.rows) c.synth_rows = *f.rows;
  if (f.noise_sd) c.synth_noise_sd = *f.noise_sd;
  if (f.iterations) c.train.iterations = *f.iterations;
  if (f.depth) c.train.depth = *f.depth;
  if (f.bins) c.train.bins = *f.bins;
  if (f.learning_rate) c.train.learning_rate = *f.learning_rate;
  if (f.subsample) c.train.subsample = *f.subsample;
  if (f.ts_mode) c.ts.mode = parse_ts_mode(*f.ts_mode);
  if (f.prior_weight) c.ts.prior_weight = *f.prior_weight;
  if (f.background_size) c.background_size = *f.background_size;
  if (f.folds) c.cv.outer_folds = *f.folds;
  if (f.bootstrap) c.cv.bootstrap_iterations = *f.bootstrap;
  if (f.grid) c.cv.grid = detail::parse_grid(*f.grid);
  if (f.features) c.cluster.features = detail::split_list(*f.features);
  if (f.k) c.cluster.k = *f.k;
  if (f.linkage) c.cluster.linkage = parse_linkage(*f.linkage);
  if (f.metric) c.cluster.metric = parse_metric(*f.metric);
  if (c.out_dir.empty()) c.out_dir = "shapcost-out";
  return c;
}

void require_seed(const RunConfig& c) {
  if (!c.seed_given) throw Error("this command is stochastic and needs a seed: pass --seed or set [run] seed");
  std::cout << "seed: " << c.seed << "\n";
}

const std::string& require_path(const std::string& p, const char* what) {
  if (p.empty()) throw Error(std::string("missing ") + what + " path");
  if (!fs::exists(p)) throw Error(std::string(what) + " file '" + p + "' does not exist");
  return p;
}

/// Files written during one command, listed in <out_dir>/manifest.json.
class Run {
 public:
  Run(std::string command, const RunConfig& c) : command_(std::move(command)), cfg_(c) {}

  fs::path path(const std::string& name) const { return fs::path(cfg_.out_dir) / name; }

  void write_to(const fs::path& p, const std::string& text) {
    write_file_atomic(p, text);
    files_.push_back({p.lexically_relative(cfg_.out_dir).generic_string(), text.size()});
    if (files_.back().first.empty() || files_.back().first.starts_with("..")) files_.back().first = p.generic_string();
  }
  void write(const std::string& name, const std::string& text) { write_to(path(name), text); }
  void write_json(const std::string& name, const ojson& j) { write(name, j.dump(1) + "\n"); }

  void finish() {
    ojson m;
    m["command"] = command_;
    m["seed"] = cfg_.seed_given ? ojson(cfg_.seed) : ojson(nullptr);
    m["threads"] = cfg_.threads;
    m["files"] = ojson::array();
    for (const auto& [p, bytes] : files_) m["files"].push_back({{"path", p}, {"bytes", bytes}});
    write_file_atomic(path("manifest.json"), m.dump(1) + "\n");
    for (const auto& [p, bytes] : files_) std::cout << "wrote " << p << "\n";
  }

 private:
  std::string command_;
  RunConfig cfg_;
  std::vector<std::pair<std::string, std::size_t>> files_;
};

std::string csv(std::string_view v) { return detail::quote_field(v, ','); }

std::string utc_timestamp() {
  std::time_t t = std::time(nullptr);
  if (const char* e = std::getenv("SOURCE_DATE_EPOCH"); e && *e) {
    const auto v = parse_double(e);
    if (!v) throw Error("SOURCE_DATE_EPOCH must be an integer");
    t = static_cast<std::time_t>(*v);
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Table load_training_table(const RunConfig& c) {
  const auto& path = require_path(c.data_path, "data");
  const Schema schema = c.schema.empty() ? infer_schema(read_file(path), c.format) : c.schema;
  return clean(load_table(path, schema, c.format), c.policy);
}

Table load_for_model(const RunConfig& c, const Ensemble& m) {
  Table t = load_table(require_path(c.data_path, "data"), m.schema, c.format);
  if (t.has_missing()) throw Error(c.data_path + ": table has missing values; run `shapcost ingest` first");
  return t;
}

struct LoadedModel {
  Ensemble model;
  BackgroundSet bg{Matrix(1, 1)};
};

LoadedModel load_with_background(const RunConfig& c) {
  auto file = load_model(require_path(c.model_path, "model"));
  LoadedModel out{std::move(file.model), BackgroundSet(Matrix(1, 1))};
  if (!c.background_path.empty()) {
    Table t = load_table(require_path(c.background_path, "background"), out.model.schema, c.format);
    if (t.has_missing()) throw Error(c.background_path + ": background has missing values");
    const Matrix x = encode_table(out.model, t);
    if (x.rows > c.background_size) {
      require_seed(c);
      out.bg = sample_background(x, c.background_size, derive_seed(c.seed, 4));
    } else {
      out.bg = BackgroundSet(x);
    }
  } else if (file.background) {
    out.bg = BackgroundSet(std::move(*file.background));
  } else {
    throw Error(c.model_path + " stores no background rows; pass --background");
  }
  return out;
}

std::vector<double> numeric_column(const Table& t, std::size_t f) {
  if (t.schema[f].kind == FeatureKind::categorical) throw Error("feature '" + t.schema[f].name + "' is not numeric");
  return t.columns[f].numbers;
}

// ---------------------------------------------------------------------------

void cmd_synth(const RunConfig& c) {
  require_seed(c);
  auto [table, truth] = generate_synthetic_market(reference_market(c.synth_rows, c.synth_noise_sd, c.seed));
  Run run("synth", c);
  run.write("market.csv", format_table(table, c.format));
  run.write("ground_truth.csv", format_ground_truth(truth));
  ojson schema = ojson::array();
  for (const auto& f : table.schema) schema.push_back({{"name", f.name}, {"kind", kind_name(f.kind)}, {"unit", f.unit}});
  run.write_json("market.json", {{"rows", table.rows()},
                                 {"noise_sd", c.synth_noise_sd},
                                 {"base_price", truth.base_price},
                                 {"baseline", truth.baseline},
                                 {"schema", schema}});
  run.finish();
}

void cmd_ingest(const RunConfig& c) {
  const auto& path = require_path(c.data_path, "data");
  const Schema schema = c.schema.empty() ? infer_schema(read_file(path), c.format) : c.schema;
  const Table raw = load_table(path, schema, c.format);
  const Table cleaned = clean(raw, c.policy);
  Run run("ingest", c);
  run.write("clean.csv", format_table(cleaned, c.format));
  ojson cols = ojson::array();
  for (std::size_t j = 0; j < raw.features(); ++j) {
    const auto& m = raw.columns[j].missing;
    cols.push_back({{"name", raw.schema[j].name},
                    {"kind", kind_name(raw.schema[j].kind)},
                    {"missing", std::count(m.begin(), m.end(), true)}});
  }
  run.write_json("ingest.json", {{"rows_in", raw.rows()},
                                 {"rows_out", cleaned.rows()},
                                 {"policy", c.policy == ImputationPolicy::drop_row ? "drop-row" : "median-mode"},
                                 {"columns", cols}});
  run.finish();
}

void cmd_cluster(const RunConfig& c) {
  const Table t = load_training_table(c);
  std::vector<std::size_t> cols;
  if (c.cluster.features.empty()) {
    for (std::size_t j = 0; j < t.features(); ++j)
      if (t.schema[j].kind != FeatureKind::categorical) cols.push_back(j);
  } else {
    for (const auto& name : c.cluster.features) {
      const std::size_t j = t.feature_index(name);
      if (t.schema[j].kind == FeatureKind::categorical) throw Error("cluster feature '" + name + "' is categorical");
      cols.push_back(j);
    }
  }
  if (cols.empty()) throw Error("no numeric features to cluster on");
  Matrix x(t.rows(), cols.size());
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t k = 0; k < cols.size(); ++k) x.at(i, k) = t.columns[cols[k]].numbers[i];
  const Dendrogram tree = agglomerate(x, c.cluster.metric, c.cluster.linkage);
  const auto labels = cut(tree, c.cluster.k);
  const auto seg = assign_segments(labels, t.target, c.cluster.segments);

  Run run("cluster", c);
  std::string d = "step,a,b,height,size\n";
  for (std::size_t s = 0; s < tree.merges.size(); ++s) {
    const auto& m = tree.merges[s];
    d += std::to_string(s) + "," + std::to_string(m.a) + "," + std::to_string(m.b) + "," + format_double(m.height) +
         "," + std::to_string(m.size) + "\n";
  }
  run.write("dendrogram.csv", d);
  std::string a = csv(c.format.id_column) + ",cluster,segment\n";
  for (std::size_t i = 0; i < t.rows(); ++i)
    a += csv(t.row_ids[i]) + "," + std::to_string(labels[i]) + "," +
         (seg.segment[i] < 0 ? std::string("dropped") : csv(seg.names[static_cast<std::size_t>(seg.segment[i])])) + "\n";
  run.write("clusters.csv", a);
  ojson clusters = ojson::array();
  for (std::size_t k = 0; k < seg.cluster_median.size(); ++k) {
    const auto n = std::count(labels.begin(), labels.end(), k);
    const int s = seg.cluster_segment[k];
    clusters.push_back({{"cluster", k},
                        {"size", n},
                        {"median_price", seg.cluster_median[k]},
                        {"segment", s < 0 ? ojson("dropped") : ojson(seg.names[static_cast<std::size_t>(s)])}});
  }
  run.write_json("segments.json", {{"k", c.cluster.k},
                                   {"rows", t.rows()},
                                   {"dropped_rows", seg.dropped_rows.size()},
                                   {"clusters", clusters}});
  run.finish();
}

void cmd_train(const RunConfig& c0, const std::string& out) {
  require_seed(c0);
  RunConfig c = c0;
  c.train.seed = derive_seed(c.seed, 1);
  c.ts.permutation_seed = derive_seed(c.seed, 2);
  const Table t = load_training_table(c);
  std::vector<double> trace;
  Ensemble m = fit_model(t, c.ts, c.train, &trace);
  m.metadata.seed = c.seed;
  m.metadata.config_hash = config_hash(c);
  m.metadata.timestamp = utc_timestamp();
  m.metadata.data_path = c.data_path;
  const Matrix x = encode_table(m, t);
  const auto bg = sample_background(x, std::min(c.background_size, x.rows), derive_seed(c.seed, 4));
  Matrix bg_rows(bg.size(), bg.features());
  for (std::size_t r = 0; r < bg.size(); ++r) std::copy_n(bg.row(r).begin(), bg.features(), bg_rows.row(r).begin());

  Run run("train", c);
  run.write_to(out.empty() ? run.path("model.json") : fs::path(out), serialize_model(m, &bg_rows));
  std::string log = "iteration,train_mse\n";
  for (std::size_t i = 0; i < trace.size(); ++i) log += std::to_string(i) + "," + format_double(trace[i]) + "\n";
  run.write("training_log.csv", log);
  const auto fit = metrics(t.target, predict_batch(m, x));
  run.write_json("train.json", {{"rows", t.rows()},
                                {"trees", m.trees.size()},
                                {"config_hash", m.metadata.config_hash},
                                {"train_rmse", fit.rmse},
                                {"train_mape", fit.mape}});
  run.finish();
}

ojson metrics_json(const MetricsReport& m) {
  return {{"rmse", m.rmse}, {"mape", m.mape}, {"explained_variance", m.explained_variance}, {"n", m.n}};
}

void cmd_eval(const RunConfig& c0, const std::string& order_by, const std::string& group_by) {
  require_seed(c0);
  RunConfig c = c0;
  c.cv.seed = c.seed;
  c.cv.threads = c.threads;
  const Table t = load_training_table(c);
  const CVReport r = nested_cv(t, c.ts, c.train, c.cv);

  std::vector<double> residuals(t.rows());
  for (std::size_t i = 0; i < t.rows(); ++i) residuals[i] = t.target[i] - r.oof_predictions[i];
  std::vector<double> key(t.rows(), 0.0);
  if (!order_by.empty()) key = numeric_column(t, t.feature_index(order_by));
  std::vector<std::string> groups;
  if (!group_by.empty()) {
    const std::size_t g = t.feature_index(group_by);
    if (t.schema[g].kind != FeatureKind::categorical) throw Error("--group-by needs a categorical feature");
    groups = t.columns[g].labels;
  }
  const auto diag = residual_diagnostics(residuals, key, t.row_ids, groups);

  Run run("eval", c);
  std::string folds = "fold,learning_rate,iterations,rmse,mape,explained_variance,n\n";
  ojson fj = ojson::array();
  for (const auto& f : r.folds) {
    folds += std::to_string(f.fold) + "," + format_double(f.chosen.learning_rate) + "," +
             std::to_string(f.chosen.iterations) + "," + format_double(f.metrics.rmse) + "," +
             format_double(f.metrics.mape) + "," + format_double(f.metrics.explained_variance) + "," +
             std::to_string(f.metrics.n) + "\n";
    fj.push_back({{"fold", f.fold},
                  {"chosen", {{"learning_rate", f.chosen.learning_rate}, {"iterations", f.chosen.iterations}}},
                  {"inner_rmse", f.inner_rmse},
                  {"metrics", metrics_json(f.metrics)}});
  }
  run.write("cv_folds.csv", folds);
  std::string oof = csv(c.format.id_column) + ",actual,predicted,residual\n";
  for (std::size_t i = 0; i < t.rows(); ++i)
    oof += csv(t.row_ids[i]) + "," + format_double(t.target[i]) + "," + format_double(r.oof_predictions[i]) + "," +
           format_double(residuals[i]) + "\n";
  run.write("oof_predictions.csv", oof);
  auto spread = [](const Spread& s) { return ojson{{"mean", s.mean}, {"sd", s.sd}}; };
  ojson g = ojson::array();
  for (const auto& s : diag.groups)
    g.push_back({{"group", s.group}, {"count", s.count}, {"mean", s.mean}, {"sd", s.sd}, {"flagged", s.flagged}});
  run.write_json("cv_report.json",
                 {{"folds", fj},
                  {"mean_of_folds", metrics_json(r.mean_of_folds)},
                  {"pooled", metrics_json(r.pooled)},
                  {"bootstrap",
                   {{"iterations", r.bootstrap.iterations},
                    {"rmse", spread(r.bootstrap.rmse)},
                    {"mape", spread(r.bootstrap.mape)},
                    {"explained_variance", spread(r.bootstrap.explained_variance)}}},
                  {"residuals",
                   {{"order_by", order_by.empty() ? ojson(c.format.id_column) : ojson(order_by)},
                    {"durbin_watson", diag.durbin_watson},
                    {"skew", diag.skew},
                    {"excess_kurtosis", diag.excess_kurtosis},
                    {"groups", g}}}});
  run.finish();
  std::cout << "pooled rmse " << format_double(r.pooled.rmse) << " mape " << format_double(r.pooled.mape) << "\n";
}

std::vector<std::size_t> selected_rows(const std::vector<std::size_t>& rows, const Table& t) {
  std::vector<std::size_t> out = rows;
  if (out.empty())
    for (std::size_t i = 0; i < t.rows(); ++i) out.push_back(i);
  for (std::size_t r : out)
    if (r >= t.rows()) throw Error("row " + std::to_string(r) + " out of range (" + std::to_string(t.rows()) + " rows)");
  return out;
}

void cmd_explain(const RunConfig& c, const std::vector<std::size_t>& rows_in, bool with_interactions) {
  auto lm = load_with_background(c);
  const Table t = load_for_model(c, lm.model);
  const auto rows = selected_rows(rows_in, t);
  Table sub = select_rows(t, rows);
  const Matrix x = encode_table(lm.model, sub);
  const auto attrs = explain_rows(lm.model, x, lm.bg, sub.row_ids, c.threads);

  Run run("explain", c);
  std::string out = csv(c.format.id_column) + ",feature,value,contribution\n";
  ojson j = ojson::array();
  double worst = 0.0;
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    const auto& a = attrs[i];
    const RawRow raw = sub.row(i);
    out += csv(a.instance_id) + ",(baseline),," + format_double(a.phi0) + "\n";
    ojson contrib = ojson::object();
    CompensatedSum total;
    total.add(a.phi0);
    for (std::size_t f = 0; f < a.phi.size(); ++f) {
      out += csv(a.instance_id) + "," + csv(lm.model.schema[f].name) + "," + csv(format_raw_value(raw[f])) + "," +
             format_double(a.phi[f]) + "\n";
      contrib[lm.model.schema[f].name] = a.phi[f];
      total.add(a.phi[f]);
    }
    out += csv(a.instance_id) + ",(prediction),," + format_double(a.prediction) + "\n";
    const double err = std::abs(total.value() - a.prediction);
    worst = std::max(worst, err);
    j.push_back({{"row_id", a.instance_id},
                 {"prediction", a.prediction},
                 {"baseline", a.phi0},
                 {"contributions", contrib},
                 {"local_accuracy_error", err}});
  }
  run.write("attributions.csv", out);
  run.write_json("attributions.json",
                 {{"background_rows", lm.bg.size()}, {"max_local_accuracy_error", worst}, {"instances", j}});
  if (with_interactions) {
    std::vector<InteractionMatrix> ims(x.rows);
    parallel_for(x.rows, c.threads, [&](std::size_t i) { ims[i] = shapley_interactions_fast(lm.model, x.row(i), lm.bg); });
    std::string s = csv(c.format.id_column) + ",feature_i,feature_j,value\n";
    for (std::size_t i = 0; i < ims.size(); ++i)
      for (std::size_t a = 0; a < ims[i].m; ++a)
        for (std::size_t b = 0; b < ims[i].m; ++b)
          s += csv(sub.row_ids[i]) + "," + csv(lm.model.schema[a].name) + "," + csv(lm.model.schema[b].name) + "," +
               format_double(ims[i].at(a, b)) + "\n";
    run.write("interactions.csv", s);
  }
  run.finish();
  std::cout << "max local accuracy error " << format_double(worst) << "\n";
}

ojson comparison_json(const Comparison& cmp) {
  ojson d = ojson::array();
  for (const auto& f : cmp.deltas)
    d.push_back({{"feature", f.name},
                 {"base_value", format_raw_value(f.base_value)},
                 {"variant_value", format_raw_value(f.variant_value)},
                 {"delta", f.delta}});
  return {{"base", cmp.base_label},     {"variant", cmp.variant_label},  {"base_price", cmp.base_price},
          {"variant_price", cmp.variant_price}, {"total_delta", cmp.total_delta}, {"deltas", d}};
}

std::string comparison_csv(const Comparison& cmp) {
  std::string s = "feature,base_value,variant_value,delta\n";
  for (const auto& f : cmp.deltas)
    s += csv(f.name) + "," + csv(format_raw_value(f.base_value)) + "," + csv(format_raw_value(f.variant_value)) + "," +
         format_double(f.delta) + "\n";
  return s;
}

void cmd_compare(const RunConfig& c, std::size_t base, std::size_t variant) {
  auto lm = load_with_background(c);
  const Table t = load_for_model(c, lm.model);
  const auto cmp = compare(lm.model, config_from_table(t, base), config_from_table(t, variant), lm.bg);
  Run run("compare", c);
  run.write("comparison.csv", comparison_csv(cmp));
  run.write_json("comparison.json", comparison_json(cmp));
  run.finish();
  std::cout << "price delta " << format_double(cmp.variant_price - cmp.base_price) << "\n";
}

void cmd_quote(const RunConfig& c, std::size_t row, const std::vector<std::string>& set) {
  auto lm = load_with_background(c);
  const Table t = load_for_model(c, lm.model);
  std::vector<std::pair<std::string, RawValue>> changes;
  for (const auto& s : set) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw Error("--set expects name=value, got '" + s + "'");
    const std::string name = s.substr(0, eq);
    changes.emplace_back(name, parse_raw_value(lm.model.schema[t.feature_index(name)], s.substr(eq + 1)));
  }
  const auto q = scp_quote(lm.model, config_from_table(t, row), changes, lm.bg);
  Run run("quote", c);
  run.write("quote.csv", comparison_csv(q.comparison));
  ojson j = comparison_json(q.comparison);
  j["baseline_price"] = q.baseline_price;
  j["new_price"] = q.new_price;
  j["credit_penalty"] = q.new_price - q.baseline_price;
  run.write_json("quote.json", j);
  run.finish();
  std::cout << "baseline " << format_double(q.baseline_price) << " quote " << format_double(q.new_price) << "\n";
}

void cmd_dependence(const RunConfig& c, const std::string& feature, bool with_interactions) {
  if (feature.empty()) throw Error("--feature is required");
  auto lm = load_with_background(c);
  const Table t = load_for_model(c, lm.model);
  const auto s = dependence(lm.model, t, feature, lm.bg, with_interactions, c.threads);
  const std::string partner = s.strongest_interactor ? lm.model.schema[*s.strongest_interactor].name : "";
  std::string out = csv(c.format.id_column) + ",raw_value,encoded_value,contribution";
  if (with_interactions) out += ",main_effect," + csv(partner.empty() ? "interactor" : partner);
  out += "\n";
  for (const auto& p : s.points) {
    out += csv(p.instance_id) + "," + csv(format_raw_value(p.raw)) + "," + format_double(p.value) + "," +
           format_double(p.phi);
    if (with_interactions)
      out += "," + format_double(*p.main_effect) + "," + (p.interactor_value ? format_double(*p.interactor_value) : "");
    out += "\n";
  }
  Run run("dependence", c);
  run.write("dependence.csv", out);
  ojson strength = ojson::object();
  for (std::size_t j = 0; j < s.interaction_strength.size(); ++j)
    strength[lm.model.schema[j].name] = s.interaction_strength[j];
  run.write_json("dependence.json", {{"feature", s.name},
                                     {"points", s.points.size()},
                                     {"strongest_interactor", partner.empty() ? ojson(nullptr) : ojson(partner)},
                                     {"interaction_strength", strength}});
  run.finish();
}

void cmd_importance(const RunConfig& c) {
  auto lm = load_with_background(c);
  const Table t = load_for_model(c, lm.model);
  const auto attrs = explain_rows(lm.model, encode_table(lm.model, t), lm.bg, t.row_ids, c.threads);
  const auto imp = global_importance(attrs);
  std::string out = "rank,feature,mean_abs_contribution\n";
  for (std::size_t r = 0; r < imp.size(); ++r)
    out += std::to_string(r + 1) + "," + csv(lm.model.schema[imp[r].feature].name) + "," +
           format_double(imp[r].score) + "\n";
  Run run("importance", c);
  run.write("importance.csv", out);
  run.finish();
}

void cmd_trend(const RunConfig& c, const std::string& feature, const std::string& by) {
  if (feature.empty() || by.empty()) throw Error("--feature and --by are required");
  auto lm = load_with_background(c);
  const Table t = load_for_model(c, lm.model);
  const auto attrs = explain_rows(lm.model, encode_table(lm.model, t), lm.bg, t.row_ids, c.threads);
  const std::size_t f = t.feature_index(feature), g = t.feature_index(by);
  std::string out = csv(by) + ",count,mean_contribution,sd\n";
  auto line = [&](const std::string& key, const auto& p) {
    out += csv(key) + "," + std::to_string(p.count) + "," + format_double(p.mean) + "," + format_double(p.sd) + "\n";
  };
  if (t.schema[g].kind == FeatureKind::categorical) {
    for (const auto& p : class_effect(attrs, f, t.columns[g].labels)) line(p.key, p);
  } else {
    for (const auto& p : trend(attrs, f, t.columns[g].numbers)) line(format_double(p.key), p);
  }
  Run run("trend", c);
  run.write("trend.csv", out);
  run.finish();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shapcost: boosted price models with Shapley component attribution"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  Flags f;

  auto* synth = app.add_subcommand("synth", "generate a synthetic vehicle market with ground truth");
  add_common(synth, f);
  synth->add_option("--rows", f.rows, "rows to generate");
  synth->add_option("--noise-sd", f.noise_sd, "Gaussian price noise sd");

  auto* ingest = app.add_subcommand("ingest", "load, validate and clean a table");
  add_common(ingest, f);
  add_data(ingest, f);
  ingest->add_option("--policy", f.policy, "drop-row | median-mode");

  auto* cluster = app.add_subcommand("cluster", "hierarchical clustering and price segments");
  add_common(cluster, f);
  add_data(cluster, f);
  cluster->add_option("--policy", f.policy, "drop-row | median-mode");
  cluster->add_option("--features", f.features, "comma separated numeric features");
  cluster->add_option("--k", f.k, "number of clusters");
  cluster->add_option("--linkage", f.linkage, "single | complete | average");
  cluster->add_option("--metric", f.metric, "euclidean | standardized");

  auto add_training = [&](CLI::App* a) {
    add_common(a, f);
    add_data(a, f);
    a->add_option("--policy", f.policy, "drop-row | median-mode");
    a->add_option("--iterations", f.iterations, "boosting iterations");
    a->add_option("--depth", f.depth, "tree depth");
    a->add_option("--learning-rate", f.learning_rate, "shrinkage");
    a->add_option("--bins", f.bins, "histogram bins per feature");
    a->add_option("--subsample", f.subsample, "row fraction per iteration");
    a->add_option("--ts-mode", f.ts_mode, "ordered | greedy");
    a->add_option("--prior-weight", f.prior_weight, "target statistic prior weight");
  };
  auto* train_cmd = app.add_subcommand("train", "fit a boosted oblivious-tree model");
  add_training(train_cmd);
  train_cmd->add_option("--out", f.out, "model file (default <out-dir>/model.json)");
  train_cmd->add_option("--background-size", f.background_size, "background rows stored in the model");

  auto* eval = app.add_subcommand("eval", "nested cross-validation and residual diagnostics");
  add_training(eval);
  eval->add_option("--folds", f.folds, "outer folds");
  eval->add_option("--bootstrap", f.bootstrap, "bootstrap iterations");
  eval->add_option("--grid", f.grid, "lr:iterations,... search grid");
  eval->add_option("--order-by", f.order_by, "numeric feature ordering residuals for Durbin-Watson");
  eval->add_option("--group-by", f.group_by, "categorical feature for grouped residuals");

  auto add_explaining = [&](CLI::App* a) {
    add_common(a, f);
    add_data(a, f);
    add_model(a, f);
  };
  auto* explain = app.add_subcommand("explain", "per-instance Shapley attributions");
  add_explaining(explain);
  explain->add_option("--row", f.row_list, "row index to explain (repeatable; default all)");
  explain->add_flag("--interactions", f.interactions, "also write pairwise interaction values");

  auto* cmp = app.add_subcommand("compare", "attribute the price gap between two rows");
  add_explaining(cmp);
  cmp->add_option("--base", f.base_row, "base row index");
  cmp->add_option("--variant", f.variant_row, "variant row index");

  auto* dep = app.add_subcommand("dependence", "dependence series for one feature");
  add_explaining(dep);
  dep->add_option("--feature", f.feature, "feature name")->required();
  dep->add_flag("--interactions", f.interactions, "split main effect and find the strongest interactor");

  auto* imp = app.add_subcommand("importance", "global feature importance");
  add_explaining(imp);

  auto* tr = app.add_subcommand("trend", "feature attribution grouped by another column");
  add_explaining(tr);
  tr->add_option("--feature", f.feature, "attributed feature")->required();
  tr->add_option("--by", f.by, "grouping feature (numeric: per value, categorical: per level)")->required();

  auto* quote = app.add_subcommand("quote", "credit/penalty for modified options on a baseline row");
  add_explaining(quote);
  quote->add_option("--row", f.base_row, "baseline row index");
  quote->add_option("--set", f.set, "feature=value override (repeatable)");

  CLI11_PARSE(app, argc, argv);

  try {
    const RunConfig c = resolve(f);
    if (*synth) cmd_synth(c);
    else if (*ingest) cmd_ingest(c);
    else if (*cluster) cmd_cluster(c);
    else if (*train_cmd) cmd_train(c, f.out);
    else if (*eval) cmd_eval(c, f.order_by, f.group_by);
    else if (*explain) cmd_explain(c, f.row_list, f.interactions);
    else if (*cmp) cmd_compare(c, f.base_row, f.variant_row);
    else if (*dep) cmd_dependence(c, f.feature, f.interactions);
    else if (*imp) cmd_importance(c);
    else if (*tr) cmd_trend(c, f.feature, f.by);
    else if (*quote) cmd_quote(c, f.base_row, f.set);
  } catch (const std::exception& e) {
    std::cerr << "shapcost: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
