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

// Agglomerative hierarchical clustering for make/model-agnostic market
// segmentation, plus segment labelling by cluster median price.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "shapcost/common.hpp"

namespace shapcost {

enum class Metric { euclidean, standardized_euclidean };
enum class Linkage { single, complete, average };

inline Metric parse_metric(std::string_view s) {
  if (s == "euclidean") return Metric::euclidean;
  if (s == "standardized-euclidean" || s == "standardized_euclidean") return Metric::standardized_euclidean;
  throw Error("unknown metric '" + std::string(s) + "'");
}

inline Linkage parse_linkage(std::string_view s) {
  if (s == "single") return Linkage::single;
  if (s == "complete") return Linkage::complete;
  if (s == "average") return Linkage::average;
  throw Error("unknown linkage '" + std::string(s) + "'");
}

/// Node ids follow the usual linkage-matrix convention: leaves are 0..n-1,
/// the cluster created by merge k is n+k.
struct Merge {
  std::size_t a = 0;
  std::size_t b = 0;
  double height = 0.0;
  std::size_t size = 0;
};

struct Dendrogram {
  std::size_t leaves = 0;
  std::vector<Merge> merges;
};

/// Column z-scores; constant columns are centred only.
inline Matrix standardize(const Matrix& rows) {
  Matrix out = rows;
  for (std::size_t j = 0; j < rows.cols; ++j) {
    CompensatedSum s;
    for (std::size_t i = 0; i < rows.rows; ++i) s.add(rows.at(i, j));
    const double mu = s.value() / static_cast<double>(rows.rows);
    CompensatedSum ss;
    for (std::size_t i = 0; i < rows.rows; ++i) ss.add((rows.at(i, j) - mu) * (rows.at(i, j) - mu));
    const double sd = std::sqrt(ss.value() / static_cast<double>(rows.rows));
    for (std::size_t i = 0; i < rows.rows; ++i) out.at(i, j) = sd > 0.0 ? (rows.at(i, j) - mu) / sd : 0.0;
  }
  return out;
}

/// Agglomeration with Lance-Williams updates over a condensed distance
/// matrix. Among equally close pairs the one with the lowest (slot i,
/// slot j) is merged first, slots being the lowest original row index in
/// each cluster. Each row caches its nearest higher slot, so a merge only
/// rescans the rows whose cached neighbour was touched.
inline Dendrogram agglomerate(const Matrix& rows, Metric metric = Metric::standardized_euclidean,
                              Linkage linkage = Linkage::average) {
  const std::size_t n = rows.rows;
  if (n < 2) throw Error("clustering needs at least 2 rows");
  for (double v : rows.values)
    if (!std::isfinite(v)) throw Error("clustering input contains non-finite values");
  const Matrix pts = metric == Metric::standardized_euclidean ? standardize(rows) : rows;

  // condensed upper triangle, i < j
  std::vector<double> dist(n * (n - 1) / 2);
  auto at = [&](std::size_t i, std::size_t j) -> double& {
    if (i > j) std::swap(i, j);
    return dist[i * n - i * (i + 1) / 2 + (j - i - 1)];
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < pts.cols; ++c) {
        const double d = pts.at(i, c) - pts.at(j, c);
        s += d * d;
      }
      at(i, j) = std::sqrt(s);
    }

  constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<bool> active(n, true);
  std::vector<std::size_t> node(n), size(n, 1), nn(n, none);
  std::vector<double> nn_dist(n, inf);
  std::iota(node.begin(), node.end(), std::size_t{0});
  auto rescan = [&](std::size_t i) {
    nn[i] = none;
    nn_dist[i] = inf;
    for (std::size_t j = i + 1; j < n; ++j)
      if (active[j] && at(i, j) < nn_dist[i]) nn_dist[i] = at(i, j), nn[i] = j;
  };
  for (std::size_t i = 0; i + 1 < n; ++i) rescan(i);

  Dendrogram out;
  out.leaves = n;
  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t bi = none;
    for (std::size_t i = 0; i < n; ++i)
      if (active[i] && nn[i] != none && (bi == none || nn_dist[i] < nn_dist[bi])) bi = i;
    const std::size_t bj = nn[bi];
    const double best = nn_dist[bi];
    out.merges.push_back({std::min(node[bi], node[bj]), std::max(node[bi], node[bj]), best, size[bi] + size[bj]});
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == bi || k == bj) continue;
      const double di = at(bi, k), dj = at(bj, k);
      double d = 0.0;
      switch (linkage) {
        case Linkage::single: d = std::min(di, dj); break;
        case Linkage::complete: d = std::max(di, dj); break;
        case Linkage::average:
          d = (static_cast<double>(size[bi]) * di + static_cast<double>(size[bj]) * dj) /
              static_cast<double>(size[bi] + size[bj]);
          break;
      }
      at(bi, k) = d;
    }
    active[bj] = false;
    size[bi] += size[bj];
    node[bi] = n + step;
    rescan(bi);
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == bi) continue;
      if (nn[k] == bi || nn[k] == bj) {
        rescan(k);
      } else if (k < bi) {
        const double d = at(k, bi);
        if (d < nn_dist[k] || (d == nn_dist[k] && bi < nn[k])) nn_dist[k] = d, nn[k] = bi;
      }
    }
  }
  return out;
}

/// Flat clustering with k clusters: replay the first n-k merges. Labels are
/// 0..k-1 in order of each cluster's first member row.
inline std::vector<std::size_t> cut(const Dendrogram& tree, std::size_t k) {
  const std::size_t n = tree.leaves;
  if (k < 1 || k > n) throw Error("cluster count k must be in [1, " + std::to_string(n) + "]");
  std::vector<std::size_t> parent(2 * n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (std::size_t s = 0; s + k < n; ++s) {
    const auto& m = tree.merges[s];
    parent[find(m.a)] = n + s;
    parent[find(m.b)] = n + s;
  }
  std::map<std::size_t, std::size_t> label_of_root;
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    auto [it, inserted] = label_of_root.try_emplace(r, label_of_root.size());
    labels[i] = it->second;
  }
  return labels;
}

struct SegmentRule {
  std::vector<double> thresholds;  // on cluster median price, strictly increasing
  std::vector<std::string> names = {"base", "luxury", "prestige"};
  double outlier_cutoff = 250000.0;
};

struct SegmentAssignment {
  std::vector<int> segment;                // per row; -1 for dropped rows
  std::vector<std::string> names;          // segment index -> name
  std::vector<std::size_t> dropped_rows;
  std::vector<std::size_t> dropped_clusters;
  std::vector<double> cluster_median;      // per cluster label
  std::vector<int> cluster_segment;        // per cluster label; -1 dropped
};

inline double median_of(std::vector<double> v) {
  if (v.empty()) throw Error("median of empty sequence");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size();
  return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

/// Drop clusters whose median price exceeds the outlier cutoff and label the
/// rest. Without thresholds, clusters are ranked by median price and the
/// r-th cheapest gets names[min(r, names.size()-1)]; with thresholds, a
/// cluster's segment is the number of thresholds at or below its median.
/// Equal medians keep cluster-label order.
inline SegmentAssignment assign_segments(std::span<const std::size_t> assignment, std::span<const double> prices,
                                         const SegmentRule& rule = {}) {
  if (assignment.size() != prices.size()) throw Error("assignment and prices have different lengths");
  if (rule.names.empty()) throw Error("segment rule needs at least one name");
  for (std::size_t k = 1; k < rule.thresholds.size(); ++k)
    if (!(rule.thresholds[k] > rule.thresholds[k - 1])) throw Error("segment thresholds must be strictly increasing");
  if (!rule.thresholds.empty() && rule.names.size() < rule.thresholds.size() + 1)
    throw Error("segment rule needs one name per threshold interval");

  std::size_t k = 0;
  for (std::size_t a : assignment) k = std::max(k, a + 1);
  std::vector<std::vector<double>> members(k);
  for (std::size_t i = 0; i < assignment.size(); ++i) members[assignment[i]].push_back(prices[i]);

  SegmentAssignment out;
  out.names = rule.names;
  out.cluster_median.assign(k, 0.0);
  out.cluster_segment.assign(k, -1);
  std::vector<std::size_t> kept;
  for (std::size_t c = 0; c < k; ++c) {
    if (members[c].empty()) continue;
    out.cluster_median[c] = median_of(members[c]);
    if (out.cluster_median[c] > rule.outlier_cutoff)
      out.dropped_clusters.push_back(c);
    else
      kept.push_back(c);
  }
  if (kept.empty()) throw Error("every cluster exceeds the outlier cutoff; nothing left to segment");
  std::stable_sort(kept.begin(), kept.end(),
                   [&](std::size_t l, std::size_t r) { return out.cluster_median[l] < out.cluster_median[r]; });
  for (std::size_t r = 0; r < kept.size(); ++r) {
    const std::size_t c = kept[r];
    if (rule.thresholds.empty()) {
      out.cluster_segment[c] = static_cast<int>(std::min(r, rule.names.size() - 1));
    } else {
      const auto below = std::upper_bound(rule.thresholds.begin(), rule.thresholds.end(), out.cluster_median[c]) -
                         rule.thresholds.begin();
      out.cluster_segment[c] = static_cast<int>(below);
    }
  }
  out.segment.resize(assignment.size());
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    out.segment[i] = out.cluster_segment[assignment[i]];
    if (out.segment[i] < 0) out.dropped_rows.push_back(i);
  }
  return out;
}

}  // namespace shapcost
