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

// Interventional Shapley attributions for oblivious-tree ensembles.
//
// The coalition value is the do-expectation
//
//   v(S) = 1/B * sum_b f(x_S, z_b)
//
// where features in S come from the explained row x and the rest from
// background row z_b, drawn from the marginal (not conditional) reference
// distribution. Two routes compute the same numbers:
//
//  * exact: enumerate all 2^M coalitions with the Shapley weights
//    |S|!(M-|S|-1)!/M!, memoising v per mask;
//  * fast: decompose by linearity into one game per (tree, background row).
//    For a fixed (x, z) pair each reachable leaf is a unanimity-style game
//    "features A taken from x, features B taken from z", whose Shapley
//    values have a closed form, so no coalition enumeration is needed.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <exception>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "shapcost/common.hpp"
#include "shapcost/gbdt.hpp"

namespace shapcost {

inline constexpr std::size_t kMaxExactFeatures = 20;
inline constexpr std::size_t kMaxExactInteractionFeatures = 16;

/// Bit i set: feature i is taken from the explained row; clear: from the
/// background row.
class CoalitionMask {
 public:
  explicit CoalitionMask(std::size_t m, bool all_observed = false) : bits_(m, all_observed) {}

  static CoalitionMask from_bits(std::uint64_t bits, std::size_t m) {
    CoalitionMask mask(m);
    for (std::size_t i = 0; i < m; ++i) mask.bits_[i] = (bits >> i) & 1u;
    return mask;
  }

  std::size_t size() const { return bits_.size(); }
  bool observed(std::size_t i) const { return bits_[i]; }
  void set(std::size_t i, bool observed = true) { bits_[i] = observed; }
  std::size_t count() const { return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), true)); }

 private:
  std::vector<bool> bits_;
};

/// Reference rows (encoded feature space) that stand in for unobserved
/// features.
class BackgroundSet {
 public:
  explicit BackgroundSet(Matrix rows) : rows_(std::move(rows)) {
    if (rows_.rows == 0) throw Error("background set needs at least one row");
  }

  std::size_t size() const { return rows_.rows; }
  std::size_t features() const { return rows_.cols; }
  std::span<const double> row(std::size_t b) const { return rows_.row(b); }
  const Matrix& rows() const { return rows_; }

 private:
  Matrix rows_;
};

/// Uniform sample without replacement of `size` rows (all rows when the
/// table is smaller), kept in their original order.
inline BackgroundSet sample_background(const Matrix& data, std::size_t size, std::uint64_t seed) {
  if (data.rows == 0) throw Error("cannot sample a background from an empty table");
  std::vector<std::size_t> idx(data.rows);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (size < data.rows) {
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(size);
    std::sort(idx.begin(), idx.end());
  }
  Matrix out(idx.size(), data.cols);
  for (std::size_t k = 0; k < idx.size(); ++k)
    std::copy_n(data.row(idx[k]).begin(), data.cols, out.row(k).begin());
  return BackgroundSet(std::move(out));
}

struct AttributionVector {
  std::string instance_id;
  double phi0 = 0.0;        // mean background prediction
  std::vector<double> phi;  // one credit per feature
  double prediction = 0.0;  // f(x)
};

/// Symmetric M x M matrix of pairwise interaction values; the diagonal holds
/// main effects, so each row sums to the feature's Shapley value.
struct InteractionMatrix {
  std::size_t m = 0;
  std::vector<double> values;
  std::vector<double> phi;
  double phi0 = 0.0;
  double prediction = 0.0;

  InteractionMatrix() = default;
  explicit InteractionMatrix(std::size_t n) : m(n), values(n * n, 0.0), phi(n, 0.0) {}
  double& at(std::size_t i, std::size_t j) { return values[i * m + j]; }
  double at(std::size_t i, std::size_t j) const { return values[i * m + j]; }
};

namespace detail {

inline void check_inputs(const Ensemble& model, std::span<const double> x, const BackgroundSet& bg) {
  if (x.size() != model.features())
    throw Error("instance has " + std::to_string(x.size()) + " features, model expects " +
                std::to_string(model.features()));
  if (bg.features() != model.features())
    throw Error("background has " + std::to_string(bg.features()) + " features, model expects " +
                std::to_string(model.features()));
}

inline void compose(std::span<const double> x, std::span<const double> z, const CoalitionMask& mask,
                    std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mask.observed(i) ? x[i] : z[i];
}

inline void compose(std::span<const double> x, std::span<const double> z, std::uint64_t bits,
                    std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (bits >> i) & 1u ? x[i] : z[i];
}

inline double factorial(std::size_t n) {
  double f = 1.0;
  for (std::size_t k = 2; k <= n; ++k) f *= static_cast<double>(k);
  return f;
}

inline double binomial(std::size_t n, std::size_t k) {
  double c = 1.0;
  for (std::size_t i = 1; i <= k; ++i) c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(c);
}

}  // namespace detail

/// |S|!(M-|S|-1)!/M!, computed as 1/(M * C(M-1, |S|)).
inline double shapley_weight(std::size_t m, std::size_t s) {
  return 1.0 / (static_cast<double>(m) * detail::binomial(m - 1, s));
}

/// |S|!(M-|S|-2)!/(2(M-1)!), computed as 1/(2(M-1) * C(M-2, |S|)).
inline double interaction_weight(std::size_t m, std::size_t s) {
  return 1.0 / (2.0 * static_cast<double>(m - 1) * detail::binomial(m - 2, s));
}

inline double value_function(const Ensemble& model, std::span<const double> x, const CoalitionMask& mask,
                             const BackgroundSet& bg) {
  detail::check_inputs(model, x, bg);
  if (mask.size() != model.features()) throw Error("coalition mask length does not match feature count");
  std::vector<double> row(x.size());
  CompensatedSum s;
  for (std::size_t b = 0; b < bg.size(); ++b) {
    detail::compose(x, bg.row(b), mask, row);
    s.add(model.predict(row));
  }
  return s.value() / static_cast<double>(bg.size());
}

/// Brute-force Shapley values over all 2^M coalitions.
inline AttributionVector shapley_exact(const Ensemble& model, std::span<const double> x, const BackgroundSet& bg) {
  detail::check_inputs(model, x, bg);
  const std::size_t m = model.features();
  if (m > kMaxExactFeatures)
    throw Error("shapley_exact supports at most " + std::to_string(kMaxExactFeatures) + " features (model has " +
                std::to_string(m) + "); use shapley_fast");
  const std::uint64_t n_masks = std::uint64_t{1} << m;
  std::vector<double> v(n_masks);
  std::vector<double> row(m);
  for (std::uint64_t mask = 0; mask < n_masks; ++mask) {
    CompensatedSum s;
    for (std::size_t b = 0; b < bg.size(); ++b) {
      detail::compose(x, bg.row(b), mask, row);
      s.add(model.predict(row));
    }
    v[mask] = s.value() / static_cast<double>(bg.size());
  }
  std::vector<double> w(m);
  for (std::size_t s = 0; s < m; ++s) w[s] = shapley_weight(m, s);
  std::vector<CompensatedSum> acc(m);
  for (std::uint64_t mask = 0; mask < n_masks; ++mask) {
    const auto size = static_cast<std::size_t>(std::popcount(mask));
    for (std::size_t i = 0; i < m; ++i) {
      if ((mask >> i) & 1u) continue;
      acc[i].add(w[size] * (v[mask | (std::uint64_t{1} << i)] - v[mask]));
    }
  }
  AttributionVector out;
  out.phi0 = v[0];
  out.prediction = v[n_masks - 1];
  out.phi.resize(m);
  for (std::size_t i = 0; i < m; ++i) out.phi[i] = acc[i].value();
  return out;
}

namespace detail {

// Walks the leaves reachable by a composite of (x, z) for one tree and
// credits each leaf's closed-form Shapley values. Levels where x and z turn
// the same way are forced; where they disagree, the left/right choice pins
// that level's feature to x (set A) or to z (set B).
class PairTreeShap {
 public:
  PairTreeShap(const ObliviousTree& tree, std::span<const double> x, std::span<const double> z,
               std::span<CompensatedSum> acc)
      : tree_(tree), acc_(acc) {
    const std::size_t depth = tree.depth();
    if (depth > x_right_.size()) throw Error("tree depth exceeds 20");
    for (std::size_t d = 0; d < depth; ++d) {
      const auto& s = tree.splits[d];
      x_right_[d] = x[s.feature] > s.threshold;
      z_right_[d] = z[s.feature] > s.threshold;
    }
  }

  void run() { walk(0, 0); }

 private:
  static bool contains(const std::array<std::size_t, 20>& set, std::size_t n, std::size_t f) {
    for (std::size_t k = 0; k < n; ++k)
      if (set[k] == f) return true;
    return false;
  }

  void walk(std::size_t d, std::size_t leaf) {
    if (d == tree_.depth()) {
      credit(tree_.leaf_values[leaf]);
      return;
    }
    const std::size_t f = tree_.splits[d].feature;
    const std::size_t bit = std::size_t{1} << d;
    if (x_right_[d] == z_right_[d]) {
      walk(d + 1, x_right_[d] ? leaf | bit : leaf);
      return;
    }
    const std::size_t x_leaf = x_right_[d] ? leaf | bit : leaf;
    const std::size_t z_leaf = z_right_[d] ? leaf | bit : leaf;
    // x's direction: feature must come from x.
    if (!contains(b_, nb_, f)) {
      const bool added = !contains(a_, na_, f);
      if (added) a_[na_++] = f;
      walk(d + 1, x_leaf);
      if (added) --na_;
    }
    // z's direction: feature must come from z.
    if (!contains(a_, na_, f)) {
      const bool added = !contains(b_, nb_, f);
      if (added) b_[nb_++] = f;
      walk(d + 1, z_leaf);
      if (added) --nb_;
    }
  }

  // g(S) = value * [A subset of S and B disjoint from S]:
  //   i in A gets  value * (|A|-1)! |B|! / (|A|+|B|)!
  //   i in B gets -value * |A|! (|B|-1)! / (|A|+|B|)!
  void credit(double value) {
    const std::size_t n = na_ + nb_;
    if (n == 0 || value == 0.0) return;
    const double total = factorial(n);
    if (na_ > 0) {
      const double w = factorial(na_ - 1) * factorial(nb_) / total;
      for (std::size_t k = 0; k < na_; ++k) acc_[a_[k]].add(value * w);
    }
    if (nb_ > 0) {
      const double w = factorial(na_) * factorial(nb_ - 1) / total;
      for (std::size_t k = 0; k < nb_; ++k) acc_[b_[k]].add(-value * w);
    }
  }

  const ObliviousTree& tree_;
  std::span<CompensatedSum> acc_;
  std::array<bool, 20> x_right_{};
  std::array<bool, 20> z_right_{};
  std::array<std::size_t, 20> a_{};
  std::array<std::size_t, 20> b_{};
  std::size_t na_ = 0;
  std::size_t nb_ = 0;
};

inline double mean_background_prediction(const Ensemble& model, const BackgroundSet& bg) {
  CompensatedSum s;
  for (std::size_t b = 0; b < bg.size(); ++b) s.add(model.predict(bg.row(b)));
  return s.value() / static_cast<double>(bg.size());
}

}  // namespace detail

/// Exact interventional Shapley values via per-(tree, background row) leaf
/// games. Cost O(T * B * 2^k * D) with k the number of levels where x and
/// the background row disagree; independent of M.
inline AttributionVector shapley_fast(const Ensemble& model, std::span<const double> x, const BackgroundSet& bg) {
  detail::check_inputs(model, x, bg);
  const std::size_t m = model.features();
  std::vector<CompensatedSum> acc(m);
  for (std::size_t b = 0; b < bg.size(); ++b) {
    const auto z = bg.row(b);
    for (const auto& tree : model.trees) detail::PairTreeShap(tree, x, z, acc).run();
  }
  AttributionVector out;
  out.phi0 = detail::mean_background_prediction(model, bg);
  out.prediction = model.predict(x);
  out.phi.resize(m);
  const double scale = model.learning_rate / static_cast<double>(bg.size());
  for (std::size_t i = 0; i < m; ++i) out.phi[i] = acc[i].value() * scale;
  return out;
}

namespace detail {

inline void finish_interactions(InteractionMatrix& out, std::span<CompensatedSum> phi_acc,
                                std::span<CompensatedSum> pair_acc, double scale) {
  const std::size_t m = out.m;
  for (std::size_t i = 0; i < m; ++i) out.phi[i] = phi_acc[i].value() * scale;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) {
      const double v = pair_acc[i * m + j].value() * scale;
      out.at(i, j) = v;
      out.at(j, i) = v;
    }
  for (std::size_t i = 0; i < m; ++i) {
    CompensatedSum off;
    for (std::size_t j = 0; j < m; ++j)
      if (j != i) off.add(out.at(i, j));
    out.at(i, i) = out.phi[i] - off.value();
  }
}

// Shapley values and pairwise interaction values of a small game given by
// its full table `g` over 2^k coalitions: the literal enumeration formulas.
inline void small_game_credits(std::span<const double> g, std::size_t k, std::span<double> phi,
                               std::span<double> pairs /* k*k, upper triangle used */) {
  const std::uint64_t n_masks = std::uint64_t{1} << k;
  std::array<double, 64> w{}, w2{};
  for (std::size_t s = 0; s < k; ++s) w[s] = shapley_weight(k, s);
  for (std::size_t s = 0; s + 2 <= k; ++s) w2[s] = interaction_weight(k, s);
  for (std::size_t i = 0; i < k; ++i) {
    CompensatedSum s;
    for (std::uint64_t mask = 0; mask < n_masks; ++mask) {
      if ((mask >> i) & 1u) continue;
      const auto size = static_cast<std::size_t>(std::popcount(mask));
      s.add(w[size] * (g[mask | (std::uint64_t{1} << i)] - g[mask]));
    }
    phi[i] = s.value();
  }
  if (k < 2) return;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) {
      const std::uint64_t bi = std::uint64_t{1} << i, bj = std::uint64_t{1} << j;
      CompensatedSum s;
      for (std::uint64_t mask = 0; mask < n_masks; ++mask) {
        if (mask & (bi | bj)) continue;
        const auto size = static_cast<std::size_t>(std::popcount(mask));
        const double nabla = (g[mask | bi | bj] - g[mask | bi]) - (g[mask | bj] - g[mask]);
        s.add(w2[size] * nabla);
      }
      pairs[i * k + j] = s.value();
    }
}

}  // namespace detail

/// Pairwise Shapley interaction values by brute-force enumeration over all
/// coalitions of the M features. The game is split per tree (linearity), so
/// a tree that touches a single feature contributes exactly zero to every
/// off-diagonal entry.
inline InteractionMatrix shapley_interactions(const Ensemble& model, std::span<const double> x,
                                              const BackgroundSet& bg) {
  detail::check_inputs(model, x, bg);
  const std::size_t m = model.features();
  if (m > kMaxExactInteractionFeatures)
    throw Error("shapley_interactions supports at most " + std::to_string(kMaxExactInteractionFeatures) +
                " features (model has " + std::to_string(m) + "); use shapley_interactions_fast");
  InteractionMatrix out(m);
  out.phi0 = detail::mean_background_prediction(model, bg);
  out.prediction = model.predict(x);
  if (m == 0) return out;
  const std::uint64_t n_masks = std::uint64_t{1} << m;
  std::vector<CompensatedSum> phi_acc(m), pair_acc(m * m);
  std::vector<double> v(n_masks), row(m), phi(m), pairs(m * m);
  for (const auto& tree : model.trees) {
    for (std::uint64_t mask = 0; mask < n_masks; ++mask) {
      CompensatedSum s;
      for (std::size_t b = 0; b < bg.size(); ++b) {
        detail::compose(x, bg.row(b), mask, row);
        s.add(tree.predict(row));
      }
      v[mask] = s.value();
    }
    detail::small_game_credits(v, m, phi, pairs);
    for (std::size_t i = 0; i < m; ++i) {
      phi_acc[i].add(phi[i]);
      for (std::size_t j = i + 1; j < m; ++j) pair_acc[i * m + j].add(pairs[i * m + j]);
    }
  }
  detail::finish_interactions(out, phi_acc, pair_acc, model.learning_rate / static_cast<double>(bg.size()));
  return out;
}

/// Same quantities as shapley_interactions without the 2^M cost: for each
/// (tree, background row) only features on which x and z route differently
/// can matter, so the game is enumerated over those k <= depth players.
/// Dummy players carry no Shapley or interaction credit, so the local
/// values equal the global ones.
inline InteractionMatrix shapley_interactions_fast(const Ensemble& model, std::span<const double> x,
                                                   const BackgroundSet& bg) {
  detail::check_inputs(model, x, bg);
  const std::size_t m = model.features();
  InteractionMatrix out(m);
  out.phi0 = detail::mean_background_prediction(model, bg);
  out.prediction = model.predict(x);
  std::vector<CompensatedSum> phi_acc(m), pair_acc(m * m);
  std::vector<double> g, phi, pairs;
  std::vector<std::size_t> players;
  std::vector<std::size_t> level_player;
  for (std::size_t b = 0; b < bg.size(); ++b) {
    const auto z = bg.row(b);
    for (const auto& tree : model.trees) {
      const std::size_t depth = tree.depth();
      players.clear();
      level_player.assign(depth, SIZE_MAX);
      std::size_t forced = 0;  // leaf bits where x and z agree
      for (std::size_t d = 0; d < depth; ++d) {
        const auto& s = tree.splits[d];
        const bool xr = x[s.feature] > s.threshold, zr = z[s.feature] > s.threshold;
        if (xr == zr) {
          if (xr) forced |= std::size_t{1} << d;
          continue;
        }
        auto it = std::find(players.begin(), players.end(), s.feature);
        level_player[d] = static_cast<std::size_t>(it - players.begin());
        if (it == players.end()) players.push_back(s.feature);
      }
      const std::size_t k = players.size();
      if (k == 0) continue;
      const std::uint64_t n_masks = std::uint64_t{1} << k;
      g.assign(n_masks, 0.0);
      for (std::uint64_t mask = 0; mask < n_masks; ++mask) {
        std::size_t leaf = forced;
        for (std::size_t d = 0; d < depth; ++d) {
          if (level_player[d] == SIZE_MAX) continue;
          const auto& s = tree.splits[d];
          const double v = (mask >> level_player[d]) & 1u ? x[s.feature] : z[s.feature];
          if (v > s.threshold) leaf |= std::size_t{1} << d;
        }
        g[mask] = tree.leaf_values[leaf];
      }
      phi.assign(k, 0.0);
      pairs.assign(k * k, 0.0);
      detail::small_game_credits(g, k, phi, pairs);
      for (std::size_t p = 0; p < k; ++p) {
        phi_acc[players[p]].add(phi[p]);
        for (std::size_t q = p + 1; q < k; ++q) {
          const std::size_t i = std::min(players[p], players[q]), j = std::max(players[p], players[q]);
          pair_acc[i * m + j].add(pairs[p * k + q]);
        }
      }
    }
  }
  detail::finish_interactions(out, phi_acc, pair_acc, model.learning_rate / static_cast<double>(bg.size()));
  return out;
}

struct ImportanceEntry {
  std::size_t feature = 0;
  double score = 0.0;
};

/// Mean absolute attribution per feature, sorted descending; equal scores
/// keep feature-index order.
inline std::vector<ImportanceEntry> global_importance(std::span<const AttributionVector> attributions) {
  if (attributions.empty()) throw Error("global_importance needs at least one attribution vector");
  const std::size_t m = attributions.front().phi.size();
  std::vector<CompensatedSum> acc(m);
  for (const auto& a : attributions) {
    if (a.phi.size() != m) throw Error("attribution vectors have inconsistent feature counts");
    for (std::size_t i = 0; i < m; ++i) acc[i].add(std::abs(a.phi[i]));
  }
  std::vector<ImportanceEntry> out(m);
  for (std::size_t i = 0; i < m; ++i) out[i] = {i, acc[i].value() / static_cast<double>(attributions.size())};
  std::stable_sort(out.begin(), out.end(), [](const auto& l, const auto& r) { return l.score > r.score; });
  return out;
}

/// shapley_fast for every row of `rows`, parallel over instances.
inline std::vector<AttributionVector> explain_rows(const Ensemble& model, const Matrix& rows, const BackgroundSet& bg,
                                                   std::span<const std::string> ids = {}, std::size_t threads = 1) {
  std::vector<AttributionVector> out(rows.rows);
  parallel_for(rows.rows, threads, [&](std::size_t i) {
    out[i] = shapley_fast(model, rows.row(i), bg);
    out[i].instance_id = i < ids.size() ? ids[i] : std::to_string(i);
  });
  return out;
}

}  // namespace shapcost
