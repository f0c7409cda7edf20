// Copyright 2026 The shapcost Authors. Licensed under the Apache License, Version 2.0.
#include <gtest/gtest.h>

#include <map>
#include <random>

#include "shapcost/cluster.hpp"

using namespace shapcost;

namespace {
Matrix column(std::vector<double> v) {
  Matrix m(v.size(), 1);
  m.values = v;
  return m;
}

// Reference agglomeration: full rescan of every active pair each step.
Dendrogram naive(const Matrix& pts, Linkage linkage) {
  const std::size_t n = pts.rows;
  std::vector<std::vector<double>> d(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0;
      for (std::size_t c = 0; c < pts.cols; ++c) s += (pts.at(i, c) - pts.at(j, c)) * (pts.at(i, c) - pts.at(j, c));
      d[i][j] = std::sqrt(s);
    }
  std::vector<std::vector<std::size_t>> members(n);
  std::vector<std::size_t> node(n);
  for (std::size_t i = 0; i < n; ++i) members[i] = {i}, node[i] = i;
  std::vector<bool> active(n, true);
  Dendrogram out;
  out.leaves = n;
  for (std::size_t step = 0; step + 1 < n; ++step) {
    double best = INFINITY;
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!active[i] || !active[j]) continue;
        double v = linkage == Linkage::single ? INFINITY : 0.0;
        for (std::size_t a : members[i])
          for (std::size_t b : members[j]) {
            if (linkage == Linkage::single) v = std::min(v, d[a][b]);
            if (linkage == Linkage::complete) v = std::max(v, d[a][b]);
            if (linkage == Linkage::average) v += d[a][b];
          }
        if (linkage == Linkage::average) v /= static_cast<double>(members[i].size() * members[j].size());
        if (v < best - 1e-12) best = v, bi = i, bj = j;
      }
    out.merges.push_back({std::min(node[bi], node[bj]), std::max(node[bi], node[bj]), best,
                          members[bi].size() + members[bj].size()});
    members[bi].insert(members[bi].end(), members[bj].begin(), members[bj].end());
    active[bj] = false;
    node[bi] = n + step;
  }
  return out;
}

double pair_accuracy(const std::vector<std::size_t>& a, const std::vector<int>& truth) {
  std::size_t agree = 0, total = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      agree += (a[i] == a[j]) == (truth[i] == truth[j]);
      ++total;
    }
  return static_cast<double>(agree) / static_cast<double>(total);
}
}  // namespace

TEST(Agglomerate, CollinearSingleLinkage) {
  auto d = agglomerate(column({0, 1, 10}), Metric::euclidean, Linkage::single);
  ASSERT_EQ(d.merges.size(), 2u);
  EXPECT_EQ(d.merges[0].a, 0u);
  EXPECT_EQ(d.merges[0].b, 1u);
  EXPECT_EQ(d.merges[0].height, 1.0);
  EXPECT_EQ(d.merges[1].a, 2u);
  EXPECT_EQ(d.merges[1].b, 3u);
  EXPECT_EQ(d.merges[1].height, 9.0);
  EXPECT_EQ(d.merges[1].size, 3u);
}

TEST(Agglomerate, TwoPointsAndIdentical) {
  auto d = agglomerate(column({2, 2}), Metric::euclidean, Linkage::average);
  ASSERT_EQ(d.merges.size(), 1u);
  EXPECT_EQ(d.merges[0].height, 0.0);
  auto e = agglomerate(column({1, 4}), Metric::euclidean, Linkage::complete);
  EXPECT_EQ(e.merges[0].height, 3.0);
}

TEST(Agglomerate, Errors) {
  EXPECT_THROW(agglomerate(column({1})), Error);
  EXPECT_THROW(agglomerate(column({1, NAN})), Error);
  EXPECT_THROW(agglomerate(column({1, INFINITY})), Error);
}

TEST(Agglomerate, TieBreakLowestPair) {
  // equal gaps: (0,1) merges before (1,2) and (2,3)
  auto d = agglomerate(column({0, 1, 2, 3}), Metric::euclidean, Linkage::single);
  EXPECT_EQ(d.merges[0].a, 0u);
  EXPECT_EQ(d.merges[0].b, 1u);
}

TEST(Agglomerate, MatchesBruteForceReference) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (auto linkage : {Linkage::single, Linkage::complete, Linkage::average}) {
    for (int trial = 0; trial < 5; ++trial) {
      Matrix pts(25, 3);
      for (double& v : pts.values) v = g(rng);
      auto fast = agglomerate(pts, Metric::euclidean, linkage);
      auto ref = naive(pts, linkage);
      for (std::size_t k = 0; k < ref.merges.size(); ++k) {
        EXPECT_EQ(fast.merges[k].a, ref.merges[k].a);
        EXPECT_EQ(fast.merges[k].b, ref.merges[k].b);
        EXPECT_NEAR(fast.merges[k].height, ref.merges[k].height, 1e-9);
      }
    }
  }
}

TEST(Agglomerate, NoInversions) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 10);
  for (auto linkage : {Linkage::single, Linkage::complete, Linkage::average})
    for (int trial = 0; trial < 20; ++trial) {
      Matrix pts(5 + rng() % 40, 2);
      for (double& v : pts.values) v = u(rng);
      auto d = agglomerate(pts, Metric::standardized_euclidean, linkage);
      for (std::size_t k = 1; k < d.merges.size(); ++k)
        EXPECT_GE(d.merges[k].height, d.merges[k - 1].height - 1e-12);
    }
}

TEST(Standardize, UnitInvariance) {
  Matrix a(4, 2), b(4, 2);
  std::vector<double> w{2.5, 3.0, 4.2, 3.3}, r{15, 17, 19, 16};
  for (std::size_t i = 0; i < 4; ++i) {
    a.at(i, 0) = w[i], a.at(i, 1) = r[i];
    b.at(i, 0) = w[i] * 1000, b.at(i, 1) = r[i] * 2.54;
  }
  auto da = agglomerate(a), db = agglomerate(b);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(da.merges[k].a, db.merges[k].a);
    EXPECT_NEAR(da.merges[k].height, db.merges[k].height, 1e-9);
  }
}

TEST(Cut, ExtremesAndCollinear) {
  auto d = agglomerate(column({0, 1, 10}), Metric::euclidean, Linkage::single);
  EXPECT_EQ(cut(d, 3), (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(cut(d, 1), (std::vector<std::size_t>{0, 0, 0}));
  EXPECT_EQ(cut(d, 2), (std::vector<std::size_t>{0, 0, 1}));
  EXPECT_THROW(cut(d, 0), Error);
  EXPECT_THROW(cut(d, 4), Error);
}

TEST(Cut, RefinesCoarserCut) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Matrix pts(40, 2);
  for (double& v : pts.values) v = g(rng);
  auto d = agglomerate(pts);
  for (std::size_t k = 2; k <= 10; ++k) {
    auto fine = cut(d, k), coarse = cut(d, k - 1);
    std::map<std::size_t, std::size_t> parent;
    for (std::size_t i = 0; i < fine.size(); ++i) {
      auto [it, fresh] = parent.try_emplace(fine[i], coarse[i]);
      EXPECT_EQ(it->second, coarse[i]);
    }
  }
}

TEST(Cut, RowPermutationPermutesAssignment) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  Matrix pts(30, 2);
  for (double& v : pts.values) v = g(rng);
  std::vector<std::size_t> perm(30);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix shuffled(30, 2);
  for (std::size_t i = 0; i < 30; ++i)
    for (std::size_t c = 0; c < 2; ++c) shuffled.at(i, c) = pts.at(perm[i], c);
  auto a = cut(agglomerate(pts), 4), b = cut(agglomerate(shuffled), 4);
  for (std::size_t i = 0; i < 30; ++i)
    for (std::size_t j = 0; j < 30; ++j) EXPECT_EQ(a[perm[i]] == a[perm[j]], b[i] == b[j]);
}

TEST(Cut, PlantedBlobsRecovered) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  Matrix pts(200, 2);
  std::vector<int> truth(200);
  for (std::size_t i = 0; i < 200; ++i) {
    truth[i] = i % 2;
    pts.at(i, 0) = g(rng) + (truth[i] ? 10.0 : 0.0);
    pts.at(i, 1) = g(rng);
  }
  for (auto linkage : {Linkage::single, Linkage::complete, Linkage::average})
    EXPECT_GE(pair_accuracy(cut(agglomerate(pts, Metric::euclidean, linkage), 2), truth), 0.99);
}

TEST(Segments, OutlierDroppedAndOrdered) {
  std::vector<std::size_t> a{0, 0, 1, 1, 2, 2};
  std::vector<double> p{60000, 62000, 300000, 310000, 25000, 26000};
  auto s = assign_segments(a, p);
  EXPECT_EQ(s.cluster_segment[2], 0);
  EXPECT_EQ(s.cluster_segment[0], 1);
  EXPECT_EQ(s.cluster_segment[1], -1);
  EXPECT_EQ(s.dropped_clusters, (std::vector<std::size_t>{1}));
  EXPECT_EQ(s.dropped_rows, (std::vector<std::size_t>{2, 3}));
  EXPECT_EQ(s.names[s.segment[0]], "luxury");
  EXPECT_EQ(s.names[s.segment[4]], "base");
  EXPECT_EQ(s.cluster_median[0], 61000.0);
}

TEST(Segments, TiesKeepLabelOrderAndErrors) {
  std::vector<std::size_t> a{0, 1};
  std::vector<double> p{30000, 30000};
  auto s = assign_segments(a, p);
  EXPECT_EQ(s.cluster_segment[0], 0);
  EXPECT_EQ(s.cluster_segment[1], 1);
  EXPECT_THROW(assign_segments(a, std::vector<double>{300000, 400000}), Error);
  EXPECT_THROW(assign_segments(a, std::vector<double>{1}), Error);
  SegmentRule bad;
  bad.thresholds = {50000, 40000};
  EXPECT_THROW(assign_segments(a, p, bad), Error);
}

TEST(Segments, ExplicitThresholds) {
  SegmentRule r;
  r.thresholds = {40000, 90000};
  std::vector<std::size_t> a{0, 1, 2, 3};
  std::vector<double> p{20000, 50000, 120000, 35000};
  auto s = assign_segments(a, p, r);
  EXPECT_EQ(s.cluster_segment, (std::vector<int>{0, 1, 2, 0}));
}
